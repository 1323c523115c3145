#pragma once

// Preconditioners for the coupled pressure-temperature Newton systems.
//
// block: approximate block factorization. One AMG V-cycle stands in for
//   App^{-1} and one for the inverse of a Schur-complement approximation;
//   the apply costs three V-cycles and no full-system factorization.
// cpr: constrained pressure residual. Stage one solves a (possibly
//   decoupled) pressure system with one AMG V-cycle, stage two applies
//   ILU(0) of the full system in cell-interleaved ordering:
//     M^{-1} = M2^{-1} (I - A M1^{-1}) + M1^{-1}.
//
// Vectors are stacked: entries [0,n) are pressure, [n,2n) temperature.
// The solve_* members are plain std::functions so callers can substitute
// exact solves when validating the algebra.

#include <climits>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "amg.hpp"
#include "csr.hpp"
#include "discretization.hpp"
#include "gmres.hpp"
#include "ilu0.hpp"

namespace thermoflow {

enum class PrecondKind { block, cpr };
enum class SchurKind { s_tilde_T, s_att, s_diag };
enum class DecouplingKind { none, quasi_impes, true_impes };

inline PrecondKind parse_precond_kind(const std::string& s) {
    if (s == "block") return PrecondKind::block;
    if (s == "cpr") return PrecondKind::cpr;
    throw std::invalid_argument("unknown preconditioner: " + s);
}

inline SchurKind parse_schur_kind(const std::string& s) {
    if (s == "s_tilde_T") return SchurKind::s_tilde_T;
    if (s == "s_att") return SchurKind::s_att;
    if (s == "s_diag") return SchurKind::s_diag;
    throw std::invalid_argument("unknown schur approximation: " + s);
}

inline DecouplingKind parse_decoupling_kind(const std::string& s) {
    if (s == "none") return DecouplingKind::none;
    if (s == "quasi_impes") return DecouplingKind::quasi_impes;
    if (s == "true_impes") return DecouplingKind::true_impes;
    throw std::invalid_argument("unknown decoupling: " + s);
}

inline const char* to_string(PrecondKind k) {
    return k == PrecondKind::block ? "block" : "cpr";
}

inline const char* to_string(SchurKind k) {
    switch (k) {
        case SchurKind::s_tilde_T: return "s_tilde_T";
        case SchurKind::s_att: return "s_att";
        default: return "s_diag";
    }
}

inline const char* to_string(DecouplingKind k) {
    switch (k) {
        case DecouplingKind::none: return "none";
        case DecouplingKind::quasi_impes: return "quasi_impes";
        default: return "true_impes";
    }
}

struct PreconditionerConfig {
    PrecondKind kind = PrecondKind::block;
    SchurKind schur = SchurKind::s_tilde_T;
    DecouplingKind decoupling = DecouplingKind::none;
    AmgOptions amg;
};

// y = A x for the stacked layout.
inline LinearOp stacked_op(const BlockJacobian& J) {
    return [&J](const std::vector<double>& x, std::vector<double>& y) {
        const int n = J.App.rows;
        if (static_cast<int>(x.size()) != 2 * n)
            throw std::invalid_argument("stacked_op: size mismatch");
        const std::vector<double> xp(x.begin(), x.begin() + n);
        const std::vector<double> xT(x.begin() + n, x.end());
        std::vector<double> yp, yT;
        block_apply(J, xp, xT, yp, yT);
        y.resize(2 * n);
        std::copy(yp.begin(), yp.end(), y.begin());
        std::copy(yT.begin(), yT.end(), y.begin() + n);
    };
}

inline std::vector<double> stacked_rhs(const BlockJacobian& J) {
    std::vector<double> b(J.b_p);
    b.insert(b.end(), J.b_T.begin(), J.b_T.end());
    return b;
}

// Stacked [p; T] <-> cell-interleaved (cell i occupies rows 2i, 2i+1).
inline void interleave(const std::vector<double>& stacked, std::vector<double>& out) {
    const int n = static_cast<int>(stacked.size()) / 2;
    out.resize(2 * n);
    for (int i = 0; i < n; ++i) {
        out[2 * i] = stacked[i];
        out[2 * i + 1] = stacked[n + i];
    }
}

inline void deinterleave(const std::vector<double>& inter, std::vector<double>& out) {
    const int n = static_cast<int>(inter.size()) / 2;
    out.resize(2 * n);
    for (int i = 0; i < n; ++i) {
        out[i] = inter[2 * i];
        out[n + i] = inter[2 * i + 1];
    }
}

// Full 2n x 2n system in cell-interleaved ordering; keeps the per-cell
// 2x2 blocks contiguous so ILU(0) sees the local coupling.
inline CsrMatrix build_interleaved(const BlockJacobian& J) {
    const int n = J.App.rows;
    CsrMatrix M;
    M.rows = M.cols = 2 * n;
    M.row_ptr.assign(2 * n + 1, 0);
    const auto merge_row = [&M](const CsrMatrix& L, const CsrMatrix& R, int i) {
        int ql = L.row_ptr[i], qr = R.row_ptr[i];
        while (ql < L.row_ptr[i + 1] || qr < R.row_ptr[i + 1]) {
            const int cl = ql < L.row_ptr[i + 1] ? 2 * L.col_idx[ql] : INT_MAX;
            const int cr = qr < R.row_ptr[i + 1] ? 2 * R.col_idx[qr] + 1 : INT_MAX;
            if (cl < cr) {
                M.col_idx.push_back(cl);
                M.values.push_back(L.values[ql++]);
            } else {
                M.col_idx.push_back(cr);
                M.values.push_back(R.values[qr++]);
            }
        }
    };
    for (int i = 0; i < n; ++i) {
        merge_row(J.App, J.ApT, i);
        M.row_ptr[2 * i + 1] = static_cast<int>(M.col_idx.size());
        merge_row(J.ATp, J.ATT, i);
        M.row_ptr[2 * i + 2] = static_cast<int>(M.col_idx.size());
    }
    return M;
}

// Row multipliers d_i so that the decoupled pressure equation is
// row_i(App) - d_i row_i(ATp). quasi_impes uses the diagonal ratio,
// true_impes the column-sum ratio.
inline std::vector<double> decoupling_vector(const BlockJacobian& J, DecouplingKind kind) {
    const int n = J.App.rows;
    std::vector<double> d(n, 0.0);
    if (kind == DecouplingKind::none) return d;
    if (kind == DecouplingKind::quasi_impes) {
        for (int i = 0; i < n; ++i) {
            const double den = J.ATT.at(i, i);
            if (den == 0.0)
                throw std::runtime_error("quasi_impes: zero diagonal in temperature block at row " +
                                         std::to_string(i));
            d[i] = J.ApT.at(i, i) / den;
        }
        return d;
    }
    std::vector<double> num(n, 0.0), den(n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int q = J.ApT.row_ptr[i]; q < J.ApT.row_ptr[i + 1]; ++q)
            num[J.ApT.col_idx[q]] += J.ApT.values[q];
        for (int q = J.ATT.row_ptr[i]; q < J.ATT.row_ptr[i + 1]; ++q)
            den[J.ATT.col_idx[q]] += J.ATT.values[q];
    }
    for (int i = 0; i < n; ++i) {
        if (den[i] == 0.0)
            throw std::runtime_error("true_impes: zero column sum in temperature block at column " +
                                     std::to_string(i));
        d[i] = num[i] / den[i];
    }
    return d;
}

inline CsrMatrix row_scale(const CsrMatrix& A, const std::vector<double>& d) {
    CsrMatrix B = A;
    for (int i = 0; i < A.rows; ++i)
        for (int q = A.row_ptr[i]; q < A.row_ptr[i + 1]; ++q) B.values[q] *= d[i];
    return B;
}

// Transformed pressure row: App - D ATp, ApT - D ATT, b_p - D b_T.
// The temperature row is untouched.
inline BlockJacobian apply_decoupling(const BlockJacobian& J, const std::vector<double>& d) {
    BlockJacobian out;
    out.App = csr_add(1.0, J.App, -1.0, row_scale(J.ATp, d));
    out.ApT = csr_add(1.0, J.ApT, -1.0, row_scale(J.ATT, d));
    out.ATp = J.ATp;
    out.ATT = J.ATT;
    out.b_T = J.b_T;
    out.b_p = J.b_p;
    if (!out.b_p.empty() && !out.b_T.empty())
        for (std::size_t i = 0; i < out.b_p.size(); ++i) out.b_p[i] -= d[i] * out.b_T[i];
    return out;
}

// ATT - ATp diag(App)^{-1} ApT; the purely diagonal pressure elimination.
inline CsrMatrix schur_diag_matrix(const BlockJacobian& J) {
    const std::vector<double> dp = diagonal(J.App);
    CsrMatrix scaled = J.ATp;   // column j picks up 1/App_jj
    for (double v : dp)
        if (v == 0.0) throw std::runtime_error("schur_diag: zero diagonal in pressure block");
    for (int q = 0; q < scaled.nnz(); ++q) scaled.values[q] /= dp[scaled.col_idx[q]];
    return csr_add(1.0, J.ATT, -1.0, matmul(scaled, J.ApT));
}

struct PrecondInstance {
    PreconditionerConfig config;
    const BlockJacobian* jac = nullptr;   // not owned; must outlive the instance
    int n = 0;

    // block factorization pieces
    CsrMatrix schur;
    std::shared_ptr<AmgHierarchy> amg_pressure;
    std::shared_ptr<AmgHierarchy> amg_schur;
    std::function<void(const std::vector<double>&, std::vector<double>&)> solve_pressure;
    std::function<void(const std::vector<double>&, std::vector<double>&)> solve_schur;

    // cpr pieces
    std::vector<double> decouple;          // empty when decoupling is none
    std::shared_ptr<Ilu0Factor> ilu;       // interleaved full system
    std::function<void(const std::vector<double>&, std::vector<double>&)> solve_full;
};

inline PrecondInstance build_preconditioner(const BlockJacobian& J,
                                            const PreconditionerConfig& cfg,
                                            const CsrMatrix* schur_advection = nullptr) {
    PrecondInstance P;
    P.config = cfg;
    P.jac = &J;
    P.n = J.App.rows;

    if (cfg.kind == PrecondKind::block) {
        if (cfg.decoupling != DecouplingKind::none)
            throw std::invalid_argument("decoupling applies to the cpr preconditioner only");
        switch (cfg.schur) {
            case SchurKind::s_tilde_T:
                if (schur_advection == nullptr)
                    throw std::invalid_argument(
                        "block preconditioner with s_tilde_T needs the assembled "
                        "Schur approximation");
                P.schur = *schur_advection;
                break;
            case SchurKind::s_att: P.schur = J.ATT; break;
            case SchurKind::s_diag: P.schur = schur_diag_matrix(J); break;
        }
        P.amg_pressure = std::make_shared<AmgHierarchy>(build_hierarchy(J.App, cfg.amg));
        P.amg_schur = std::make_shared<AmgHierarchy>(build_hierarchy(P.schur, cfg.amg));
        P.solve_pressure = [h = P.amg_pressure](const std::vector<double>& b,
                                                std::vector<double>& x) { vcycle(*h, b, x); };
        P.solve_schur = [h = P.amg_schur](const std::vector<double>& b,
                                          std::vector<double>& x) { vcycle(*h, b, x); };
        return P;
    }

    // cpr
    CsrMatrix App_stage1 = J.App;
    if (cfg.decoupling != DecouplingKind::none) {
        P.decouple = decoupling_vector(J, cfg.decoupling);
        App_stage1 = csr_add(1.0, J.App, -1.0, row_scale(J.ATp, P.decouple));
    }
    P.amg_pressure = std::make_shared<AmgHierarchy>(build_hierarchy(App_stage1, cfg.amg));
    P.solve_pressure = [h = P.amg_pressure](const std::vector<double>& b,
                                            std::vector<double>& x) { vcycle(*h, b, x); };
    P.ilu = std::make_shared<Ilu0Factor>(ilu0_factor(build_interleaved(J)));
    P.solve_full = [f = P.ilu](const std::vector<double>& b, std::vector<double>& x) {
        std::vector<double> bi, xi;
        interleave(b, bi);
        ilu0_solve(*f, bi, xi);
        deinterleave(xi, x);
    };
    return P;
}

// z = M^{-1} r via the block factorization (three inner solves).
inline void apply_block(const PrecondInstance& P, const std::vector<double>& r,
                        std::vector<double>& z) {
    const int n = P.n;
    const BlockJacobian& J = *P.jac;
    const std::vector<double> rp(r.begin(), r.begin() + n);
    const std::vector<double> rT(r.begin() + n, r.end());

    std::vector<double> xp, t, bT(rT), dT, bp(rp), dp;
    P.solve_pressure(rp, xp);            // predictor for the pressure unknowns
    spmv(J.ATp, xp, t);
    for (int i = 0; i < n; ++i) bT[i] -= t[i];
    P.solve_schur(bT, dT);               // temperature update
    spmv(J.ApT, dT, t);
    for (int i = 0; i < n; ++i) bp[i] -= t[i];
    P.solve_pressure(bp, dp);            // corrected pressure update

    z.resize(2 * n);
    std::copy(dp.begin(), dp.end(), z.begin());
    std::copy(dT.begin(), dT.end(), z.begin() + n);
}

// z = M2^{-1} (r - A M1^{-1} r) + M1^{-1} r with M1 the pressure stage.
inline void apply_cpr(const PrecondInstance& P, const std::vector<double>& r,
                      std::vector<double>& z) {
    const int n = P.n;
    const BlockJacobian& J = *P.jac;
    std::vector<double> rp(r.begin(), r.begin() + n);
    if (!P.decouple.empty())
        for (int i = 0; i < n; ++i) rp[i] -= P.decouple[i] * r[n + i];

    std::vector<double> x1p;
    P.solve_pressure(rp, x1p);

    // r1 = r - A [x1p; 0] against the original operator
    std::vector<double> r1(r), t;
    spmv(J.App, x1p, t);
    for (int i = 0; i < n; ++i) r1[i] -= t[i];
    spmv(J.ATp, x1p, t);
    for (int i = 0; i < n; ++i) r1[n + i] -= t[i];

    std::vector<double> z2;
    P.solve_full(r1, z2);
    z = std::move(z2);
    for (int i = 0; i < n; ++i) z[i] += x1p[i];
}

inline LinearOp precond_op(const PrecondInstance& P) {
    if (P.config.kind == PrecondKind::block)
        return [&P](const std::vector<double>& r, std::vector<double>& z) { apply_block(P, r, z); };
    return [&P](const std::vector<double>& r, std::vector<double>& z) { apply_cpr(P, r, z); };
}

} // namespace thermoflow
