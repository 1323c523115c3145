#pragma once

// Serial classical (Ruge-Stuben) algebraic multigrid.
//
// Strength:    j is a strong connection of i when -a_ij >= theta * max_k(-a_ik).
// Coarsening:  greedy first pass by descending influence count (number of
//              points strongly depending on a candidate), lowest index first
//              among ties; second pass makes sure every strongly connected
//              F-F pair shares an interpolatory C point.
// Interpolation: direct classical interpolation; strong F connections are
//              distributed over the common C points, weak connections are
//              lumped into the diagonal.
// Cycle:       V(1,1) with symmetric Gauss-Seidel smoothing and a dense
//              factorization of the coarsest level. The cycle always starts
//              from a zero initial guess, so one application is a fixed
//              linear operator.

#include <Eigen/Dense>

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "csr.hpp"
#include "gmres.hpp"

namespace thermoflow {

struct AmgOptions {
    double theta = 0.25;
    int coarse_threshold = 64;
    int max_levels = 25;
    int pre_sweeps = 1;    // symmetric sweeps before coarse correction
    int post_sweeps = 1;

    void validate() const {
        if (!(theta > 0.0 && theta < 1.0))
            throw std::invalid_argument("amg: theta must lie in (0,1)");
        if (coarse_threshold < 1 || max_levels < 1 || pre_sweeps < 0 || post_sweeps < 0)
            throw std::invalid_argument("amg: invalid options");
    }
};

struct StrengthGraph {
    // S: strong connections of each row; ST: points strongly depending on each row.
    std::vector<int> s_ptr, s_col;
    std::vector<int> st_ptr, st_col;
};

inline StrengthGraph strength_graph(const CsrMatrix& A, double theta) {
    if (A.rows != A.cols) throw std::invalid_argument("strength_graph: square matrix required");
    StrengthGraph G;
    G.s_ptr.assign(A.rows + 1, 0);
    for (int i = 0; i < A.rows; ++i) {
        double mx = 0.0;
        for (int q = A.row_ptr[i]; q < A.row_ptr[i + 1]; ++q)
            if (A.col_idx[q] != i) mx = std::max(mx, -A.values[q]);
        if (mx > 0.0) {
            const double cut = theta * mx;
            for (int q = A.row_ptr[i]; q < A.row_ptr[i + 1]; ++q)
                if (A.col_idx[q] != i && -A.values[q] >= cut) G.s_col.push_back(A.col_idx[q]);
        }
        G.s_ptr[i + 1] = static_cast<int>(G.s_col.size());
    }
    G.st_ptr.assign(A.rows + 1, 0);
    for (const int j : G.s_col) ++G.st_ptr[j + 1];
    for (int i = 0; i < A.rows; ++i) G.st_ptr[i + 1] += G.st_ptr[i];
    G.st_col.resize(G.s_col.size());
    std::vector<int> fill(G.st_ptr.begin(), G.st_ptr.end() - 1);
    for (int i = 0; i < A.rows; ++i)
        for (int q = G.s_ptr[i]; q < G.s_ptr[i + 1]; ++q)
            G.st_col[fill[G.s_col[q]]++] = i;
    return G;
}

enum : signed char { amg_F = 0, amg_C = 1 };

inline std::vector<signed char> coarsen(const CsrMatrix& A, const StrengthGraph& G) {
    const int n = A.rows;
    std::vector<signed char> cf(n, amg_F);
    std::vector<signed char> assigned(n, 0);
    std::vector<int> lambda(n);
    int maxlam = 0;
    for (int i = 0; i < n; ++i) {
        lambda[i] = G.st_ptr[i + 1] - G.st_ptr[i];
        maxlam = std::max(maxlam, lambda[i]);
    }
    std::vector<std::set<int>> bucket(maxlam + 1);
    for (int i = 0; i < n; ++i) bucket[lambda[i]].insert(i);

    const auto bump = [&](int k) {
        bucket[lambda[k]].erase(k);
        ++lambda[k];
        if (lambda[k] >= static_cast<int>(bucket.size())) bucket.resize(lambda[k] + 1);
        bucket[lambda[k]].insert(k);
        maxlam = std::max(maxlam, lambda[k]);
    };

    int remaining = n;
    while (remaining > 0) {
        while (maxlam > 0 && bucket[maxlam].empty()) --maxlam;
        const int i = *bucket[maxlam].begin();   // lowest index among ties
        bucket[maxlam].erase(bucket[maxlam].begin());
        assigned[i] = 1;
        cf[i] = amg_C;
        --remaining;
        for (int q = G.st_ptr[i]; q < G.st_ptr[i + 1]; ++q) {
            const int j = G.st_col[q];
            if (assigned[j]) continue;
            bucket[lambda[j]].erase(j);
            assigned[j] = 1;
            cf[j] = amg_F;
            --remaining;
            for (int r = G.s_ptr[j]; r < G.s_ptr[j + 1]; ++r)
                if (!assigned[G.s_col[r]]) bump(G.s_col[r]);
        }
    }

    // Second pass: each strongly connected F-F pair needs a common strong C.
    std::vector<signed char> in_ci(n, 0);
    for (int i = 0; i < n; ++i) {
        if (cf[i] != amg_F) continue;
        for (int q = G.s_ptr[i]; q < G.s_ptr[i + 1]; ++q)
            if (cf[G.s_col[q]] == amg_C) in_ci[G.s_col[q]] = 1;
        int tentative = -1;
        for (int q = G.s_ptr[i]; q < G.s_ptr[i + 1]; ++q) {
            const int k = G.s_col[q];
            if (cf[k] != amg_F || k == tentative) continue;
            bool common = false;
            for (int r = G.s_ptr[k]; r < G.s_ptr[k + 1] && !common; ++r)
                common = in_ci[G.s_col[r]] != 0;
            if (!common) {
                if (tentative >= 0) {   // second conflict: promote i itself instead
                    cf[tentative] = amg_F;
                    in_ci[tentative] = 0;
                    tentative = -1;
                    cf[i] = amg_C;
                    break;
                }
                tentative = k;
                cf[k] = amg_C;
                in_ci[k] = 1;
            }
        }
        for (int q = G.s_ptr[i]; q < G.s_ptr[i + 1]; ++q) in_ci[G.s_col[q]] = 0;
        if (tentative >= 0) in_ci[tentative] = 0;
    }

    // Safety: an F point with no strong C neighbour cannot interpolate.
    for (int i = 0; i < n; ++i) {
        if (cf[i] != amg_F) continue;
        bool has_c = false;
        for (int q = G.s_ptr[i]; q < G.s_ptr[i + 1] && !has_c; ++q)
            has_c = cf[G.s_col[q]] == amg_C;
        if (!has_c) cf[i] = amg_C;
    }
    return cf;
}

inline CsrMatrix interpolation(const CsrMatrix& A, const StrengthGraph& G,
                               const std::vector<signed char>& cf) {
    const int n = A.rows;
    std::vector<int> c_id(n, -1);
    int nc = 0;
    for (int i = 0; i < n; ++i)
        if (cf[i] == amg_C) c_id[i] = nc++;

    CsrMatrix P;
    P.rows = n;
    P.cols = nc;
    P.row_ptr.assign(n + 1, 0);

    std::vector<signed char> strong(n, 0);   // scratch: strong-neighbour marker for row i
    std::vector<double> w(n, 0.0);
    std::vector<int> ci;
    std::vector<std::pair<int, double>> row;

    for (int i = 0; i < n; ++i) {
        if (cf[i] == amg_C) {
            P.col_idx.push_back(c_id[i]);
            P.values.push_back(1.0);
            P.row_ptr[i + 1] = static_cast<int>(P.col_idx.size());
            continue;
        }
        ci.clear();
        for (int q = G.s_ptr[i]; q < G.s_ptr[i + 1]; ++q) {
            const int j = G.s_col[q];
            strong[j] = 1;
            if (cf[j] == amg_C) {
                ci.push_back(j);
                w[j] = 0.0;
            }
        }
        if (ci.empty())
            throw std::runtime_error("amg: F point " + std::to_string(i) +
                                     " has no strong C neighbour");
        double d = 0.0;
        for (int q = A.row_ptr[i]; q < A.row_ptr[i + 1]; ++q) {
            const int j = A.col_idx[q];
            const double aij = A.values[q];
            if (j == i) {
                d += aij;
            } else if (strong[j] && cf[j] == amg_C) {
                w[j] += aij;
            } else if (strong[j]) {
                // strong F neighbour: distribute over the common C points
                double denom = 0.0;
                for (int r = A.row_ptr[j]; r < A.row_ptr[j + 1]; ++r) {
                    const int k2 = A.col_idx[r];
                    if (k2 != j && strong[k2] && cf[k2] == amg_C) denom += A.values[r];
                }
                if (denom != 0.0) {
                    for (int r = A.row_ptr[j]; r < A.row_ptr[j + 1]; ++r) {
                        const int k2 = A.col_idx[r];
                        if (k2 != j && strong[k2] && cf[k2] == amg_C)
                            w[k2] += aij * A.values[r] / denom;
                    }
                } else {
                    d += aij;   // nothing to distribute over: lump
                }
            } else {
                d += aij;      // weak connection lumped into the diagonal
            }
        }
        if (d == 0.0)
            throw std::runtime_error("amg: zero interpolation denominator at row " +
                                     std::to_string(i));
        row.clear();
        for (const int j : ci) row.emplace_back(c_id[j], -w[j] / d);
        std::sort(row.begin(), row.end());
        for (const auto& [cj, wv] : row) {
            P.col_idx.push_back(cj);
            P.values.push_back(wv);
        }
        P.row_ptr[i + 1] = static_cast<int>(P.col_idx.size());
        for (int q = G.s_ptr[i]; q < G.s_ptr[i + 1]; ++q) strong[G.s_col[q]] = 0;
    }
    return P;
}

struct AmgLevel {
    CsrMatrix A, P, R;
    std::vector<int> diag;
};

struct AmgHierarchy {
    std::vector<AmgLevel> levels;   // levels[k].P maps level k+1 to level k
    CsrMatrix coarse_A;
    Eigen::MatrixXd coarse_inv;
    AmgOptions opts;

    int num_levels() const { return static_cast<int>(levels.size()) + 1; }
};

namespace detail {

inline std::vector<int> diag_positions(const CsrMatrix& A, const char* who) {
    std::vector<int> d(A.rows);
    for (int i = 0; i < A.rows; ++i) {
        d[i] = A.find(i, i);
        if (d[i] < 0 || A.values[d[i]] == 0.0)
            throw std::runtime_error(std::string(who) + ": zero or missing diagonal at row " +
                                     std::to_string(i));
    }
    return d;
}

inline void gs_forward(const CsrMatrix& A, const std::vector<int>& diag,
                       const std::vector<double>& b, std::vector<double>& x) {
    for (int i = 0; i < A.rows; ++i) {
        double s = b[i];
        for (int q = A.row_ptr[i]; q < A.row_ptr[i + 1]; ++q)
            if (A.col_idx[q] != i) s -= A.values[q] * x[A.col_idx[q]];
        x[i] = s / A.values[diag[i]];
    }
}

inline void gs_backward(const CsrMatrix& A, const std::vector<int>& diag,
                        const std::vector<double>& b, std::vector<double>& x) {
    for (int i = A.rows - 1; i >= 0; --i) {
        double s = b[i];
        for (int q = A.row_ptr[i]; q < A.row_ptr[i + 1]; ++q)
            if (A.col_idx[q] != i) s -= A.values[q] * x[A.col_idx[q]];
        x[i] = s / A.values[diag[i]];
    }
}

} // namespace detail

inline AmgHierarchy build_hierarchy(CsrMatrix A, const AmgOptions& opts = {}) {
    opts.validate();
    if (A.rows == 0 || A.rows != A.cols)
        throw std::invalid_argument("amg: empty or non-square matrix");

    AmgHierarchy H;
    H.opts = opts;
    while (A.rows > opts.coarse_threshold &&
           static_cast<int>(H.levels.size()) + 1 < opts.max_levels) {
        const StrengthGraph G = strength_graph(A, opts.theta);
        const std::vector<signed char> cf = coarsen(A, G);
        int nc = 0;
        for (const signed char c : cf) nc += c == amg_C;
        if (nc >= A.rows || nc == 0) break;   // no compression: stop here
        AmgLevel lvl;
        lvl.P = interpolation(A, G, cf);
        lvl.R = transpose(lvl.P);
        lvl.diag = detail::diag_positions(A, "amg");
        CsrMatrix Ac = matmul(lvl.R, matmul(A, lvl.P));   // Galerkin product
        lvl.A = std::move(A);
        A = std::move(Ac);
        H.levels.push_back(std::move(lvl));
    }

    H.coarse_A = std::move(A);
    detail::diag_positions(H.coarse_A, "amg");   // degenerate-matrix check
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(H.coarse_A.rows, H.coarse_A.cols);
    for (int i = 0; i < H.coarse_A.rows; ++i)
        for (int q = H.coarse_A.row_ptr[i]; q < H.coarse_A.row_ptr[i + 1]; ++q)
            D(i, H.coarse_A.col_idx[q]) = H.coarse_A.values[q];
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(D);
    if (!lu.isInvertible())
        throw std::runtime_error("amg: singular coarsest-level matrix");
    H.coarse_inv = lu.inverse();
    return H;
}

namespace detail {

inline void vcycle_level(const AmgHierarchy& H, int l, const std::vector<double>& b,
                         std::vector<double>& x) {
    if (l == static_cast<int>(H.levels.size())) {
        const int n = H.coarse_A.rows;
        x.assign(n, 0.0);
        Eigen::Map<Eigen::VectorXd> xv(x.data(), n);
        Eigen::Map<const Eigen::VectorXd> bv(b.data(), n);
        xv = H.coarse_inv * bv;
        return;
    }
    const AmgLevel& L = H.levels[l];
    x.assign(L.A.rows, 0.0);
    for (int s = 0; s < H.opts.pre_sweeps; ++s) {
        gs_forward(L.A, L.diag, b, x);
        gs_backward(L.A, L.diag, b, x);
    }
    std::vector<double> r(L.A.rows), rc, ec, t;
    spmv(L.A, x, r);
    for (int i = 0; i < L.A.rows; ++i) r[i] = b[i] - r[i];
    spmv(L.R, r, rc);
    vcycle_level(H, l + 1, rc, ec);
    spmv(L.P, ec, t);
    axpy(1.0, t, x);
    for (int s = 0; s < H.opts.post_sweeps; ++s) {
        gs_forward(L.A, L.diag, b, x);
        gs_backward(L.A, L.diag, b, x);
    }
}

} // namespace detail

// One V-cycle from a zero initial guess: x = M^{-1} b.
inline void vcycle(const AmgHierarchy& H, const std::vector<double>& b, std::vector<double>& x) {
    const int n = H.levels.empty() ? H.coarse_A.rows : H.levels.front().A.rows;
    if (static_cast<int>(b.size()) != n) throw std::invalid_argument("vcycle: size mismatch");
    detail::vcycle_level(H, 0, b, x);
}

inline LinearOp vcycle_op(const AmgHierarchy& H) {
    return [&H](const std::vector<double>& b, std::vector<double>& x) { vcycle(H, b, x); };
}

} // namespace thermoflow
