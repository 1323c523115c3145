#pragma once

// Fully implicit cell-centered finite volumes for non-isothermal single-phase
// flow: backward Euler in time, two-point flux with harmonic coefficient
// averages, and single-point upwinding of the advected quantities.
//
// Per facet (a = "+", b = "-", normal a->b) the potential drop is
//     dphi = (p_a - p_b) + {rho} * (g . n) * dist,
// the mass flux  t_K * (rho/mu)^up * dphi  with t_K = area*{{K}}/dist, and the
// upwind cell is a when dphi >= 0. The Jacobian freezes the upwind choice and
// differentiates everything else; the Schur approximation keeps the pressure
// field frozen and drops the temperature derivative of the mass mobility,
// which is the term that cancels against the mass-equation elimination.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "csr.hpp"
#include "mesh.hpp"
#include "physics.hpp"

namespace thermoflow {

struct State {
    std::vector<double> p;
    std::vector<double> T;
};

struct BlockJacobian {
    CsrMatrix App, ApT, ATp, ATT;
    std::vector<double> b_p, b_T;   // Newton right-hand side (negative residual)
};

struct BlockVector {
    std::vector<double> p, T;
};

// y = A x for the 2x2 block operator.
inline void block_apply(const BlockJacobian& J, const std::vector<double>& xp,
                        const std::vector<double>& xT, std::vector<double>& yp,
                        std::vector<double>& yT) {
    std::vector<double> t;
    spmv(J.App, xp, yp);
    spmv(J.ApT, xT, t);
    axpy(1.0, t, yp);
    spmv(J.ATp, xp, yT);
    spmv(J.ATT, xT, t);
    axpy(1.0, t, yT);
}

inline BlockVector block_apply(const BlockJacobian& J, const BlockVector& x) {
    BlockVector y;
    block_apply(J, x.p, x.T, y.p, y.T);
    return y;
}

struct DirichletPatch {
    int axis = 0;
    int side = 0;
    std::optional<double> p;   // prescribed pressure (enables boundary flow)
    std::optional<double> T;   // prescribed temperature (enables boundary conduction)
};

struct FacetFlux {
    double dphi = 0.0;        // potential drop, Pa
    int upwind = -1;
    double mass = 0.0;        // kg/s, positive from a to b
    double advection = 0.0;   // W
    double conduction = 0.0;  // W
};

inline double harmonic(double a, double b) {
    return (a > 0.0 && b > 0.0) ? 2.0 * a * b / (a + b) : 0.0;
}

class DiscreteSystem {
public:
    DiscreteSystem(Grid grid, FluidModel fluid, RockModel rock,
                   std::vector<SourceTerm> sources, double gravity = 0.0)
        : grid_(std::move(grid)), fluid_(fluid), rock_(std::move(rock)),
          sources_(std::move(sources)), g_(gravity) {
        const int n = grid_.num_cells();
        if (static_cast<int>(rock_.porosity.size()) != n ||
            static_cast<int>(rock_.perm.size()) != n)
            throw std::invalid_argument("DiscreteSystem: rock fields must be per-cell");
        for (int i = 0; i < n; ++i) {
            if (!(rock_.porosity[i] > 0.0) || !(rock_.porosity[i] < 1.0))
                throw std::invalid_argument("DiscreteSystem: porosity outside (0,1) in cell " +
                                            std::to_string(i));
            for (int a = 0; a < grid_.ndim(); ++a)
                if (!(rock_.perm[i][a] > 0.0))
                    throw std::invalid_argument("DiscreteSystem: nonpositive permeability in cell " +
                                                std::to_string(i));
        }
        for (SourceTerm& s : sources_) {
            if (s.cell < 0 || s.cell >= n)
                throw std::invalid_argument("DiscreteSystem: source cell out of range");
            if (s.kind != SourceKind::heater && s.rate_mode == RateMode::peaceman) {
                const double kx = rock_.perm[s.cell][0];
                const double ky = rock_.perm[s.cell][1];
                const double r_e = equivalent_radius(kx, ky, s.d_x, s.d_y);
                if (!(r_e > s.r_w))
                    throw std::invalid_argument("DiscreteSystem: Peaceman radius r_e <= r_w");
                s.well_index = 2.0 * M_PI * s.h * std::sqrt(kx * ky) / std::log(r_e / s.r_w);
            }
        }
        build_pattern();
        build_transmissibilities();
    }

    const Grid& grid() const { return grid_; }
    const FluidModel& fluid() const { return fluid_; }
    const RockModel& rock() const { return rock_; }
    const std::vector<SourceTerm>& sources() const { return sources_; }
    double gravity() const { return g_; }

    void set_dirichlet(std::vector<DirichletPatch> patches) { dirichlet_ = std::move(patches); }

    int num_cells() const { return grid_.num_cells(); }

    // Interior facet flux at the given state (diagnostics and tests).
    FacetFlux facet_flux(int e, const State& x) const {
        check_state(x);
        if (e < 0 || e >= grid_.num_facets())
            throw std::out_of_range("facet_flux: facet index out of range");
        const Facet& f = grid_.facets()[e];
        const Cell ca = eval_cell(f.cell_a, x);
        const Cell cb = eval_cell(f.cell_b, x);
        FacetFlux out;
        out.dphi = (x.p[f.cell_a] - x.p[f.cell_b]) + 0.5 * (ca.rho + cb.rho) * gdz_[e];
        out.upwind = out.dphi >= 0.0 ? f.cell_a : f.cell_b;
        const Cell& up = out.dphi >= 0.0 ? ca : cb;
        const double Tup = x.T[out.upwind];
        out.mass = t_K_[e] * up.m * out.dphi;
        out.advection = fluid_.c_v * t_K_[e] * up.m * Tup * out.dphi;
        out.conduction = t_kT_[e] * (x.T[f.cell_a] - x.T[f.cell_b]);
        return out;
    }

    double total_fluid_mass(const State& x) const {
        check_state(x);
        double m = 0.0;
        for (int i = 0; i < num_cells(); ++i)
            m += rock_.porosity[i] * fluid_.density(x.p[i], x.T[i]) * grid_.cell_volume(i);
        return m;
    }

    // Discrete residual (R_m, R_e). May throw std::domain_error if the state
    // leaves the viscosity correlation's domain.
    void residual(const State& xn, const State& xo, double dt,
                  std::vector<double>& Rm, std::vector<double>& Re) const {
        check_step(xn, xo, dt);
        const int n = num_cells();
        Rm.assign(n, 0.0);
        Re.assign(n, 0.0);
        std::vector<Cell> c(n);
        for (int i = 0; i < n; ++i) c[i] = eval_cell(i, xn);

        for (int i = 0; i < n; ++i) {
            const double vol = grid_.cell_volume(i);
            const double phi = rock_.porosity[i];
            const double rho_o = fluid_.density(xo.p[i], xo.T[i]);
            Rm[i] += phi * (c[i].rho - rho_o) / dt * vol;
            Re[i] += (phi * fluid_.c_v * (c[i].rho * xn.T[i] - rho_o * xo.T[i]) +
                      (1.0 - phi) * rock_.rho_r * rock_.c_r * (xn.T[i] - xo.T[i])) / dt * vol;
        }

        const auto& facets = grid_.facets();
        for (int e = 0; e < grid_.num_facets(); ++e) {
            const Facet& f = facets[e];
            const int a = f.cell_a, b = f.cell_b;
            const double dphi = (xn.p[a] - xn.p[b]) + 0.5 * (c[a].rho + c[b].rho) * gdz_[e];
            const Cell& up = dphi >= 0.0 ? c[a] : c[b];
            const double Tup = dphi >= 0.0 ? xn.T[a] : xn.T[b];
            const double fm = t_K_[e] * up.m * dphi;
            const double fa = fluid_.c_v * t_K_[e] * up.m * Tup * dphi;
            const double fc = t_kT_[e] * (xn.T[a] - xn.T[b]);
            Rm[a] += fm;
            Rm[b] -= fm;
            Re[a] += fa + fc;
            Re[b] -= fa + fc;
        }

        for (const SourceTerm& s : sources_) {
            const double vol = grid_.cell_volume(s.cell);
            const SourceEval se =
                source_contributions(s, xn.p[s.cell], xn.T[s.cell], fluid_, vol);
            Rm[s.cell] -= se.f * vol;
            Re[s.cell] -= se.f_T * vol;
        }

        boundary_residual(xn, Rm, Re);
    }

    // Residual and exact Jacobian in one pass; b = -R.
    BlockJacobian jacobian(const State& xn, const State& xo, double dt) const {
        check_step(xn, xo, dt);
        const int n = num_cells();
        BlockJacobian J;
        J.App = make_pattern_matrix();
        J.ApT = make_pattern_matrix();
        J.ATp = make_pattern_matrix();
        J.ATT = make_pattern_matrix();
        std::vector<double> Rm(n, 0.0), Re(n, 0.0);
        std::vector<Cell> c(n);
        for (int i = 0; i < n; ++i) c[i] = eval_cell(i, xn);

        for (int i = 0; i < n; ++i) {
            const double vol = grid_.cell_volume(i);
            const double phi = rock_.porosity[i];
            const double rho_o = fluid_.density(xo.p[i], xo.T[i]);
            const int d = diag_[i];
            Rm[i] += phi * (c[i].rho - rho_o) / dt * vol;
            Re[i] += (phi * fluid_.c_v * (c[i].rho * xn.T[i] - rho_o * xo.T[i]) +
                      (1.0 - phi) * rock_.rho_r * rock_.c_r * (xn.T[i] - xo.T[i])) / dt * vol;
            J.App.values[d] += phi * c[i].rho_p / dt * vol;
            J.ApT.values[d] += phi * c[i].rho_T / dt * vol;
            J.ATp.values[d] += phi * fluid_.c_v * c[i].rho_p * xn.T[i] / dt * vol;
            J.ATT.values[d] += (phi * fluid_.c_v * (c[i].rho + c[i].rho_T * xn.T[i]) +
                                (1.0 - phi) * rock_.rho_r * rock_.c_r) / dt * vol;
        }

        const auto& facets = grid_.facets();
        for (int e = 0; e < grid_.num_facets(); ++e) {
            const Facet& f = facets[e];
            const int a = f.cell_a, b = f.cell_b;
            const double gdz = gdz_[e];
            const double tk = t_K_[e];
            const double dphi = (xn.p[a] - xn.p[b]) + 0.5 * (c[a].rho + c[b].rho) * gdz;
            const bool up_a = dphi >= 0.0;
            const Cell& up = up_a ? c[a] : c[b];
            const double Tup = up_a ? xn.T[a] : xn.T[b];
            const double cv = fluid_.c_v;

            Rm[a] += tk * up.m * dphi;
            Rm[b] -= tk * up.m * dphi;
            Re[a] += cv * tk * up.m * Tup * dphi + t_kT_[e] * (xn.T[a] - xn.T[b]);
            Re[b] -= cv * tk * up.m * Tup * dphi + t_kT_[e] * (xn.T[a] - xn.T[b]);

            // d(dphi)/dx for x in {p_a, p_b, T_a, T_b}
            const double dphi_pa = 1.0 + 0.5 * c[a].rho_p * gdz;
            const double dphi_pb = -1.0 + 0.5 * c[b].rho_p * gdz;
            const double dphi_Ta = 0.5 * c[a].rho_T * gdz;
            const double dphi_Tb = 0.5 * c[b].rho_T * gdz;

            // mass flux derivatives
            const double fm_pa = tk * ((up_a ? up.m_p * dphi : 0.0) + up.m * dphi_pa);
            const double fm_pb = tk * ((!up_a ? up.m_p * dphi : 0.0) + up.m * dphi_pb);
            const double fm_Ta = tk * ((up_a ? up.m_T * dphi : 0.0) + up.m * dphi_Ta);
            const double fm_Tb = tk * ((!up_a ? up.m_T * dphi : 0.0) + up.m * dphi_Tb);

            // advective energy flux derivatives; (m T)' carries the extra m term
            const double fa_pa = cv * tk * ((up_a ? up.m_p * Tup * dphi : 0.0) + up.m * Tup * dphi_pa);
            const double fa_pb = cv * tk * ((!up_a ? up.m_p * Tup * dphi : 0.0) + up.m * Tup * dphi_pb);
            const double fa_Ta =
                cv * tk * ((up_a ? (up.m_T * Tup + up.m) * dphi : 0.0) + up.m * Tup * dphi_Ta);
            const double fa_Tb =
                cv * tk * ((!up_a ? (up.m_T * Tup + up.m) * dphi : 0.0) + up.m * Tup * dphi_Tb);

            const int aa = slot_aa_[e], ab = slot_ab_[e], ba = slot_ba_[e], bb = slot_bb_[e];
            J.App.values[aa] += fm_pa;  J.App.values[ab] += fm_pb;
            J.App.values[ba] -= fm_pa;  J.App.values[bb] -= fm_pb;
            J.ApT.values[aa] += fm_Ta;  J.ApT.values[ab] += fm_Tb;
            J.ApT.values[ba] -= fm_Ta;  J.ApT.values[bb] -= fm_Tb;
            J.ATp.values[aa] += fa_pa;  J.ATp.values[ab] += fa_pb;
            J.ATp.values[ba] -= fa_pa;  J.ATp.values[bb] -= fa_pb;
            J.ATT.values[aa] += fa_Ta + t_kT_[e];
            J.ATT.values[ab] += fa_Tb - t_kT_[e];
            J.ATT.values[ba] -= fa_Ta + t_kT_[e];
            J.ATT.values[bb] -= fa_Tb - t_kT_[e];
        }

        for (const SourceTerm& s : sources_) {
            const double vol = grid_.cell_volume(s.cell);
            const SourceEval se =
                source_contributions(s, xn.p[s.cell], xn.T[s.cell], fluid_, vol);
            const int d = diag_[s.cell];
            Rm[s.cell] -= se.f * vol;
            Re[s.cell] -= se.f_T * vol;
            J.App.values[d] -= se.df_dp * vol;
            J.ApT.values[d] -= se.df_dT * vol;
            J.ATp.values[d] -= se.dfT_dp * vol;
            J.ATT.values[d] -= se.dfT_dT * vol;
        }

        boundary_jacobian(xn, Rm, Re, J);

        J.b_p.resize(n);
        J.b_T.resize(n);
        for (int i = 0; i < n; ++i) {
            J.b_p[i] = -Rm[i];
            J.b_T[i] = -Re[i];
        }
        return J;
    }

    // Physics-derived approximation of the temperature Schur complement,
    // assembled on the A_TT pattern with the pressure field frozen:
    // accumulation  phi c_v rho / dt + (1-phi) rho_r c_r / dt  (times volume),
    // upwinded advection  c_v {{K}} (rho/mu)^up dphi,  conduction {{k_T}},
    // +U on heater diagonals and +c_v q rho on producer diagonals.
    CsrMatrix schur_approx(const State& xn, double dt) const {
        check_state(xn);
        if (!(dt > 0.0)) throw std::invalid_argument("schur_approx: dt must be positive");
        const int n = num_cells();
        CsrMatrix S = make_pattern_matrix();
        std::vector<Cell> c(n);
        for (int i = 0; i < n; ++i) c[i] = eval_cell(i, xn);

        for (int i = 0; i < n; ++i) {
            const double vol = grid_.cell_volume(i);
            const double phi = rock_.porosity[i];
            S.values[diag_[i]] += (phi * fluid_.c_v * c[i].rho +
                                   (1.0 - phi) * rock_.rho_r * rock_.c_r) / dt * vol;
        }

        const auto& facets = grid_.facets();
        for (int e = 0; e < grid_.num_facets(); ++e) {
            const Facet& f = facets[e];
            const int a = f.cell_a, b = f.cell_b;
            const double dphi = (xn.p[a] - xn.p[b]) + 0.5 * (c[a].rho + c[b].rho) * gdz_[e];
            const bool up_a = dphi >= 0.0;
            const double adv = fluid_.c_v * t_K_[e] * (up_a ? c[a].m : c[b].m) * dphi;
            // advection couples both rows to the upwind column only
            S.values[up_a ? slot_aa_[e] : slot_ab_[e]] += adv;
            S.values[up_a ? slot_ba_[e] : slot_bb_[e]] -= adv;
            S.values[slot_aa_[e]] += t_kT_[e];
            S.values[slot_ab_[e]] -= t_kT_[e];
            S.values[slot_bb_[e]] += t_kT_[e];
            S.values[slot_ba_[e]] -= t_kT_[e];
        }

        for (const SourceTerm& s : sources_) {
            if (s.kind == SourceKind::heater) {
                S.values[diag_[s.cell]] += s.U;
            } else if (s.kind == SourceKind::producer) {
                const double vol = grid_.cell_volume(s.cell);
                const SourceEval se =
                    source_contributions(s, xn.p[s.cell], xn.T[s.cell], fluid_, vol);
                S.values[diag_[s.cell]] +=
                    fluid_.c_v * se.q * fluid_.density(xn.p[s.cell], xn.T[s.cell]);
            }
        }

        boundary_schur(xn, S);
        return S;
    }

private:
    struct Cell {
        double rho = 0.0, rho_p = 0.0, rho_T = 0.0;
        double m = 0.0, m_p = 0.0, m_T = 0.0;   // m = rho/mu
    };

    Cell eval_cell(int i, const State& x) const {
        Cell c;
        const double p = x.p[i], T = x.T[i];
        c.rho = fluid_.density(p, T);
        c.rho_p = fluid_.density_dp(p, T);
        c.rho_T = fluid_.density_dT(p, T);
        const double mu = fluid_.viscosity(T);
        const double mu_T = fluid_.viscosity_dT(T);
        c.m = c.rho / mu;
        c.m_p = c.rho_p / mu;
        c.m_T = c.rho_T / mu - c.m * mu_T / mu;
        return c;
    }

    struct BoundaryEval {
        double p_D = 0.0, T_D = 0.0;
        double rho_D = 0.0, m_D = 0.0;
        double gdz = 0.0;
        double t_K = 0.0, t_kT = 0.0;
        bool flow = false, conduct = false;
    };

    std::optional<BoundaryEval> eval_boundary(const BoundaryFacet& bf, const State& x) const {
        const DirichletPatch* patch = nullptr;
        for (const DirichletPatch& d : dirichlet_)
            if (d.axis == bf.axis && d.side == bf.side) {
                patch = &d;
                break;
            }
        if (!patch) return std::nullopt;
        BoundaryEval be;
        be.flow = patch->p.has_value();
        be.conduct = patch->T.has_value();
        be.T_D = patch->T.value_or(x.T[bf.cell]);
        be.gdz = 0.0;
        if (g_ != 0.0 && bf.axis == grid_.ndim() - 1)
            be.gdz = (bf.side == 1 ? -g_ : g_) * bf.dist;
        if (be.flow) {
            be.p_D = *patch->p;
            be.rho_D = fluid_.density(be.p_D, be.T_D);
            be.m_D = be.rho_D / fluid_.viscosity(be.T_D);
            be.t_K = bf.area * rock_.perm[bf.cell][bf.axis] / bf.dist;
        }
        if (be.conduct)
            be.t_kT = bf.area * rock_.bulk_conductivity(bf.cell, fluid_) / bf.dist;
        return be;
    }

    void boundary_residual(const State& x, std::vector<double>& Rm, std::vector<double>& Re) const {
        if (dirichlet_.empty()) return;
        for (const BoundaryFacet& bf : grid_.boundary_facets()) {
            const auto be = eval_boundary(bf, x);
            if (!be) continue;
            const int i = bf.cell;
            if (be->flow) {
                const Cell ci = eval_cell(i, x);
                const double dphi = (x.p[i] - be->p_D) + 0.5 * (ci.rho + be->rho_D) * be->gdz;
                const bool up_cell = dphi >= 0.0;
                const double m = up_cell ? ci.m : be->m_D;
                const double Tup = up_cell ? x.T[i] : be->T_D;
                Rm[i] += be->t_K * m * dphi;
                Re[i] += fluid_.c_v * be->t_K * m * Tup * dphi;
            }
            if (be->conduct) Re[i] += be->t_kT * (x.T[i] - be->T_D);
        }
    }

    void boundary_jacobian(const State& x, std::vector<double>& Rm, std::vector<double>& Re,
                           BlockJacobian& J) const {
        if (dirichlet_.empty()) return;
        for (const BoundaryFacet& bf : grid_.boundary_facets()) {
            const auto be = eval_boundary(bf, x);
            if (!be) continue;
            const int i = bf.cell;
            const int d = diag_[i];
            if (be->flow) {
                const Cell ci = eval_cell(i, x);
                const double dphi = (x.p[i] - be->p_D) + 0.5 * (ci.rho + be->rho_D) * be->gdz;
                const bool up_cell = dphi >= 0.0;
                const double m = up_cell ? ci.m : be->m_D;
                const double Tup = up_cell ? x.T[i] : be->T_D;
                const double cv = fluid_.c_v;
                const double dphi_p = 1.0 + 0.5 * ci.rho_p * be->gdz;
                const double dphi_T = 0.5 * ci.rho_T * be->gdz;
                Rm[i] += be->t_K * m * dphi;
                Re[i] += cv * be->t_K * m * Tup * dphi;
                J.App.values[d] += be->t_K * ((up_cell ? ci.m_p * dphi : 0.0) + m * dphi_p);
                J.ApT.values[d] += be->t_K * ((up_cell ? ci.m_T * dphi : 0.0) + m * dphi_T);
                J.ATp.values[d] +=
                    cv * be->t_K * ((up_cell ? ci.m_p * Tup * dphi : 0.0) + m * Tup * dphi_p);
                J.ATT.values[d] +=
                    cv * be->t_K *
                    ((up_cell ? (ci.m_T * Tup + ci.m) * dphi : 0.0) + m * Tup * dphi_T);
            }
            if (be->conduct) {
                Re[i] += be->t_kT * (x.T[i] - be->T_D);
                J.ATT.values[d] += be->t_kT;
            }
        }
    }

    void boundary_schur(const State& x, CsrMatrix& S) const {
        if (dirichlet_.empty()) return;
        for (const BoundaryFacet& bf : grid_.boundary_facets()) {
            const auto be = eval_boundary(bf, x);
            if (!be) continue;
            const int i = bf.cell;
            if (be->flow) {
                const Cell ci = eval_cell(i, x);
                const double dphi = (x.p[i] - be->p_D) + 0.5 * (ci.rho + be->rho_D) * be->gdz;
                if (dphi >= 0.0)   // boundary temperature carries no unknown
                    S.values[diag_[i]] += fluid_.c_v * be->t_K * ci.m * dphi;
            }
            if (be->conduct) S.values[diag_[i]] += be->t_kT;
        }
    }

    void check_state(const State& x) const {
        if (static_cast<int>(x.p.size()) != num_cells() ||
            static_cast<int>(x.T.size()) != num_cells())
            throw std::invalid_argument("state size does not match grid");
    }

    void check_step(const State& xn, const State& xo, double dt) const {
        check_state(xn);
        check_state(xo);
        if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
    }

    CsrMatrix make_pattern_matrix() const {
        CsrMatrix A;
        A.rows = A.cols = num_cells();
        A.row_ptr = pat_row_ptr_;
        A.col_idx = pat_col_idx_;
        A.values.assign(pat_col_idx_.size(), 0.0);
        return A;
    }

    void build_pattern() {
        const int n = num_cells();
        std::vector<std::vector<int>> adj(n);
        for (const Facet& f : grid_.facets()) {
            adj[f.cell_a].push_back(f.cell_b);
            adj[f.cell_b].push_back(f.cell_a);
        }
        pat_row_ptr_.assign(n + 1, 0);
        for (int i = 0; i < n; ++i) {
            adj[i].push_back(i);
            std::sort(adj[i].begin(), adj[i].end());
            pat_row_ptr_[i + 1] = pat_row_ptr_[i] + static_cast<int>(adj[i].size());
        }
        pat_col_idx_.reserve(pat_row_ptr_[n]);
        for (int i = 0; i < n; ++i)
            pat_col_idx_.insert(pat_col_idx_.end(), adj[i].begin(), adj[i].end());

        const CsrMatrix probe = make_pattern_matrix();
        diag_.resize(n);
        for (int i = 0; i < n; ++i) diag_[i] = probe.find(i, i);
        const int ne = grid_.num_facets();
        slot_aa_.resize(ne);
        slot_ab_.resize(ne);
        slot_ba_.resize(ne);
        slot_bb_.resize(ne);
        for (int e = 0; e < ne; ++e) {
            const Facet& f = grid_.facets()[e];
            slot_aa_[e] = diag_[f.cell_a];
            slot_ab_[e] = probe.find(f.cell_a, f.cell_b);
            slot_ba_[e] = probe.find(f.cell_b, f.cell_a);
            slot_bb_[e] = diag_[f.cell_b];
        }
    }

    void build_transmissibilities() {
        const int ne = grid_.num_facets();
        t_K_.resize(ne);
        t_kT_.resize(ne);
        gdz_.resize(ne);
        const int gaxis = grid_.ndim() - 1;
        for (int e = 0; e < ne; ++e) {
            const Facet& f = grid_.facets()[e];
            const double geom = f.area / f.dist;
            t_K_[e] = geom * harmonic(rock_.perm[f.cell_a][f.axis], rock_.perm[f.cell_b][f.axis]);
            t_kT_[e] = geom * harmonic(rock_.bulk_conductivity(f.cell_a, fluid_),
                                       rock_.bulk_conductivity(f.cell_b, fluid_));
            // g . n_e * dist with n_e pointing from a to b (the +axis direction)
            gdz_[e] = (g_ != 0.0 && f.axis == gaxis) ? -g_ * f.dist : 0.0;
        }
    }

    Grid grid_;
    FluidModel fluid_;
    RockModel rock_;
    std::vector<SourceTerm> sources_;
    double g_ = 0.0;
    std::vector<DirichletPatch> dirichlet_;

    std::vector<int> pat_row_ptr_, pat_col_idx_, diag_;
    std::vector<int> slot_aa_, slot_ab_, slot_ba_, slot_bb_;
    std::vector<double> t_K_, t_kT_, gdz_;
};

} // namespace thermoflow
