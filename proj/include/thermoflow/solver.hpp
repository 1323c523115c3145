#pragma once

// Fully implicit time stepping. Each step solves the coupled nonlinear
// system with Newton's method: exact analytic Jacobian, backtracking line
// search on the residual norm, right-preconditioned restarted GMRES for
// the updates. Drivers: a fixed step plan and an adaptive controller that
// sizes steps from the Newton iteration count.

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "discretization.hpp"
#include "gmres.hpp"
#include "precond.hpp"

namespace thermoflow {

struct NewtonConfig {
    double rtol_f = 1e-8;      // residual reduction relative to the first iterate
    double rtol_step = 1e-8;   // relative update size, per field
    int max_newton = 10;
    int linesearch_max = 6;
    double linesearch_factor = 0.5;
    double gmres_rtol = 1e-5;
    int gmres_restart = 30;
    int gmres_maxit = 200;
};

struct NewtonOutcome {
    State state;               // last iterate, converged or not
    bool converged = false;
    int newton_iters = 0;      // accepted updates
    int linear_iters = 0;      // summed GMRES iterations
    int nonmonotone = 0;       // full steps taken after an exhausted line search
    double assembly_s = 0.0;
    double precond_s = 0.0;
    double gmres_s = 0.0;
};

struct StepRecord {
    int step = 0;
    double dt_s = 0.0;
    int newton_iters = 0;
    int linear_iters = 0;
    bool converged = false;
    double assembly_s = 0.0;
    double precond_s = 0.0;
    double gmres_s = 0.0;
    double step_s = 0.0;
};

struct SimulationResult {
    State state;
    std::vector<StepRecord> steps;   // includes failed attempts
    bool failed = false;
    double t_reached = 0.0;

    long total_newton() const {
        long s = 0;
        for (const auto& r : steps) s += r.newton_iters;
        return s;
    }
    long total_linear() const {
        long s = 0;
        for (const auto& r : steps) s += r.linear_iters;
        return s;
    }
};

struct TimestepPlan {
    std::vector<double> dts;   // seconds, executed in order; no retries
};

struct TimeController {
    double t_end = 0.0;
    double dt_init = 0.0;
    double dt_min = 1.0;
    double dt_max = 0.0;       // defaults to t_end when zero
    double grow = 1.5;         // applied when Newton converged in <= target-1
    double shrink = 0.7;       // applied when Newton needed >= target+2
    double fail_shrink = 0.5;
    int target_newton = 4;
};

namespace detail {

inline double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline double stacked_norm(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (const double v : a) s += v * v;
    for (const double v : b) s += v * v;
    return std::sqrt(s);
}

} // namespace detail

// One implicit step from x_old over dt. Physically invalid trial states and
// preconditioner setup failures are treated as line-search rejections and a
// failed step respectively, never as crashes, so drivers can react.
inline NewtonOutcome newton_solve(const DiscreteSystem& sys, const State& x_old, double dt,
                                  const NewtonConfig& ncfg, const PreconditionerConfig& pcfg) {
    using clock = std::chrono::steady_clock;
    NewtonOutcome out;
    out.state = x_old;
    const int n = sys.num_cells();

    GmresOptions gopt;
    gopt.rtol = ncfg.gmres_rtol;
    gopt.restart = ncfg.gmres_restart;
    gopt.max_iters = ncfg.gmres_maxit;

    double g0 = -1.0;
    std::vector<double> Rm, Re;

    for (int iter = 0; iter < ncfg.max_newton + 1; ++iter) {
        BlockJacobian J;
        CsrMatrix Se;
        PrecondInstance P;
        try {
            const auto t0 = clock::now();
            J = sys.jacobian(out.state, x_old, dt);
            const double gnorm = detail::stacked_norm(J.b_p, J.b_T);
            if (iter == 0) {
                g0 = gnorm;
                if (g0 == 0.0) {
                    out.converged = true;
                    return out;
                }
            }
            if (gnorm <= ncfg.rtol_f * g0) {
                out.converged = true;
                return out;
            }
            if (iter == ncfg.max_newton) return out;   // budget spent, not converged

            const bool needs_se = pcfg.kind == PrecondKind::block &&
                                  pcfg.schur == SchurKind::s_tilde_T;
            if (needs_se) Se = sys.schur_approx(out.state, dt);
            out.assembly_s += detail::seconds_since(t0);

            const auto t1 = clock::now();
            P = build_preconditioner(J, pcfg, needs_se ? &Se : nullptr);
            out.precond_s += detail::seconds_since(t1);

            const auto t2 = clock::now();
            std::vector<double> delta(2 * n, 0.0);
            const GmresResult gr =
                gmres(stacked_op(J), precond_op(P), stacked_rhs(J), delta, gopt);
            out.gmres_s += detail::seconds_since(t2);
            out.linear_iters += gr.iterations;
            if (!gr.converged) return out;   // linear failure fails the step

            // Backtracking line search on the residual norm; a trial state
            // outside the fluid model's domain counts as no improvement.
            double alpha = 1.0;
            bool accepted = false;
            State trial;
            for (int ls = 0; ls < ncfg.linesearch_max; ++ls) {
                trial = out.state;
                for (int i = 0; i < n; ++i) {
                    trial.p[i] += alpha * delta[i];
                    trial.T[i] += alpha * delta[n + i];
                }
                double merit = std::numeric_limits<double>::infinity();
                try {
                    sys.residual(trial, x_old, dt, Rm, Re);
                    merit = detail::stacked_norm(Rm, Re);
                } catch (const std::domain_error&) {
                }
                if (merit < gnorm) {
                    accepted = true;
                    break;
                }
                alpha *= ncfg.linesearch_factor;
            }
            if (!accepted) {
                alpha = 1.0;   // accept the full step and let the next iterate decide
                trial = out.state;
                for (int i = 0; i < n; ++i) {
                    trial.p[i] += delta[i];
                    trial.T[i] += delta[n + i];
                }
                ++out.nonmonotone;
            }
            out.state = std::move(trial);
            ++out.newton_iters;

            // Small relative update in both fields also counts as converged.
            double dp2 = 0.0, dT2 = 0.0, p2 = 0.0, T2 = 0.0;
            for (int i = 0; i < n; ++i) {
                dp2 += alpha * delta[i] * alpha * delta[i];
                dT2 += alpha * delta[n + i] * alpha * delta[n + i];
                p2 += out.state.p[i] * out.state.p[i];
                T2 += out.state.T[i] * out.state.T[i];
            }
            if (std::sqrt(dp2) <= ncfg.rtol_step * std::sqrt(p2) &&
                std::sqrt(dT2) <= ncfg.rtol_step * std::sqrt(T2)) {
                out.converged = true;
                return out;
            }
        } catch (const std::domain_error&) {
            return out;   // current iterate left the model's domain
        } catch (const std::runtime_error&) {
            return out;   // preconditioner setup failure (singular level, zero pivot)
        }
    }
    return out;
}

inline StepRecord make_record(int step, double dt, const NewtonOutcome& o, double wall) {
    StepRecord r;
    r.step = step;
    r.dt_s = dt;
    r.newton_iters = o.newton_iters;
    r.linear_iters = o.linear_iters;
    r.converged = o.converged;
    r.assembly_s = o.assembly_s;
    r.precond_s = o.precond_s;
    r.gmres_s = o.gmres_s;
    r.step_s = wall;
    return r;
}

// Fixed plan: execute the listed steps; the first failure ends the run with
// the partial history kept, so callers can still report it.
inline SimulationResult run_simulation(const DiscreteSystem& sys, const State& initial,
                                       const TimestepPlan& plan, const NewtonConfig& ncfg,
                                       const PreconditionerConfig& pcfg) {
    using clock = std::chrono::steady_clock;
    SimulationResult res;
    res.state = initial;
    int step = 0;
    for (const double dt : plan.dts) {
        if (dt <= 0.0) throw std::invalid_argument("run_simulation: nonpositive dt");
        const auto t0 = clock::now();
        NewtonOutcome o = newton_solve(sys, res.state, dt, ncfg, pcfg);
        res.steps.push_back(make_record(step++, dt, o, detail::seconds_since(t0)));
        if (!o.converged) {
            res.failed = true;
            return res;
        }
        res.state = std::move(o.state);
        res.t_reached += dt;
    }
    return res;
}

// Adaptive controller: grow after easy steps, shrink after hard ones, halve
// and retry on failure, abort below dt_min. Failed attempts are recorded.
inline SimulationResult run_simulation_adaptive(const DiscreteSystem& sys, const State& initial,
                                                const TimeController& ctrl,
                                                const NewtonConfig& ncfg,
                                                const PreconditionerConfig& pcfg) {
    using clock = std::chrono::steady_clock;
    if (ctrl.t_end <= 0.0 || ctrl.dt_init <= 0.0 || ctrl.dt_min <= 0.0)
        throw std::invalid_argument("run_simulation_adaptive: invalid controller");
    const double dt_max = ctrl.dt_max > 0.0 ? ctrl.dt_max : ctrl.t_end;

    SimulationResult res;
    res.state = initial;
    double t = 0.0, dt = std::min(ctrl.dt_init, dt_max);
    int step = 0;
    while (t < ctrl.t_end * (1.0 - 1e-12)) {
        const double dt_use = std::min(dt, ctrl.t_end - t);
        const auto t0 = clock::now();
        NewtonOutcome o = newton_solve(sys, res.state, dt_use, ncfg, pcfg);
        res.steps.push_back(make_record(step++, dt_use, o, detail::seconds_since(t0)));
        if (o.converged) {
            res.state = std::move(o.state);
            t += dt_use;
            res.t_reached = t;
            if (o.newton_iters <= ctrl.target_newton - 1)
                dt = std::min(dt * ctrl.grow, dt_max);
            else if (o.newton_iters >= ctrl.target_newton + 2)
                dt = std::max(dt * ctrl.shrink, ctrl.dt_min);
        } else {
            dt = dt_use * ctrl.fail_shrink;
            if (dt < ctrl.dt_min) {
                res.failed = true;
                return res;
            }
        }
    }
    return res;
}

} // namespace thermoflow
