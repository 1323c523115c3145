#pragma once

// Case files: versioned JSON descriptions of a simulation setup (grid,
// fluid/rock parameters, permeability source, wells/heaters, initial
// conditions, time stepping, solver and preconditioner settings).
// Parsing is strict: unknown keys anywhere are load errors, referenced
// permeability files must exist at load time, and times are given in days.

#include <json.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "discretization.hpp"
#include "mesh.hpp"
#include "physics.hpp"
#include "precond.hpp"
#include "solver.hpp"

namespace thermoflow {

constexpr double seconds_per_day = 86400.0;
constexpr double millidarcy_to_m2 = 9.869233e-16;

enum class PermType { iso, aniso, file, lognormal };

struct PermSpec {
    PermType type = PermType::iso;
    double k = 3e-13;                       // m^2 (iso)
    double kx = 3e-13, ky = 3e-13, kz = 3e-13;
    std::string path;                       // resolved against the case file's directory
    int layer = 0;                          // slice index within each component
    int layers = 1;                         // slices per component in the file
    double scale = 1.0;
    double log_mean = std::log(3e-13);      // of ln K (lognormal)
    double log_sigma = 1.0;
    std::uint64_t seed = 0;
};

struct SourceSpec {
    SourceTerm term;                        // cell assigned when the grid is built
    std::vector<double> position;           // meters
};

struct TimeSpec {
    bool adaptive = false;
    std::vector<double> dts;                // seconds (fixed plan)
    double t_end = 0.0;                     // seconds (adaptive)
    double dt_init = 0.0;
    double dt_min = 1e-5 * seconds_per_day;
    double dt_max = 0.0;                    // 0: defaults to t_end
};

struct CaseSpec {
    std::string name;
    std::vector<int> dims;
    std::vector<double> lengths;
    bool gravity = false;
    double g = 9.80665;
    FluidModel fluid;
    double porosity = 0.2;
    double rho_r = 2650.0;
    double c_r = 920.0;
    double k_tr = 1.7295772056;
    PermSpec perm;
    double p_init = 4.1369e5;
    double T_init = 288.7056;
    std::vector<SourceSpec> sources;
    TimeSpec time;
    NewtonConfig solver;
    PreconditionerConfig precond;
};

// Deterministic standard normals: Box-Muller over mt19937_64, which has a
// standardized output sequence, so fields are reproducible across platforms.
inline std::vector<double> standard_normal_field(int n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    const auto uniform01 = [&gen]() {
        return (static_cast<double>(gen() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    };
    std::vector<double> z(n);
    for (int i = 0; i < n; ++i) {
        const double u1 = uniform01(), u2 = uniform01();
        z[i] = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
    return z;
}

// Whitespace-separated permeability values in millidarcy, layer-major with
// x fastest, either one component (isotropic) or kx,ky,kz concatenated.
inline std::vector<std::array<double, 3>> load_permeability_file(const std::string& path,
                                                                 int layer, int layers,
                                                                 int nx, int ny) {
    if (layers < 1) throw std::runtime_error("permeability file: layers must be >= 1");
    if (layer < 0 || layer >= layers)
        throw std::runtime_error("permeability file: slice " + std::to_string(layer) +
                                 " beyond file extent of " + std::to_string(layers) + " layers");
    std::ifstream in(path);
    if (!in) throw std::runtime_error("permeability file: cannot open " + path);
    std::vector<double> vals;
    double v = 0.0;
    while (in >> v) vals.push_back(v);
    const long per_comp = static_cast<long>(nx) * ny * layers;
    const long found = static_cast<long>(vals.size());
    int comps = 0;
    if (found == per_comp) comps = 1;
    else if (found == 3 * per_comp) comps = 3;
    else
        throw std::runtime_error("permeability file: expected " + std::to_string(per_comp) +
                                 " or " + std::to_string(3 * per_comp) + " values, found " +
                                 std::to_string(found));
    const long cells = static_cast<long>(nx) * ny;
    const long base = static_cast<long>(layer) * cells;
    std::vector<std::array<double, 3>> K(cells);
    for (long i = 0; i < cells; ++i) {
        const double kx = vals[base + i] * millidarcy_to_m2;
        const double ky = comps == 3 ? vals[per_comp + base + i] * millidarcy_to_m2 : kx;
        const double kz = comps == 3 ? vals[2 * per_comp + base + i] * millidarcy_to_m2 : kx;
        K[i] = {kx, ky, kz};
    }
    return K;
}

namespace detail {

inline void check_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                       const std::string& where) {
    if (!obj.is_object()) throw std::runtime_error("case load: " + where + " must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                ok = true;
                break;
            }
        if (!ok)
            throw std::runtime_error("case load: unknown key '" + it.key() + "' in " + where);
    }
}

template <typename T>
inline void read_into(const nlohmann::json& obj, const char* key, T& dst) {
    if (obj.contains(key)) dst = obj.at(key).get<T>();
}

} // namespace detail

inline CaseSpec load_case(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("case load: cannot open " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("case load: " + path + ": " + e.what());
    }

    try {
        detail::check_keys(j,
                           {"schema_version", "name", "grid", "gravity", "fluid", "rock",
                            "permeability", "initial", "sources", "time", "solver", "precond"},
                           "root");
        if (!j.contains("schema_version") || j.at("schema_version").get<int>() != 1)
            throw std::runtime_error("case load: schema_version 1 required");

        CaseSpec c;
        c.name = j.at("name").get<std::string>();

        const auto& g = j.at("grid");
        detail::check_keys(g, {"dims", "lengths"}, "grid");
        c.dims = g.at("dims").get<std::vector<int>>();
        c.lengths = g.at("lengths").get<std::vector<double>>();
        if (c.dims.size() != c.lengths.size())
            throw std::runtime_error("case load: grid dims and lengths disagree");

        if (j.contains("gravity")) {
            const auto& gr = j.at("gravity");
            detail::check_keys(gr, {"enabled", "g"}, "gravity");
            detail::read_into(gr, "enabled", c.gravity);
            detail::read_into(gr, "g", c.g);
        }

        if (j.contains("fluid")) {
            const auto& f = j.at("fluid");
            detail::check_keys(f,
                               {"gamma_sg", "mu_constant", "rho0", "p_ref", "T_ref", "c", "beta",
                                "beta_sign", "c_v", "k_tf"},
                               "fluid");
            detail::read_into(f, "gamma_sg", c.fluid.gamma_sg);
            detail::read_into(f, "rho0", c.fluid.rho0);
            detail::read_into(f, "p_ref", c.fluid.p_ref);
            detail::read_into(f, "T_ref", c.fluid.T_ref);
            detail::read_into(f, "c", c.fluid.c);
            detail::read_into(f, "beta", c.fluid.beta);
            detail::read_into(f, "c_v", c.fluid.c_v);
            detail::read_into(f, "k_tf", c.fluid.k_tf);
            if (f.contains("beta_sign")) {
                const double s = f.at("beta_sign").get<double>();
                if (s != 1.0 && s != -1.0)
                    throw std::runtime_error("case load: beta_sign must be +1 or -1");
                c.fluid.beta_sign = s;
            }
            if (f.contains("mu_constant")) c.fluid.mu_constant = f.at("mu_constant").get<double>();
        }

        if (j.contains("rock")) {
            const auto& r = j.at("rock");
            detail::check_keys(r, {"porosity", "rho_r", "c_r", "k_tr"}, "rock");
            detail::read_into(r, "porosity", c.porosity);
            detail::read_into(r, "rho_r", c.rho_r);
            detail::read_into(r, "c_r", c.c_r);
            detail::read_into(r, "k_tr", c.k_tr);
        }

        if (j.contains("permeability")) {
            const auto& p = j.at("permeability");
            detail::check_keys(p,
                               {"type", "k", "kx", "ky", "kz", "path", "layer", "layers", "scale",
                                "log_mean", "log_sigma", "seed"},
                               "permeability");
            const std::string type = p.value("type", std::string("iso"));
            if (type == "iso") {
                c.perm.type = PermType::iso;
                detail::read_into(p, "k", c.perm.k);
            } else if (type == "aniso") {
                c.perm.type = PermType::aniso;
                detail::read_into(p, "kx", c.perm.kx);
                detail::read_into(p, "ky", c.perm.ky);
                detail::read_into(p, "kz", c.perm.kz);
            } else if (type == "file") {
                c.perm.type = PermType::file;
                std::filesystem::path fp = p.at("path").get<std::string>();
                if (fp.is_relative())
                    fp = std::filesystem::path(path).parent_path() / fp;
                c.perm.path = fp.string();
                if (!std::filesystem::exists(fp))
                    throw std::runtime_error("case load: permeability file not found: " +
                                             c.perm.path);
                detail::read_into(p, "layer", c.perm.layer);
                detail::read_into(p, "layers", c.perm.layers);
                detail::read_into(p, "scale", c.perm.scale);
            } else if (type == "lognormal") {
                c.perm.type = PermType::lognormal;
                detail::read_into(p, "log_mean", c.perm.log_mean);
                detail::read_into(p, "log_sigma", c.perm.log_sigma);
                detail::read_into(p, "seed", c.perm.seed);
                detail::read_into(p, "scale", c.perm.scale);
            } else {
                throw std::runtime_error("case load: unknown permeability type '" + type + "'");
            }
        }

        if (j.contains("initial")) {
            const auto& ini = j.at("initial");
            detail::check_keys(ini, {"p", "T"}, "initial");
            detail::read_into(ini, "p", c.p_init);
            detail::read_into(ini, "T", c.T_init);
        }

        if (j.contains("sources")) {
            for (const auto& s : j.at("sources")) {
                detail::check_keys(s,
                                   {"kind", "position", "rate_mode", "q", "p_bh", "T_inj", "U",
                                    "T_heater", "r_w", "h", "d_x", "d_y"},
                                   "source");
                SourceSpec ss;
                const std::string kind = s.at("kind").get<std::string>();
                if (kind == "injector") ss.term.kind = SourceKind::injector;
                else if (kind == "producer") ss.term.kind = SourceKind::producer;
                else if (kind == "heater") ss.term.kind = SourceKind::heater;
                else throw std::runtime_error("case load: unknown source kind '" + kind + "'");
                ss.position = s.at("position").get<std::vector<double>>();
                if (s.contains("rate_mode")) {
                    const std::string rm = s.at("rate_mode").get<std::string>();
                    if (rm == "fixed") ss.term.rate_mode = RateMode::fixed;
                    else if (rm == "peaceman") ss.term.rate_mode = RateMode::peaceman;
                    else throw std::runtime_error("case load: unknown rate_mode '" + rm + "'");
                }
                detail::read_into(s, "q", ss.term.q);
                detail::read_into(s, "p_bh", ss.term.p_bh);
                detail::read_into(s, "T_inj", ss.term.T_inj);
                detail::read_into(s, "U", ss.term.U);
                detail::read_into(s, "T_heater", ss.term.T_heater);
                detail::read_into(s, "r_w", ss.term.r_w);
                detail::read_into(s, "h", ss.term.h);
                detail::read_into(s, "d_x", ss.term.d_x);
                detail::read_into(s, "d_y", ss.term.d_y);
                c.sources.push_back(std::move(ss));
            }
        }

        {
            const auto& t = j.at("time");
            detail::check_keys(
                t, {"mode", "dts_days", "t_end_days", "dt_init_days", "dt_min_days", "dt_max_days"},
                "time");
            const std::string mode = t.at("mode").get<std::string>();
            if (mode == "fixed") {
                c.time.adaptive = false;
                for (const double d : t.at("dts_days").get<std::vector<double>>())
                    c.time.dts.push_back(d * seconds_per_day);
                if (c.time.dts.empty())
                    throw std::runtime_error("case load: fixed time plan needs dts_days");
            } else if (mode == "adaptive") {
                c.time.adaptive = true;
                c.time.t_end = t.at("t_end_days").get<double>() * seconds_per_day;
                c.time.dt_init = t.at("dt_init_days").get<double>() * seconds_per_day;
                if (t.contains("dt_min_days"))
                    c.time.dt_min = t.at("dt_min_days").get<double>() * seconds_per_day;
                if (t.contains("dt_max_days"))
                    c.time.dt_max = t.at("dt_max_days").get<double>() * seconds_per_day;
            } else {
                throw std::runtime_error("case load: unknown time mode '" + mode + "'");
            }
        }

        if (j.contains("solver")) {
            const auto& s = j.at("solver");
            detail::check_keys(s,
                               {"rtol_f", "rtol_step", "max_newton", "linesearch_max", "gmres_rtol",
                                "gmres_restart", "gmres_maxit"},
                               "solver");
            detail::read_into(s, "rtol_f", c.solver.rtol_f);
            detail::read_into(s, "rtol_step", c.solver.rtol_step);
            detail::read_into(s, "max_newton", c.solver.max_newton);
            detail::read_into(s, "linesearch_max", c.solver.linesearch_max);
            detail::read_into(s, "gmres_rtol", c.solver.gmres_rtol);
            detail::read_into(s, "gmres_restart", c.solver.gmres_restart);
            detail::read_into(s, "gmres_maxit", c.solver.gmres_maxit);
        }

        if (j.contains("precond")) {
            const auto& p = j.at("precond");
            detail::check_keys(p, {"kind", "schur", "decoupling"}, "precond");
            if (p.contains("kind"))
                c.precond.kind = parse_precond_kind(p.at("kind").get<std::string>());
            if (p.contains("schur"))
                c.precond.schur = parse_schur_kind(p.at("schur").get<std::string>());
            if (p.contains("decoupling"))
                c.precond.decoupling = parse_decoupling_kind(p.at("decoupling").get<std::string>());
        }
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("case load: " + path + ": " + e.what());
    }
}

// Square (or cubic) resolution override used by scaling sweeps; physical
// lengths are preserved.
inline void apply_grid_override(CaseSpec& c, int n) {
    if (n < 1) throw std::invalid_argument("grid override must be positive");
    for (auto& d : c.dims) d = n;
}

struct CaseSetup {
    Grid grid;
    FluidModel fluid;
    RockModel rock;
    std::vector<SourceTerm> sources;
    State initial;
    double gravity = 0.0;
};

inline int locate_cell(const Grid& grid, const std::vector<double>& pos) {
    if (static_cast<int>(pos.size()) != grid.ndim())
        throw std::runtime_error("source position dimension does not match the grid");
    int ijk[3] = {0, 0, 0};
    for (int d = 0; d < grid.ndim(); ++d) {
        const int nd = grid.dims()[d];
        int i = static_cast<int>(std::floor(pos[d] / grid.cell_size()[d]));
        ijk[d] = std::min(std::max(i, 0), nd - 1);
    }
    return grid.cell_index(ijk[0], ijk[1], ijk[2]);
}

inline CaseSetup build_setup(const CaseSpec& c) {
    CaseSetup s;
    s.grid = build_grid(c.dims, c.lengths);
    const int n = s.grid.num_cells();

    s.fluid = c.fluid;
    switch (c.perm.type) {
        case PermType::iso:
            s.rock = RockModel::uniform(n, c.porosity, c.perm.k, c.perm.k, c.perm.k);
            break;
        case PermType::aniso:
            s.rock = RockModel::uniform(n, c.porosity, c.perm.kx, c.perm.ky, c.perm.kz);
            break;
        case PermType::file: {
            if (s.grid.ndim() != 2)
                throw std::runtime_error("file permeability supports 2D grids only");
            s.rock = RockModel::uniform(n, c.porosity, 1.0, 1.0, 1.0);
            s.rock.perm = load_permeability_file(c.perm.path, c.perm.layer, c.perm.layers,
                                                 s.grid.dims()[0], s.grid.dims()[1]);
            for (auto& K : s.rock.perm)
                for (double& v : K) v *= c.perm.scale;
            break;
        }
        case PermType::lognormal: {
            s.rock = RockModel::uniform(n, c.porosity, 1.0, 1.0, 1.0);
            const std::vector<double> z = standard_normal_field(n, c.perm.seed);
            for (int i = 0; i < n; ++i) {
                const double k =
                    std::exp(c.perm.log_mean + c.perm.log_sigma * z[i]) * c.perm.scale;
                s.rock.perm[i] = {k, k, k};
            }
            break;
        }
    }
    s.rock.rho_r = c.rho_r;
    s.rock.c_r = c.c_r;
    s.rock.k_tr = c.k_tr;

    for (const auto& ss : c.sources) {
        SourceTerm t = ss.term;
        t.cell = locate_cell(s.grid, ss.position);
        s.sources.push_back(t);
    }

    s.initial.p.assign(n, c.p_init);
    s.initial.T.assign(n, c.T_init);
    s.gravity = c.gravity ? c.g : 0.0;
    return s;
}

// Drive a loaded case through its configured time plan.
inline SimulationResult run_case(const CaseSpec& c, const CaseSetup& setup) {
    const DiscreteSystem sys(setup.grid, setup.fluid, setup.rock, setup.sources, setup.gravity);
    if (c.time.adaptive) {
        TimeController ctrl;
        ctrl.t_end = c.time.t_end;
        ctrl.dt_init = c.time.dt_init;
        ctrl.dt_min = c.time.dt_min;
        ctrl.dt_max = c.time.dt_max;
        return run_simulation_adaptive(sys, setup.initial, ctrl, c.solver, c.precond);
    }
    TimestepPlan plan;
    plan.dts = c.time.dts;
    return run_simulation(sys, setup.initial, plan, c.solver, c.precond);
}

} // namespace thermoflow
