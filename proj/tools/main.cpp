// Command-line driver: run cases, sweep grid sizes against preconditioner
// variants, print the condition-number diagnostic, and summarize metrics.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "thermoflow/cases.hpp"
#include "thermoflow/conddiag.hpp"
#include "thermoflow/metrics.hpp"
#include "thermoflow/precond.hpp"
#include "thermoflow/solver.hpp"

using namespace thermoflow;

namespace {

// The CSV "schur" column carries the preconditioner's sub-variant: the
// Schur approximation for block, the decoupling strategy for cpr.
std::string variant_label(const PreconditionerConfig& cfg) {
    return cfg.kind == PrecondKind::block ? to_string(cfg.schur) : to_string(cfg.decoupling);
}

std::vector<int> parse_int_list(const std::string& csv) {
    std::vector<int> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
    if (out.empty()) throw CLI::ValidationError("expected a comma-separated integer list");
    return out;
}

// Tokens look like "block", "block:s_att", "cpr", "cpr:quasi_impes".
std::vector<PreconditionerConfig> parse_precond_list(const std::string& csv) {
    std::vector<PreconditionerConfig> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        PreconditionerConfig cfg;
        const auto colon = tok.find(':');
        const std::string kind = tok.substr(0, colon);
        cfg.kind = parse_precond_kind(kind);
        if (colon != std::string::npos) {
            const std::string sub = tok.substr(colon + 1);
            if (cfg.kind == PrecondKind::block)
                cfg.schur = parse_schur_kind(sub);
            else
                cfg.decoupling = parse_decoupling_kind(sub);
        }
        out.push_back(cfg);
    }
    if (out.empty()) throw CLI::ValidationError("expected a comma-separated preconditioner list");
    return out;
}

void dump_blocks(const CaseSpec& spec, const CaseSetup& setup, const std::string& dir) {
    const DiscreteSystem sys(setup.grid, setup.fluid, setup.rock, setup.sources, setup.gravity);
    const double dt = spec.time.adaptive ? spec.time.dt_init : spec.time.dts.front();
    const BlockJacobian J = sys.jacobian(setup.initial, setup.initial, dt);
    const CsrMatrix Se = sys.schur_approx(setup.initial, dt);
    std::filesystem::create_directories(dir);
    const auto at = [&dir](const char* name) {
        return (std::filesystem::path(dir) / name).string();
    };
    mm_write(at("App.mtx"), J.App);
    mm_write(at("ApT.mtx"), J.ApT);
    mm_write(at("ATp.mtx"), J.ATp);
    mm_write(at("ATT.mtx"), J.ATT);
    mm_write(at("Se.mtx"), Se);
    mm_write(at("Sdiag.mtx"), schur_diag_matrix(J));
    std::vector<std::tuple<int, int, double>> trip;
    for (int i = 0; i < (int)J.b_p.size(); ++i) trip.emplace_back(i, 0, J.b_p[i]);
    mm_write(at("b_p.mtx"), csr_from_triplets((int)J.b_p.size(), 1, trip));
    trip.clear();
    for (int i = 0; i < (int)J.b_T.size(); ++i) trip.emplace_back(i, 0, J.b_T[i]);
    mm_write(at("b_T.mtx"), csr_from_triplets((int)J.b_T.size(), 1, trip));
}

// Runs one configured case and appends its step records. Returns false if
// the run failed; failed attempts are still recorded.
bool run_one(const CaseSpec& spec, std::vector<MetricsRecord>& records) {
    const CaseSetup setup = build_setup(spec);
    const SimulationResult res = run_case(spec, setup);
    const std::string variant = variant_label(spec.precond);
    for (const auto& s : res.steps)
        records.push_back(make_metrics_record(spec.name, spec.dims[0],
                                              to_string(spec.precond.kind), variant, s));
    std::printf("%s n=%d %s/%s: steps=%zu newton=%ld linear=%ld%s\n", spec.name.c_str(),
                spec.dims[0], to_string(spec.precond.kind), variant.c_str(), res.steps.size(),
                res.total_newton(), res.total_linear(), res.failed ? " FAILED" : "");
    return !res.failed;
}

void print_summary(const std::vector<SummaryRow>& rows) {
    std::printf("%-24s %-7s %-12s %6s %6s %8s %8s %12s %10s\n", "case", "precond", "variant", "n",
                "steps", "newton", "linear", "lin/newton", "converged");
    for (const auto& r : rows)
        std::printf("%-24s %-7s %-12s %6d %6d %8ld %8ld %12.4f %10s\n", r.case_id.c_str(),
                    r.precond.c_str(), r.schur.c_str(), r.n, r.steps, r.total_newton,
                    r.total_linear, r.avg_linear_per_newton(), r.all_converged ? "yes" : "NO");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Implicit single-phase thermal porous-media flow benchmark"};
    app.require_subcommand(1);

    std::string case_path, out_csv, dump_dir, precond_str, schur_str, decoupling_str;
    std::string grids_str = "20,40,80,160", preconds_str = "block,cpr";
    int grid_override = 0;
    double gmres_rtol = 0.0, dt_days = 0.0;

    auto* run = app.add_subcommand("run", "run one case");
    run->add_option("case", case_path, "case file (JSON)")->required();
    run->add_option("--precond", precond_str, "block|cpr");
    run->add_option("--schur", schur_str, "s_tilde_T|s_att|s_diag (block)");
    run->add_option("--decoupling", decoupling_str, "none|quasi_impes|true_impes (cpr)");
    run->add_option("--grid", grid_override, "override resolution to N per side");
    run->add_option("--gmres-rtol", gmres_rtol, "override linear tolerance");
    run->add_option("--out", out_csv, "write per-step metrics CSV");
    run->add_option("--dump-blocks", dump_dir, "write Jacobian blocks as Matrix Market files");

    auto* sweep = app.add_subcommand("sweep", "grid x preconditioner scaling study");
    sweep->add_option("case", case_path, "case file (JSON)")->required();
    sweep->add_option("--grids", grids_str, "comma-separated resolutions");
    sweep->add_option("--preconds", preconds_str,
                      "comma-separated kind[:variant] tokens, e.g. block:s_att,cpr");
    sweep->add_option("--gmres-rtol", gmres_rtol, "override linear tolerance");
    sweep->add_option("--out", out_csv, "write per-step metrics CSV");

    auto* cond = app.add_subcommand("conddiag", "condition numbers of the Schur approximations");
    cond->add_option("case", case_path, "case file (JSON)")->required();
    cond->add_option("--grid", grid_override, "override resolution to N per side");
    cond->add_option("--dt-days", dt_days, "step size for the diagnostic, days");

    auto* summ = app.add_subcommand("summarize", "aggregate a metrics CSV");
    std::string csv_path;
    summ->add_option("csv", csv_path, "metrics CSV from run/sweep")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            CaseSpec spec = load_case(case_path);
            if (grid_override > 0) apply_grid_override(spec, grid_override);
            if (!precond_str.empty()) spec.precond.kind = parse_precond_kind(precond_str);
            if (!schur_str.empty()) spec.precond.schur = parse_schur_kind(schur_str);
            if (!decoupling_str.empty())
                spec.precond.decoupling = parse_decoupling_kind(decoupling_str);
            if (gmres_rtol > 0.0) spec.solver.gmres_rtol = gmres_rtol;
            if (!dump_dir.empty()) dump_blocks(spec, build_setup(spec), dump_dir);
            std::vector<MetricsRecord> records;
            const bool ok = run_one(spec, records);
            if (!out_csv.empty()) write_metrics(out_csv, records);
            print_summary(summarize(records));
            return ok ? 0 : 2;
        }
        if (sweep->parsed()) {
            const CaseSpec base = load_case(case_path);
            const std::vector<int> grids = parse_int_list(grids_str);
            const std::vector<PreconditionerConfig> preconds = parse_precond_list(preconds_str);
            std::vector<MetricsRecord> records;
            for (const int n : grids)
                for (const auto& pc : preconds) {
                    CaseSpec spec = base;
                    apply_grid_override(spec, n);
                    spec.precond = pc;
                    if (gmres_rtol > 0.0) spec.solver.gmres_rtol = gmres_rtol;
                    run_one(spec, records);   // failures recorded, sweep continues
                }
            if (!out_csv.empty()) write_metrics(out_csv, records);
            print_summary(summarize(records));
            return 0;
        }
        if (cond->parsed()) {
            CaseSpec spec = load_case(case_path);
            if (grid_override > 0) apply_grid_override(spec, grid_override);
            const CaseSetup setup = build_setup(spec);
            const DiscreteSystem sys(setup.grid, setup.fluid, setup.rock, setup.sources,
                                     setup.gravity);
            const double dt = dt_days > 0.0 ? dt_days * seconds_per_day
                              : spec.time.adaptive ? spec.time.dt_init
                                                   : spec.time.dts.front();
            const ConditionReport r = condition_diagnostic(sys, setup.initial, dt);
            std::printf("cond2(S)            = %.6e\n", r.cond_S);
            std::printf("cond2(ATT)          = %.6e\n", r.cond_ATT);
            std::printf("cond2(Se^-1 S)      = %.6e\n", r.cond_se_inv_S);
            std::printf("cond2(ATT^-1 S)     = %.6e\n", r.cond_att_inv_S);
            std::printf("cond2(Sdiag^-1 S)   = %.6e\n", r.cond_diag_inv_S);
            return 0;
        }
        // summarize
        print_summary(summarize(read_metrics(csv_path)));
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
