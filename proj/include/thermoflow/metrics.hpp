#pragma once

// Per-step run metrics as a stable CSV schema, plus the exact per-group
// summary (total linear iterations over total Newton iterations) that the
// scaling studies compare.

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "solver.hpp"

namespace thermoflow {

struct MetricsRecord {
    std::string case_id;
    int n = 0;                 // resolution parameter (cells per side)
    std::string precond;
    std::string schur;         // "-" when the preconditioner has no Schur stage
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

inline const char* metrics_header() {
    return "case,n,precond,schur,step,dt_s,newton_iters,linear_iters,converged,"
           "assembly_s,precond_s,gmres_s,step_s";
}

inline MetricsRecord make_metrics_record(const std::string& case_id, int n,
                                         const std::string& precond, const std::string& schur,
                                         const StepRecord& s) {
    MetricsRecord r;
    r.case_id = case_id;
    r.n = n;
    r.precond = precond;
    r.schur = schur;
    r.step = s.step;
    r.dt_s = s.dt_s;
    r.newton_iters = s.newton_iters;
    r.linear_iters = s.linear_iters;
    r.converged = s.converged;
    r.assembly_s = s.assembly_s;
    r.precond_s = s.precond_s;
    r.gmres_s = s.gmres_s;
    r.step_s = s.step_s;
    return r;
}

inline void write_metrics(const std::string& path, const std::vector<MetricsRecord>& records) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("metrics: cannot open " + path + " for writing");
    out << metrics_header() << "\n" << std::setprecision(17);
    for (const auto& r : records) {
        out << r.case_id << "," << r.n << "," << r.precond << "," << r.schur << "," << r.step
            << "," << r.dt_s << "," << r.newton_iters << "," << r.linear_iters << ","
            << (r.converged ? 1 : 0) << "," << r.assembly_s << "," << r.precond_s << ","
            << r.gmres_s << "," << r.step_s << "\n";
    }
    if (!out) throw std::runtime_error("metrics: write failed for " + path);
}

inline std::vector<MetricsRecord> read_metrics(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("metrics: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line != metrics_header())
        throw std::runtime_error("metrics: unrecognized header in " + path);
    std::vector<MetricsRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) f.push_back(tok);
        if (f.size() != 13)
            throw std::runtime_error("metrics: malformed row in " + path + ": " + line);
        MetricsRecord r;
        r.case_id = f[0];
        r.n = std::stoi(f[1]);
        r.precond = f[2];
        r.schur = f[3];
        r.step = std::stoi(f[4]);
        r.dt_s = std::stod(f[5]);
        r.newton_iters = std::stoi(f[6]);
        r.linear_iters = std::stoi(f[7]);
        r.converged = std::stoi(f[8]) != 0;
        r.assembly_s = std::stod(f[9]);
        r.precond_s = std::stod(f[10]);
        r.gmres_s = std::stod(f[11]);
        r.step_s = std::stod(f[12]);
        out.push_back(std::move(r));
    }
    return out;
}

struct SummaryRow {
    std::string case_id;
    std::string precond;
    std::string schur;
    int n = 0;
    int steps = 0;
    long total_newton = 0;
    long total_linear = 0;
    bool all_converged = true;

    // Exact ratio of the integer totals; the headline scaling metric.
    double avg_linear_per_newton() const {
        return total_newton == 0 ? 0.0
                                 : static_cast<double>(total_linear) /
                                       static_cast<double>(total_newton);
    }
};

inline std::vector<SummaryRow> summarize(const std::vector<MetricsRecord>& records) {
    std::vector<SummaryRow> rows;
    for (const auto& r : records) {
        SummaryRow* row = nullptr;
        for (auto& existing : rows)
            if (existing.case_id == r.case_id && existing.precond == r.precond &&
                existing.schur == r.schur && existing.n == r.n) {
                row = &existing;
                break;
            }
        if (row == nullptr) {
            rows.push_back(SummaryRow{r.case_id, r.precond, r.schur, r.n, 0, 0, 0, true});
            row = &rows.back();
        }
        row->steps += 1;
        row->total_newton += r.newton_iters;
        row->total_linear += r.linear_iters;
        row->all_converged = row->all_converged && r.converged;
    }
    std::sort(rows.begin(), rows.end(), [](const SummaryRow& a, const SummaryRow& b) {
        return std::tie(a.case_id, a.precond, a.schur, a.n) <
               std::tie(b.case_id, b.precond, b.schur, b.n);
    });
    return rows;
}

} // namespace thermoflow
