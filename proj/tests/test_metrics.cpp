#include <catch_amalgamated.hpp>

#include <thermoflow/metrics.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace thermoflow;
using Catch::Matchers::ContainsSubstring;

namespace {

std::filesystem::path scratch_dir() {
    const auto d = std::filesystem::temp_directory_path() / "thermoflow_metrics_tests";
    std::filesystem::create_directories(d);
    return d;
}

std::string path_of(const std::string& name) { return (scratch_dir() / name).string(); }

std::string write_text(const std::string& name, const std::string& text) {
    const auto p = path_of(name);
    std::ofstream out(p);
    out << text;
    return p;
}

MetricsRecord record(const std::string& case_id, const std::string& precond,
                     const std::string& schur, int n, int step, int newton, int linear,
                     bool ok = true) {
    MetricsRecord r;
    r.case_id = case_id;
    r.n = n;
    r.precond = precond;
    r.schur = schur;
    r.step = step;
    r.dt_s = 86400.0;
    r.newton_iters = newton;
    r.linear_iters = linear;
    r.converged = ok;
    return r;
}

}  // namespace

TEST_CASE("the metrics header is frozen") {
    CHECK(std::string(metrics_header()) ==
          "case,n,precond,schur,step,dt_s,newton_iters,linear_iters,converged,"
          "assembly_s,precond_s,gmres_s,step_s");
}

TEST_CASE("records round trip through csv") {
    MetricsRecord a = record("heaters", "block", "s_tilde_T", 40, 0, 3, 12);
    a.dt_s = 86400.0 / 3.0;   // needs all 17 digits to survive
    a.assembly_s = 0.1234567890123456;
    a.precond_s = 1.0 / 7.0;
    a.gmres_s = 2.5e-4;
    a.step_s = 3.75;
    MetricsRecord b = record("heaters", "cpr", "quasi_impes", 40, 1, 4, 31, false);
    const std::vector<MetricsRecord> in{a, b};

    const auto p = path_of("roundtrip.csv");
    write_metrics(p, in);
    const std::vector<MetricsRecord> out = read_metrics(p);

    REQUIRE(out.size() == 2);
    for (int i = 0; i < 2; ++i) {
        CHECK(out[i].case_id == in[i].case_id);
        CHECK(out[i].n == in[i].n);
        CHECK(out[i].precond == in[i].precond);
        CHECK(out[i].schur == in[i].schur);
        CHECK(out[i].step == in[i].step);
        CHECK(out[i].dt_s == in[i].dt_s);
        CHECK(out[i].newton_iters == in[i].newton_iters);
        CHECK(out[i].linear_iters == in[i].linear_iters);
        CHECK(out[i].converged == in[i].converged);
        CHECK(out[i].assembly_s == in[i].assembly_s);
        CHECK(out[i].precond_s == in[i].precond_s);
        CHECK(out[i].gmres_s == in[i].gmres_s);
        CHECK(out[i].step_s == in[i].step_s);
    }
}

TEST_CASE("step records translate into metrics rows") {
    StepRecord s;
    s.step = 7;
    s.dt_s = 1800.0;
    s.newton_iters = 5;
    s.linear_iters = 40;
    s.converged = true;
    s.assembly_s = 0.25;
    s.precond_s = 0.5;
    s.gmres_s = 0.75;
    s.step_s = 2.0;
    const MetricsRecord r = make_metrics_record("box", 20, "block", "s_att", s);
    CHECK(r.case_id == "box");
    CHECK(r.n == 20);
    CHECK(r.precond == "block");
    CHECK(r.schur == "s_att");
    CHECK(r.step == 7);
    CHECK(r.dt_s == 1800.0);
    CHECK(r.newton_iters == 5);
    CHECK(r.linear_iters == 40);
    CHECK(r.converged);
    CHECK(r.assembly_s == 0.25);
    CHECK(r.precond_s == 0.5);
    CHECK(r.gmres_s == 0.75);
    CHECK(r.step_s == 2.0);
}

TEST_CASE("summarize computes exact iteration ratios per group") {
    std::vector<MetricsRecord> rows;
    // one group spread over three steps: 27 linear / 12 newton = 2.25 exactly
    rows.push_back(record("zeta", "block", "s_tilde_T", 40, 0, 3, 7));
    rows.push_back(record("zeta", "block", "s_tilde_T", 40, 1, 4, 9));
    rows.push_back(record("zeta", "block", "s_tilde_T", 40, 2, 5, 11));
    // same case, different preconditioner; one step failed
    rows.push_back(record("zeta", "cpr", "none", 40, 0, 6, 50));
    rows.push_back(record("zeta", "cpr", "none", 40, 1, 8, 70, false));
    // different case and resolution
    rows.push_back(record("alpha", "block", "s_tilde_T", 80, 0, 2, 10));
    rows.push_back(record("alpha", "block", "s_tilde_T", 40, 0, 2, 6));

    const std::vector<SummaryRow> s = summarize(rows);
    REQUIRE(s.size() == 4);
    // sorted by case, precond, schur, then n
    CHECK(s[0].case_id == "alpha");
    CHECK(s[0].n == 40);
    CHECK(s[1].case_id == "alpha");
    CHECK(s[1].n == 80);
    CHECK(s[2].case_id == "zeta");
    CHECK(s[2].precond == "block");
    CHECK(s[3].precond == "cpr");

    CHECK(s[2].steps == 3);
    CHECK(s[2].total_newton == 12);
    CHECK(s[2].total_linear == 27);
    CHECK(s[2].avg_linear_per_newton() == 2.25);
    CHECK(s[2].all_converged);

    CHECK(s[3].steps == 2);
    CHECK(s[3].total_newton == 14);
    CHECK(s[3].total_linear == 120);
    CHECK_FALSE(s[3].all_converged);

    CHECK(s[0].avg_linear_per_newton() == 3.0);
    CHECK(s[1].avg_linear_per_newton() == 5.0);
}

TEST_CASE("a group with no newton iterations has ratio zero") {
    const std::vector<SummaryRow> s = summarize({record("idle", "block", "s_att", 10, 0, 0, 0)});
    REQUIRE(s.size() == 1);
    CHECK(s[0].avg_linear_per_newton() == 0.0);
}

TEST_CASE("malformed metrics files are rejected") {
    SECTION("wrong header") {
        const auto p = write_text("bad_header.csv", "iterations,newton\n1,2\n");
        CHECK_THROWS_WITH(read_metrics(p), ContainsSubstring("unrecognized header"));
    }
    SECTION("short row") {
        const auto p = write_text("short_row.csv",
                                  std::string(metrics_header()) + "\nrun,40,block,s_att,0\n");
        CHECK_THROWS_WITH(read_metrics(p), ContainsSubstring("malformed row"));
    }
    SECTION("missing file") {
        CHECK_THROWS_WITH(read_metrics(path_of("absent.csv")), ContainsSubstring("cannot open"));
    }
}

TEST_CASE("an empty record list writes a header-only file") {
    const auto p = path_of("empty.csv");
    write_metrics(p, {});
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str() == std::string(metrics_header()) + "\n");
    CHECK(read_metrics(p).empty());
}
