#include <catch_amalgamated.hpp>

#include <thermoflow/conddiag.hpp>

#include <stdexcept>
#include <vector>

using namespace thermoflow;
using Catch::Approx;

namespace {

CsrMatrix diag2(double a, double b) {
    return csr_from_triplets(2, 2, {{0, 0, a}, {1, 1, b}});
}

}  // namespace

TEST_CASE("condition numbers of a hand-built two-cell system") {
    BlockJacobian J;
    J.App = diag2(2.0, 4.0);
    J.ApT = diag2(1.0, 1.0);
    J.ATp = diag2(1.0, 2.0);
    J.ATT = diag2(3.0, 5.0);
    // S = ATT - ATp App^{-1} ApT = diag(3 - 1/2, 5 - 1/2)
    const CsrMatrix Se = diag2(2.5, 4.5);

    const ConditionReport r = condition_numbers(J, Se);
    CHECK(r.cond_S == Approx(1.8).epsilon(1e-12));
    CHECK(r.cond_ATT == Approx(5.0 / 3.0).epsilon(1e-12));
    CHECK(r.cond_se_inv_S == Approx(1.0).epsilon(1e-12));
    // ATT^{-1} S = diag(5/6, 9/10)
    CHECK(r.cond_att_inv_S == Approx(1.08).epsilon(1e-12));
    // App is diagonal, so eliminating through diag(App) reproduces S exactly
    CHECK(r.cond_diag_inv_S == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("condition numbers reject a singular pressure block") {
    BlockJacobian J;
    J.App = csr_from_triplets(2, 2, {{0, 0, 1.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 1.0}});
    J.ApT = diag2(1.0, 1.0);
    J.ATp = diag2(1.0, 1.0);
    J.ATT = diag2(1.0, 1.0);
    CHECK_THROWS_AS(condition_numbers(J, diag2(1.0, 1.0)), std::runtime_error);
}

TEST_CASE("condition diagnostic enforces the dense-size cap") {
    const Grid g = build_grid({3, 3}, {3.0, 3.0});
    const RockModel rk = RockModel::uniform(9, 0.2, 3e-13, 3e-13, 3e-13);
    const DiscreteSystem sys(g, FluidModel{}, rk, std::vector<SourceTerm>{});
    const State x{std::vector<double>(9, 1.0e6), std::vector<double>(9, 300.0)};
    CHECK_THROWS_AS(condition_diagnostic(sys, x, 1.0e4, 4), std::invalid_argument);
}

TEST_CASE("condition diagnostic rejects a structurally singular initial Jacobian") {
    // one closed cell of incompressible, non-expanding fluid: its mass row is
    // exactly zero, so no Newton update exists
    const Grid g = build_grid({1, 1}, {1.0, 1.0});
    FluidModel fl;
    fl.c = 0.0;
    fl.beta = 0.0;
    fl.mu_constant = 0.01;
    const RockModel rk = RockModel::uniform(1, 0.2, 3e-13, 3e-13, 3e-13);
    const DiscreteSystem sys(g, fl, rk, std::vector<SourceTerm>{});
    const State x{{1.0e6}, {300.0}};
    CHECK_THROWS_WITH(condition_diagnostic(sys, x, 1.0e4),
                      "condition diagnostic: singular Jacobian at the initial state");
}

TEST_CASE("decoupled fluid makes every Schur variant exact") {
    // incompressible, non-expanding fluid with constant viscosity: pressure no
    // longer feels temperature (ApT = 0), the exact Schur complement IS the
    // temperature block, and all three approximations coincide with it
    const Grid g = build_grid({4, 4}, {8.0, 8.0});
    FluidModel fl;
    fl.c = 0.0;
    fl.beta = 0.0;
    fl.mu_constant = 0.01;
    const RockModel rk = RockModel::uniform(16, 0.2, 3e-13, 3e-13, 3e-13);
    SourceTerm heat;
    heat.kind = SourceKind::heater;
    heat.cell = 5;
    heat.U = 5.44409e-6;
    heat.T_heater = 422.039;
    SourceTerm inj;    // fixed feed keeps the producer strictly above p_bh
    inj.kind = SourceKind::injector;
    inj.cell = 0;
    inj.q = 1.0e-7;
    inj.T_inj = 422.039;
    SourceTerm prod;   // bottom-hole-pressure well grounds the pressure block
    prod.kind = SourceKind::producer;
    prod.cell = 10;
    prod.rate_mode = RateMode::peaceman;
    prod.p_bh = 2.0e5;
    prod.q = 1.0e-3;
    const DiscreteSystem sys(g, fl, rk, {heat, inj, prod});

    State x;
    for (int i = 0; i < 16; ++i) {
        x.p.push_back(4.0e5 + 500.0 * i);
        x.T.push_back(300.0 + 2.0 * (i % 5));
    }
    const ConditionReport r = condition_diagnostic(sys, x, 8.64e5);
    CHECK(r.cond_att_inv_S == Approx(1.0).margin(1e-10));
    CHECK(r.cond_se_inv_S == Approx(1.0).margin(1e-10));
    CHECK(r.cond_diag_inv_S == Approx(1.0).margin(1e-10));
    CHECK(r.cond_S == Approx(r.cond_ATT).epsilon(1e-12));
    CHECK(r.cond_S >= 1.0);
}
