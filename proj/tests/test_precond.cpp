#include <catch_amalgamated.hpp>

#include <thermoflow/discretization.hpp>
#include <thermoflow/precond.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

using namespace thermoflow;
using Catch::Approx;

namespace {

Eigen::MatrixXd dense_of(const CsrMatrix& A) {
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(A.rows, A.cols);
    for (int i = 0; i < A.rows; ++i)
        for (int q = A.row_ptr[i]; q < A.row_ptr[i + 1]; ++q)
            D(i, A.col_idx[q]) = A.values[q];
    return D;
}

Eigen::MatrixXd dense_stacked(const BlockJacobian& J) {
    const int n = J.App.rows;
    Eigen::MatrixXd A(2 * n, 2 * n);
    A.topLeftCorner(n, n) = dense_of(J.App);
    A.topRightCorner(n, n) = dense_of(J.ApT);
    A.bottomLeftCorner(n, n) = dense_of(J.ATp);
    A.bottomRightCorner(n, n) = dense_of(J.ATT);
    return A;
}

BlockJacobian scalar_system(double app, double apt, double atp, double att) {
    BlockJacobian J;
    J.App = csr_from_triplets(1, 1, {{0, 0, app}});
    J.ApT = csr_from_triplets(1, 1, {{0, 0, apt}});
    J.ATp = csr_from_triplets(1, 1, {{0, 0, atp}});
    J.ATT = csr_from_triplets(1, 1, {{0, 0, att}});
    J.b_p = {0.0};
    J.b_T = {0.0};
    return J;
}

// well-scaled coupled test system: tridiagonal diagonally dominant blocks
BlockJacobian coupled_system(int n, unsigned seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.2, 1.0);
    const auto tridiag = [&](double diag_base, double off_scale) {
        std::vector<std::tuple<int, int, double>> t;
        for (int i = 0; i < n; ++i) {
            t.emplace_back(i, i, diag_base + u(gen));
            if (i > 0) t.emplace_back(i, i - 1, -off_scale * u(gen));
            if (i + 1 < n) t.emplace_back(i, i + 1, -off_scale * u(gen));
        }
        return csr_from_triplets(n, n, t);
    };
    BlockJacobian J;
    J.App = tridiag(4.0, 1.0);
    J.ApT = tridiag(0.4, 0.3);
    J.ATp = tridiag(0.4, 0.3);
    J.ATT = tridiag(5.0, 1.0);
    J.b_p.assign(n, 1.0);
    J.b_T.assign(n, -1.0);
    return J;
}

// small heated reservoir: realistic pattern and scaling
BlockJacobian reservoir_jacobian(int nx, int ny) {
    const Grid g = build_grid({nx, ny}, {double(nx), double(ny)});
    FluidModel fl;
    const RockModel rk = RockModel::uniform(nx * ny, 0.25, 3e-13, 1e-13, 1e-13);
    SourceTerm heat;
    heat.kind = SourceKind::heater;
    heat.cell = nx / 2 + nx * (ny / 2);
    heat.U = 50.0;
    heat.T_heater = 450.0;
    SourceTerm inj;
    inj.kind = SourceKind::injector;
    inj.cell = 0;
    inj.q = 1.0e-8;
    inj.T_inj = 390.0;
    const DiscreteSystem sys(g, fl, rk, {heat, inj}, 9.81);
    State xn, xo;
    for (int i = 0; i < nx * ny; ++i) {
        xn.p.push_back(4.0e6 + 1.0e5 * std::sin(1.0 * i + 0.2));
        xn.T.push_back(320.0 + 5.0 * std::cos(1.3 * i));
        xo.p.push_back(xn.p[i] - 5.0e4);
        xo.T.push_back(xn.T[i] - 3.0);
    }
    return sys.jacobian(xn, xo, 1.0e4);
}

std::vector<double> ramp(int n, double a, double b) {
    std::vector<double> r(n);
    for (int i = 0; i < n; ++i) r[i] = a + b * i;
    return r;
}

double max_abs_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("block factorization on a scalar two-field system") {
    // App=2, ApT=1, ATp=1, ATT=3; exact Schur 3 - 1*(1/2)*1 = 2.5
    const BlockJacobian J = scalar_system(2.0, 1.0, 1.0, 3.0);
    PrecondInstance P;
    P.config.kind = PrecondKind::block;
    P.jac = &J;
    P.n = 1;
    P.solve_pressure = [](const std::vector<double>& b, std::vector<double>& x) {
        x = {b[0] / 2.0};
    };
    P.solve_schur = [](const std::vector<double>& b, std::vector<double>& x) {
        x = {b[0] / 2.5};
    };
    std::vector<double> z;
    apply_block(P, {1.0, 1.0}, z);
    REQUIRE(z.size() == 2);
    CHECK(z[0] == Approx(0.4).epsilon(1e-15));
    CHECK(z[1] == Approx(0.2).epsilon(1e-15));
    // with the exact Schur complement this IS the inverse: A [0.4 0.2] = [1 1]
    CHECK(2.0 * z[0] + 1.0 * z[1] == Approx(1.0).epsilon(1e-15));
    CHECK(1.0 * z[0] + 3.0 * z[1] == Approx(1.0).epsilon(1e-15));
}

TEST_CASE("block factorization with exact inner solves inverts the system") {
    const int n = 9;
    const BlockJacobian J = coupled_system(n, 11);
    const Eigen::MatrixXd App = dense_of(J.App);
    const Eigen::MatrixXd S =
        dense_of(J.ATT) - dense_of(J.ATp) * App.fullPivLu().solve(dense_of(J.ApT));

    PrecondInstance P;
    P.config.kind = PrecondKind::block;
    P.jac = &J;
    P.n = n;
    const Eigen::FullPivLU<Eigen::MatrixXd> lu_p(App), lu_s(S);
    const auto solver = [n](const Eigen::FullPivLU<Eigen::MatrixXd>& lu) {
        return [&lu, n](const std::vector<double>& b, std::vector<double>& x) {
            Eigen::Map<const Eigen::VectorXd> bv(b.data(), n);
            const Eigen::VectorXd xv = lu.solve(bv);
            x.assign(xv.data(), xv.data() + n);
        };
    };
    P.solve_pressure = solver(lu_p);
    P.solve_schur = solver(lu_s);

    std::vector<double> r = ramp(2 * n, 1.0, 0.37), z;
    apply_block(P, r, z);

    Eigen::Map<const Eigen::VectorXd> rv(r.data(), 2 * n);
    const Eigen::VectorXd ze = dense_stacked(J).fullPivLu().solve(rv);
    for (int i = 0; i < 2 * n; ++i)
        CHECK(z[i] == Approx(ze(i)).epsilon(1e-10).margin(1e-12));
}

TEST_CASE("cpr on trivial systems") {
    SECTION("identity operator passes the residual through") {
        BlockJacobian J;
        J.App = csr_identity(3);
        J.ATT = csr_identity(3);
        J.ApT = csr_from_triplets(3, 3, {});
        J.ATp = csr_from_triplets(3, 3, {});
        PreconditionerConfig cfg;
        cfg.kind = PrecondKind::cpr;
        const PrecondInstance P = build_preconditioner(J, cfg);
        std::vector<double> r = ramp(6, -1.0, 0.9), z;
        apply_cpr(P, r, z);
        for (int i = 0; i < 6; ++i) CHECK(z[i] == Approx(r[i]).margin(1e-14));
    }
    SECTION("decoupled scalar system is solved exactly") {
        const BlockJacobian J = scalar_system(2.0, 0.0, 0.0, 4.0);
        PreconditionerConfig cfg;
        cfg.kind = PrecondKind::cpr;
        const PrecondInstance P = build_preconditioner(J, cfg);
        std::vector<double> z;
        apply_cpr(P, {1.0, 1.0}, z);
        CHECK(z[0] == Approx(0.5).epsilon(1e-15));
        CHECK(z[1] == Approx(0.25).epsilon(1e-15));
    }
    SECTION("zero pressure residual skips straight to stage two") {
        BlockJacobian J;
        J.App = csr_from_triplets(2, 2, {{0, 0, 3.0}, {1, 1, 5.0}});
        J.ApT = csr_from_triplets(2, 2, {{0, 0, 1.0}, {1, 1, 2.0}});
        J.ATp = csr_from_triplets(2, 2, {});   // no pressure feedback
        J.ATT = csr_from_triplets(2, 2, {{0, 0, 4.0}, {1, 1, 6.0}});
        PreconditionerConfig cfg;
        cfg.kind = PrecondKind::cpr;
        const PrecondInstance P = build_preconditioner(J, cfg);
        const std::vector<double> r{0.0, 0.0, 2.0, 3.0};
        std::vector<double> z, z2;
        apply_cpr(P, r, z);
        P.solve_full(r, z2);
        for (int i = 0; i < 4; ++i) CHECK(z[i] == Approx(z2[i]).margin(1e-15));
    }
}

TEST_CASE("cpr with an exact second stage inverts the system regardless of stage one") {
    const int n = 4;
    const BlockJacobian J = coupled_system(n, 23);
    const Eigen::MatrixXd A = dense_stacked(J);
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    const std::vector<double> r = ramp(2 * n, 0.3, -0.21);
    Eigen::Map<const Eigen::VectorXd> rv(r.data(), 2 * n);
    const Eigen::VectorXd ze = lu.solve(rv);

    const auto run = [&](DecouplingKind dk) {
        PreconditionerConfig cfg;
        cfg.kind = PrecondKind::cpr;
        cfg.decoupling = dk;
        PrecondInstance P = build_preconditioner(J, cfg);
        // deliberately crude stage one: single Jacobi sweep on the pressure block
        const std::vector<double> dp = diagonal(J.App);
        P.solve_pressure = [dp, n](const std::vector<double>& b, std::vector<double>& x) {
            x.resize(n);
            for (int i = 0; i < n; ++i) x[i] = b[i] / dp[i];
        };
        P.solve_full = [&lu, n](const std::vector<double>& b, std::vector<double>& x) {
            Eigen::Map<const Eigen::VectorXd> bv(b.data(), 2 * n);
            const Eigen::VectorXd xv = lu.solve(bv);
            x.assign(xv.data(), xv.data() + 2 * n);
        };
        std::vector<double> z;
        apply_cpr(P, r, z);
        for (int i = 0; i < 2 * n; ++i)
            CHECK(z[i] == Approx(ze(i)).epsilon(1e-10).margin(1e-12));
    };
    run(DecouplingKind::none);
    run(DecouplingKind::quasi_impes);
    run(DecouplingKind::true_impes);
}

TEST_CASE("decoupling row operations") {
    BlockJacobian J;
    J.App = csr_from_triplets(2, 2, {{0, 0, 4.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 5.0}});
    J.ApT = csr_from_triplets(2, 2, {{0, 0, 3.0}, {0, 1, 1.0}, {1, 0, 2.0}, {1, 1, 6.0}});
    J.ATp = csr_from_triplets(2, 2, {{0, 0, 1.0}, {0, 1, 2.0}, {1, 1, 1.0}});
    J.ATT = csr_from_triplets(2, 2, {{0, 0, 2.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 3.0}});
    J.b_p = {1.0, 2.0};
    J.b_T = {3.0, 4.0};

    SECTION("none leaves multipliers at zero") {
        const std::vector<double> d = decoupling_vector(J, DecouplingKind::none);
        CHECK(d == std::vector<double>{0.0, 0.0});
    }
    SECTION("diagonal-ratio multipliers annihilate the coupling diagonal") {
        const std::vector<double> d = decoupling_vector(J, DecouplingKind::quasi_impes);
        CHECK(d[0] == Approx(1.5));   // 3/2
        CHECK(d[1] == Approx(2.0));   // 6/3
        const BlockJacobian T = apply_decoupling(J, d);
        const Eigen::MatrixXd ApT = dense_of(T.ApT);
        CHECK(ApT(0, 0) == 0.0);
        CHECK(ApT(1, 1) == 0.0);
        CHECK(ApT(0, 1) == Approx(1.0 - 1.5 * 1.0));
        CHECK(ApT(1, 0) == Approx(2.0 - 2.0 * 1.0));
        const Eigen::MatrixXd App = dense_of(T.App);
        CHECK(App(0, 0) == Approx(4.0 - 1.5 * 1.0));
        CHECK(App(0, 1) == Approx(1.0 - 1.5 * 2.0));
        CHECK(App(1, 0) == Approx(1.0 - 2.0 * 0.0));
        CHECK(App(1, 1) == Approx(5.0 - 2.0 * 1.0));
        CHECK(T.b_p[0] == Approx(1.0 - 1.5 * 3.0));
        CHECK(T.b_p[1] == Approx(2.0 - 2.0 * 4.0));
        // temperature row untouched
        CHECK(T.ATT.values == J.ATT.values);
        CHECK(T.b_T == J.b_T);
    }
    SECTION("column-sum multipliers") {
        BlockJacobian C;
        C.App = csr_identity(2);
        C.ApT = csr_from_triplets(2, 2, {{0, 0, 1.0}, {0, 1, 2.0}, {1, 0, 3.0}, {1, 1, 4.0}});
        C.ATp = csr_identity(2);
        C.ATT = csr_identity(2);
        const std::vector<double> d = decoupling_vector(C, DecouplingKind::true_impes);
        CHECK(d[0] == Approx(4.0));   // column sums (1+3, 2+4) over (1, 1)
        CHECK(d[1] == Approx(6.0));
    }
    SECTION("vanished coupling leaves the system unchanged") {
        BlockJacobian C;
        C.App = csr_from_triplets(2, 2, {{0, 0, 4.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 5.0}});
        C.ApT = csr_from_triplets(2, 2, {{0, 0, 0.0}, {1, 1, 0.0}});
        C.ATp = csr_identity(2);
        C.ATT = csr_from_triplets(2, 2, {{0, 0, 2.0}, {1, 1, 3.0}});
        C.b_p = {1.0, 2.0};
        C.b_T = {3.0, 4.0};
        const std::vector<double> d = decoupling_vector(C, DecouplingKind::quasi_impes);
        CHECK(d == std::vector<double>{0.0, 0.0});
        const BlockJacobian T = apply_decoupling(C, d);
        CHECK(max_abs_diff(dense_of(T.App), dense_of(C.App)) == 0.0);
        CHECK(T.b_p == C.b_p);
    }
    SECTION("degenerate temperature blocks are rejected") {
        BlockJacobian C;
        C.App = csr_identity(2);
        C.ApT = csr_identity(2);
        C.ATp = csr_identity(2);
        C.ATT = csr_from_triplets(2, 2, {{0, 0, 0.0}, {1, 1, 1.0}});
        CHECK_THROWS_AS(decoupling_vector(C, DecouplingKind::quasi_impes), std::runtime_error);
        // columns of [[1,-1],[-1,1]] sum to zero
        C.ATT = csr_from_triplets(2, 2, {{0, 0, 1.0}, {0, 1, -1.0}, {1, 0, -1.0}, {1, 1, 1.0}});
        CHECK_THROWS_AS(decoupling_vector(C, DecouplingKind::true_impes), std::runtime_error);
    }
}

TEST_CASE("preconditioner applications are linear and leave the jacobian intact") {
    const BlockJacobian J = reservoir_jacobian(3, 3);
    const std::vector<double> app_before = J.App.values;
    const std::vector<double> att_before = J.ATT.values;

    const auto check_linear = [&](const PrecondInstance& P) {
        const LinearOp M = precond_op(P);
        const int m = 18;
        std::vector<double> r1 = ramp(m, 0.7, 0.11), r2 = ramp(m, -0.4, 0.23), rc(m);
        const double al = 1.3, be = -0.6;
        for (int i = 0; i < m; ++i) rc[i] = al * r1[i] + be * r2[i];
        std::vector<double> z1, z2, zc;
        M(r1, z1);
        M(r2, z2);
        M(rc, zc);
        double scale = 0.0;
        for (int i = 0; i < m; ++i) scale = std::max(scale, std::abs(zc[i]));
        for (int i = 0; i < m; ++i)
            CHECK(zc[i] == Approx(al * z1[i] + be * z2[i]).margin(1e-12 * scale));
    };

    PreconditionerConfig cfg;
    cfg.kind = PrecondKind::block;
    cfg.schur = SchurKind::s_att;
    check_linear(build_preconditioner(J, cfg));

    cfg.kind = PrecondKind::cpr;
    cfg.decoupling = DecouplingKind::quasi_impes;
    check_linear(build_preconditioner(J, cfg));

    CHECK(J.App.values == app_before);
    CHECK(J.ATT.values == att_before);
}

TEST_CASE("preconditioner configuration is validated") {
    const BlockJacobian J = coupled_system(4, 31);
    PreconditionerConfig cfg;
    SECTION("decoupling is a cpr-only feature") {
        cfg.kind = PrecondKind::block;
        cfg.schur = SchurKind::s_att;
        cfg.decoupling = DecouplingKind::quasi_impes;
        CHECK_THROWS_AS(build_preconditioner(J, cfg), std::invalid_argument);
    }
    SECTION("the derived schur approximation must be supplied") {
        cfg.kind = PrecondKind::block;
        cfg.schur = SchurKind::s_tilde_T;
        CHECK_THROWS_AS(build_preconditioner(J, cfg), std::invalid_argument);
    }
    SECTION("supplied schur matrix is adopted") {
        cfg.kind = PrecondKind::block;
        cfg.schur = SchurKind::s_tilde_T;
        const CsrMatrix Se = J.ATT;   // stand-in with the right pattern
        const PrecondInstance P = build_preconditioner(J, cfg, &Se);
        CHECK(P.schur.values == Se.values);
    }
    SECTION("name parsing round trips") {
        CHECK(parse_precond_kind("block") == PrecondKind::block);
        CHECK(parse_precond_kind("cpr") == PrecondKind::cpr);
        CHECK_THROWS_AS(parse_precond_kind("ilu"), std::invalid_argument);
        CHECK(parse_schur_kind("s_tilde_T") == SchurKind::s_tilde_T);
        CHECK(parse_schur_kind("s_att") == SchurKind::s_att);
        CHECK(parse_schur_kind("s_diag") == SchurKind::s_diag);
        CHECK_THROWS_AS(parse_schur_kind("exact"), std::invalid_argument);
        CHECK(parse_decoupling_kind("none") == DecouplingKind::none);
        CHECK(parse_decoupling_kind("quasi_impes") == DecouplingKind::quasi_impes);
        CHECK(parse_decoupling_kind("true_impes") == DecouplingKind::true_impes);
        CHECK_THROWS_AS(parse_decoupling_kind("impes"), std::invalid_argument);
        CHECK(std::string(to_string(PrecondKind::cpr)) == "cpr");
        CHECK(std::string(to_string(SchurKind::s_diag)) == "s_diag");
        CHECK(std::string(to_string(DecouplingKind::true_impes)) == "true_impes");
    }
}

TEST_CASE("stacked and interleaved layouts") {
    SECTION("interleave round trip") {
        const std::vector<double> s{1.0, 2.0, 3.0, 10.0, 20.0, 30.0};
        std::vector<double> inter, back;
        interleave(s, inter);
        CHECK(inter == std::vector<double>{1.0, 10.0, 2.0, 20.0, 3.0, 30.0});
        deinterleave(inter, back);
        CHECK(back == s);
    }
    SECTION("interleaved matrix places each block entry") {
        const BlockJacobian J = reservoir_jacobian(2, 2);
        const Eigen::MatrixXd M = dense_of(build_interleaved(J));
        const Eigen::MatrixXd App = dense_of(J.App), ApT = dense_of(J.ApT);
        const Eigen::MatrixXd ATp = dense_of(J.ATp), ATT = dense_of(J.ATT);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                CHECK(M(2 * i, 2 * j) == App(i, j));
                CHECK(M(2 * i, 2 * j + 1) == ApT(i, j));
                CHECK(M(2 * i + 1, 2 * j) == ATp(i, j));
                CHECK(M(2 * i + 1, 2 * j + 1) == ATT(i, j));
            }
    }
    SECTION("stacked operator multiplies like the dense block matrix") {
        const BlockJacobian J = reservoir_jacobian(2, 2);
        const LinearOp A = stacked_op(J);
        const std::vector<double> x = ramp(8, 0.5, 0.31);
        std::vector<double> y;
        A(x, y);
        Eigen::Map<const Eigen::VectorXd> xv(x.data(), 8);
        const Eigen::VectorXd ye = dense_stacked(J) * xv;
        for (int i = 0; i < 8; ++i)
            CHECK(y[i] == Approx(ye(i)).epsilon(1e-12).margin(1e-300));

        std::vector<double> bad(7, 0.0), out;
        CHECK_THROWS_AS(A(bad, out), std::invalid_argument);

        const std::vector<double> b = stacked_rhs(J);
        REQUIRE(b.size() == 8);
        for (int i = 0; i < 4; ++i) {
            CHECK(b[i] == J.b_p[i]);
            CHECK(b[4 + i] == J.b_T[i]);
        }
    }
}

TEST_CASE("diagonal-elimination schur matrix") {
    SECTION("exact when the pressure block is diagonal") {
        BlockJacobian J;
        J.App = csr_from_triplets(2, 2, {{0, 0, 2.0}, {1, 1, 4.0}});
        J.ApT = csr_from_triplets(2, 2, {{0, 0, 1.0}, {0, 1, 2.0}, {1, 0, 3.0}, {1, 1, 4.0}});
        J.ATp = csr_from_triplets(2, 2, {{0, 0, 5.0}, {0, 1, 6.0}, {1, 0, 7.0}, {1, 1, 8.0}});
        J.ATT = csr_from_triplets(2, 2, {{0, 0, 9.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 9.0}});
        const Eigen::MatrixXd S = dense_of(schur_diag_matrix(J));
        const Eigen::MatrixXd expect =
            dense_of(J.ATT) -
            dense_of(J.ATp) * dense_of(J.App).inverse() * dense_of(J.ApT);
        CHECK(max_abs_diff(S, expect) < 1e-13);
    }
    SECTION("zero pressure diagonal is rejected") {
        BlockJacobian J;
        J.App = csr_from_triplets(2, 2, {{0, 0, 0.0}, {1, 1, 4.0}});
        J.ApT = csr_identity(2);
        J.ATp = csr_identity(2);
        J.ATT = csr_identity(2);
        CHECK_THROWS_AS(schur_diag_matrix(J), std::runtime_error);
    }
}
