#pragma once

// Dense condition-number diagnostic for the temperature Schur complement.
// Forms S = ATT - ATp App^{-1} ApT at the first Newton iterate of a step
// and reports cond_2 of S, ATT, and of S_tilde^{-1} S for each Schur
// approximation. Dense linear algebra limits this to small grids.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <limits>
#include <stdexcept>

#include "discretization.hpp"
#include "precond.hpp"

namespace thermoflow {

inline Eigen::MatrixXd dense_from_csr(const CsrMatrix& A) {
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(A.rows, A.cols);
    for (int i = 0; i < A.rows; ++i)
        for (int q = A.row_ptr[i]; q < A.row_ptr[i + 1]; ++q)
            D(i, A.col_idx[q]) = A.values[q];
    return D;
}

// Ratio of extreme singular values; infinity when the matrix is singular
// to working precision.
inline double cond2(const Eigen::MatrixXd& M) {
    const Eigen::BDCSVD<Eigen::MatrixXd> svd(M);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0) return std::numeric_limits<double>::infinity();
    const double smin = sv(sv.size() - 1);
    if (smin <= 0.0) return std::numeric_limits<double>::infinity();
    return sv(0) / smin;
}

struct ConditionReport {
    double cond_S = 0.0;            // exact Schur complement
    double cond_ATT = 0.0;
    double cond_se_inv_S = 0.0;     // advection-aware approximation
    double cond_att_inv_S = 0.0;    // temperature block alone
    double cond_diag_inv_S = 0.0;   // diagonal pressure elimination
};

// Core computation on an assembled system; Se is the advection-aware
// Schur approximation matching J.
inline ConditionReport condition_numbers(const BlockJacobian& J, const CsrMatrix& Se) {
    const Eigen::MatrixXd App = dense_from_csr(J.App);
    const Eigen::MatrixXd ApT = dense_from_csr(J.ApT);
    const Eigen::MatrixXd ATp = dense_from_csr(J.ATp);
    const Eigen::MatrixXd ATT = dense_from_csr(J.ATT);

    const Eigen::FullPivLU<Eigen::MatrixXd> app_lu(App);
    if (!app_lu.isInvertible())
        throw std::runtime_error("condition diagnostic: singular pressure block");
    const Eigen::MatrixXd S = ATT - ATp * app_lu.solve(ApT);

    const auto preconditioned = [&S](const Eigen::MatrixXd& St) {
        const Eigen::FullPivLU<Eigen::MatrixXd> lu(St);
        if (!lu.isInvertible()) return std::numeric_limits<double>::infinity();
        return cond2(lu.solve(S));
    };

    ConditionReport r;
    r.cond_S = cond2(S);
    r.cond_ATT = cond2(ATT);
    r.cond_se_inv_S = preconditioned(dense_from_csr(Se));
    r.cond_att_inv_S = preconditioned(ATT);
    r.cond_diag_inv_S = preconditioned(dense_from_csr(schur_diag_matrix(J)));
    return r;
}

// One exact Newton update from the given state (full step, dense solve, so
// the diagnostic is independent of any iterative-solver settings), then the
// condition numbers of the reassembled system.
inline ConditionReport condition_diagnostic(const DiscreteSystem& sys, const State& x0,
                                            double dt, int max_cells = 2500) {
    const int n = sys.num_cells();
    if (n > max_cells)
        throw std::invalid_argument("condition diagnostic: " + std::to_string(n) +
                                    " cells exceeds the dense limit of " +
                                    std::to_string(max_cells));

    const BlockJacobian J0 = sys.jacobian(x0, x0, dt);
    Eigen::MatrixXd A(2 * n, 2 * n);
    A.topLeftCorner(n, n) = dense_from_csr(J0.App);
    A.topRightCorner(n, n) = dense_from_csr(J0.ApT);
    A.bottomLeftCorner(n, n) = dense_from_csr(J0.ATp);
    A.bottomRightCorner(n, n) = dense_from_csr(J0.ATT);
    Eigen::VectorXd b(2 * n);
    for (int i = 0; i < n; ++i) {
        b(i) = J0.b_p[i];
        b(n + i) = J0.b_T[i];
    }
    // Mass and energy rows live on wildly different scales, which would defeat
    // the pivot-based singularity test; row equilibration leaves the solution
    // unchanged and keeps exactly dependent rows exactly dependent.
    for (int i = 0; i < 2 * n; ++i) {
        const double r = A.row(i).cwiseAbs().maxCoeff();
        if (r == 0.0)
            throw std::runtime_error(
                "condition diagnostic: singular Jacobian at the initial state");
        A.row(i) /= r;
        b(i) /= r;
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible())
        throw std::runtime_error("condition diagnostic: singular Jacobian at the initial state");
    const Eigen::VectorXd delta = lu.solve(b);

    State x1 = x0;
    for (int i = 0; i < n; ++i) {
        x1.p[i] += delta(i);
        x1.T[i] += delta(n + i);
    }

    const BlockJacobian J1 = sys.jacobian(x1, x0, dt);
    const CsrMatrix Se = sys.schur_approx(x1, dt);
    return condition_numbers(J1, Se);
}

} // namespace thermoflow
