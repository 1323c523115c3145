#pragma once

// Restarted GMRES with right preconditioning. Arnoldi uses one pass of
// modified Gram-Schmidt; the least-squares problem is maintained by Givens
// rotations, whose trailing entry tracks the true (unpreconditioned) residual
// norm exactly because the preconditioner is applied on the right. An explicit
// residual is still computed before declaring convergence.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "csr.hpp"

namespace thermoflow {

using LinearOp = std::function<void(const std::vector<double>&, std::vector<double>&)>;

inline LinearOp identity_op() {
    return [](const std::vector<double>& x, std::vector<double>& y) { y = x; };
}

inline LinearOp csr_op(const CsrMatrix& A) {
    return [&A](const std::vector<double>& x, std::vector<double>& y) { spmv(A, x, y); };
}

struct GmresOptions {
    double rtol = 1e-8;
    int restart = 30;
    int max_iters = 200;
};

struct GmresResult {
    int iterations = 0;
    bool converged = false;
    double relres = 0.0;
    std::vector<double> cycle_estimates;   // per-iteration residual estimates
};

// Solves A x = b with x overwritten (initial guess taken from x).
inline GmresResult gmres(const LinearOp& A, const LinearOp& M_inv,
                         const std::vector<double>& b, std::vector<double>& x,
                         const GmresOptions& opt) {
    const int n = static_cast<int>(b.size());
    if (static_cast<int>(x.size()) != n) throw std::invalid_argument("gmres: size mismatch");
    if (opt.restart < 1 || opt.max_iters < 1 || !(opt.rtol > 0.0))
        throw std::invalid_argument("gmres: invalid options");

    GmresResult res;
    const double bnorm = norm2(b);
    if (bnorm == 0.0) {
        x.assign(n, 0.0);
        res.converged = true;
        return res;
    }

    const int m = opt.restart;
    std::vector<std::vector<double>> V(m + 1), Z(m);
    std::vector<double> H((m + 1) * m, 0.0);   // column-major: H[i + j*(m+1)]
    std::vector<double> cs(m), sn(m), g(m + 1);
    std::vector<double> r(n), w(n);

    const auto explicit_relres = [&]() {
        A(x, r);
        for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];
        return norm2(r) / bnorm;
    };

    while (true) {
        A(x, r);
        for (int i = 0; i < n; ++i) r[i] = b[i] - r[i];
        const double beta = norm2(r);
        if (beta / bnorm <= opt.rtol) {
            res.converged = true;
            res.relres = beta / bnorm;
            return res;
        }
        if (res.iterations >= opt.max_iters) {
            res.relres = beta / bnorm;
            return res;
        }

        V[0] = r;
        for (double& v : V[0]) v /= beta;
        std::fill(g.begin(), g.end(), 0.0);
        g[0] = beta;
        std::fill(H.begin(), H.end(), 0.0);

        int k = 0;
        bool breakdown = false;
        for (int j = 0; j < m && res.iterations < opt.max_iters; ++j) {
            Z[j].assign(n, 0.0);
            M_inv(V[j], Z[j]);
            A(Z[j], w);
            for (int i = 0; i <= j; ++i) {
                const double hij = dot(w, V[i]);
                H[i + j * (m + 1)] = hij;
                axpy(-hij, V[i], w);
            }
            const double hj1 = norm2(w);
            H[j + 1 + j * (m + 1)] = hj1;

            // apply accumulated rotations to the new column, then form a new one
            for (int i = 0; i < j; ++i) {
                const double t = cs[i] * H[i + j * (m + 1)] + sn[i] * H[i + 1 + j * (m + 1)];
                H[i + 1 + j * (m + 1)] =
                    -sn[i] * H[i + j * (m + 1)] + cs[i] * H[i + 1 + j * (m + 1)];
                H[i + j * (m + 1)] = t;
            }
            const double denom = std::hypot(H[j + j * (m + 1)], hj1);
            cs[j] = denom == 0.0 ? 1.0 : H[j + j * (m + 1)] / denom;
            sn[j] = denom == 0.0 ? 0.0 : hj1 / denom;
            H[j + j * (m + 1)] = denom;
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j] * g[j];

            ++res.iterations;
            ++k;
            const double est = std::fabs(g[j + 1]);
            res.cycle_estimates.push_back(est);

            if (hj1 <= 1e-300) {   // invariant subspace: lucky breakdown
                breakdown = true;
                break;
            }
            V[j + 1] = w;
            for (double& v : V[j + 1]) v /= hj1;
            if (est / bnorm <= opt.rtol) break;
        }

        // back-substitute y and update x from the preconditioned basis
        std::vector<double> y(k, 0.0);
        for (int i = k - 1; i >= 0; --i) {
            double s = g[i];
            for (int j = i + 1; j < k; ++j) s -= H[i + j * (m + 1)] * y[j];
            y[i] = s / H[i + i * (m + 1)];
        }
        for (int j = 0; j < k; ++j) axpy(y[j], Z[j], x);

        const double rr = explicit_relres();
        if (rr <= opt.rtol || breakdown) {
            res.converged = rr <= opt.rtol;
            res.relres = rr;
            return res;
        }
        if (res.iterations >= opt.max_iters) {
            res.relres = rr;
            return res;
        }
    }
}

} // namespace thermoflow
