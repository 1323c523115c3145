#pragma once

// Incomplete LU factorization with zero fill-in, stored in place on the
// sparsity of A: unit lower triangle below the diagonal, U on and above it.

#include <stdexcept>
#include <string>
#include <vector>

#include "csr.hpp"

namespace thermoflow {

struct Ilu0Factor {
    CsrMatrix lu;
    std::vector<int> diag;   // position of the diagonal in each row
};

inline Ilu0Factor ilu0_factor(const CsrMatrix& A) {
    if (A.rows != A.cols) throw std::invalid_argument("ilu0: matrix must be square");
    Ilu0Factor F;
    F.lu = A;
    F.diag.assign(A.rows, -1);
    for (int i = 0; i < A.rows; ++i) {
        F.diag[i] = F.lu.find(i, i);
        if (F.diag[i] < 0)
            throw std::runtime_error("ilu0: missing diagonal at row " + std::to_string(i));
    }

    std::vector<int> pos(A.rows, -1);   // column -> value index scatter for row i
    for (int i = 0; i < A.rows; ++i) {
        for (int q = F.lu.row_ptr[i]; q < F.lu.row_ptr[i + 1]; ++q)
            pos[F.lu.col_idx[q]] = q;
        for (int q = F.lu.row_ptr[i]; q < F.lu.row_ptr[i + 1]; ++q) {
            const int k = F.lu.col_idx[q];
            if (k >= i) break;
            const double ukk = F.lu.values[F.diag[k]];
            if (ukk == 0.0)
                throw std::runtime_error("ilu0: zero pivot at row " + std::to_string(k));
            const double lik = F.lu.values[q] / ukk;   // A(i,k) <- A(i,k) / U(k,k)
            F.lu.values[q] = lik;
            for (int r = F.diag[k] + 1; r < F.lu.row_ptr[k + 1]; ++r) {
                const int j = F.lu.col_idx[r];
                const int pj = pos[j];
                if (pj >= 0) F.lu.values[pj] -= lik * F.lu.values[r];   // fill outside pattern dropped
            }
        }
        if (F.lu.values[F.diag[i]] == 0.0)
            throw std::runtime_error("ilu0: zero pivot at row " + std::to_string(i));
        for (int q = F.lu.row_ptr[i]; q < F.lu.row_ptr[i + 1]; ++q)
            pos[F.lu.col_idx[q]] = -1;
    }
    return F;
}

// x = U^{-1} L^{-1} b
inline void ilu0_solve(const Ilu0Factor& F, const std::vector<double>& b, std::vector<double>& x) {
    const int n = F.lu.rows;
    if (static_cast<int>(b.size()) != n) throw std::invalid_argument("ilu0_solve: size mismatch");
    x = b;
    for (int i = 0; i < n; ++i) {
        double s = x[i];
        for (int q = F.lu.row_ptr[i]; q < F.diag[i]; ++q)
            s -= F.lu.values[q] * x[F.lu.col_idx[q]];
        x[i] = s;
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = x[i];
        for (int q = F.diag[i] + 1; q < F.lu.row_ptr[i + 1]; ++q)
            s -= F.lu.values[q] * x[F.lu.col_idx[q]];
        x[i] = s / F.lu.values[F.diag[i]];
    }
}

} // namespace thermoflow
