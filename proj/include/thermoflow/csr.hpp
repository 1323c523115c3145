#pragma once

// Compressed sparse row matrices and the small kernel set the solvers need:
// spmv, transpose, sparse products/sums, and Matrix Market coordinate I/O.
// Column indices are strictly increasing within each row (no duplicates).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace thermoflow {

struct CsrMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<int> row_ptr;     // size rows+1
    std::vector<int> col_idx;
    std::vector<double> values;

    int nnz() const { return static_cast<int>(col_idx.size()); }

    // Position of (i,j) in the value array, or -1 if outside the pattern.
    int find(int i, int j) const {
        const int lo = row_ptr[i], hi = row_ptr[i + 1];
        const auto it = std::lower_bound(col_idx.begin() + lo, col_idx.begin() + hi, j);
        if (it != col_idx.begin() + hi && *it == j)
            return static_cast<int>(it - col_idx.begin());
        return -1;
    }

    double at(int i, int j) const {
        const int q = find(i, j);
        return q < 0 ? 0.0 : values[q];
    }
};

inline CsrMatrix csr_from_triplets(int rows, int cols,
                                   std::vector<std::tuple<int, int, double>> trip) {
    for (const auto& [i, j, v] : trip) {
        (void)v;
        if (i < 0 || i >= rows || j < 0 || j >= cols)
            throw std::invalid_argument("csr_from_triplets: entry out of bounds");
    }
    std::sort(trip.begin(), trip.end(), [](const auto& a, const auto& b) {
        return std::get<0>(a) != std::get<0>(b) ? std::get<0>(a) < std::get<0>(b)
                                                : std::get<1>(a) < std::get<1>(b);
    });
    CsrMatrix A;
    A.rows = rows;
    A.cols = cols;
    A.row_ptr.assign(rows + 1, 0);
    for (std::size_t q = 0; q < trip.size(); ++q) {
        if (q > 0 && std::get<0>(trip[q]) == std::get<0>(trip[q - 1]) &&
            std::get<1>(trip[q]) == std::get<1>(trip[q - 1])) {
            A.values.back() += std::get<2>(trip[q]);   // duplicates accumulate
        } else {
            A.col_idx.push_back(std::get<1>(trip[q]));
            A.values.push_back(std::get<2>(trip[q]));
            ++A.row_ptr[std::get<0>(trip[q]) + 1];
        }
    }
    for (int i = 0; i < rows; ++i) A.row_ptr[i + 1] += A.row_ptr[i];
    return A;
}

inline CsrMatrix csr_identity(int n) {
    CsrMatrix I;
    I.rows = I.cols = n;
    I.row_ptr.resize(n + 1);
    I.col_idx.resize(n);
    I.values.assign(n, 1.0);
    for (int i = 0; i <= n; ++i) I.row_ptr[i] = i;
    for (int i = 0; i < n; ++i) I.col_idx[i] = i;
    return I;
}

inline void spmv(const CsrMatrix& A, const std::vector<double>& x, std::vector<double>& y) {
    if (static_cast<int>(x.size()) != A.cols)
        throw std::invalid_argument("spmv: size mismatch");
    y.assign(A.rows, 0.0);
    for (int i = 0; i < A.rows; ++i) {
        double s = 0.0;
        for (int q = A.row_ptr[i]; q < A.row_ptr[i + 1]; ++q)
            s += A.values[q] * x[A.col_idx[q]];
        y[i] = s;
    }
}

inline std::vector<double> diagonal(const CsrMatrix& A) {
    std::vector<double> d(A.rows, 0.0);
    for (int i = 0; i < A.rows; ++i) {
        const int q = A.find(i, i);
        if (q >= 0) d[i] = A.values[q];
    }
    return d;
}

inline CsrMatrix transpose(const CsrMatrix& A) {
    CsrMatrix T;
    T.rows = A.cols;
    T.cols = A.rows;
    T.row_ptr.assign(A.cols + 1, 0);
    T.col_idx.resize(A.nnz());
    T.values.resize(A.nnz());
    for (int q = 0; q < A.nnz(); ++q) ++T.row_ptr[A.col_idx[q] + 1];
    for (int j = 0; j < A.cols; ++j) T.row_ptr[j + 1] += T.row_ptr[j];
    std::vector<int> fill(T.row_ptr.begin(), T.row_ptr.end() - 1);
    for (int i = 0; i < A.rows; ++i)
        for (int q = A.row_ptr[i]; q < A.row_ptr[i + 1]; ++q) {
            const int pos = fill[A.col_idx[q]]++;
            T.col_idx[pos] = i;           // ascending i per column keeps rows sorted
            T.values[pos] = A.values[q];
        }
    return T;
}

inline CsrMatrix matmul(const CsrMatrix& A, const CsrMatrix& B) {
    if (A.cols != B.rows) throw std::invalid_argument("matmul: inner dimensions differ");
    CsrMatrix C;
    C.rows = A.rows;
    C.cols = B.cols;
    C.row_ptr.assign(A.rows + 1, 0);
    std::vector<int> next(B.cols, -1);
    std::vector<double> sums(B.cols, 0.0);
    std::vector<int> cols_here;
    for (int i = 0; i < A.rows; ++i) {
        cols_here.clear();
        for (int qa = A.row_ptr[i]; qa < A.row_ptr[i + 1]; ++qa) {
            const int k = A.col_idx[qa];
            const double av = A.values[qa];
            for (int qb = B.row_ptr[k]; qb < B.row_ptr[k + 1]; ++qb) {
                const int j = B.col_idx[qb];
                if (next[j] < 0) {
                    next[j] = 1;
                    cols_here.push_back(j);
                    sums[j] = 0.0;
                }
                sums[j] += av * B.values[qb];
            }
        }
        std::sort(cols_here.begin(), cols_here.end());
        for (const int j : cols_here) {
            C.col_idx.push_back(j);
            C.values.push_back(sums[j]);
            next[j] = -1;
        }
        C.row_ptr[i + 1] = static_cast<int>(C.col_idx.size());
    }
    return C;
}

// alpha*A + beta*B on the union pattern.
inline CsrMatrix csr_add(double alpha, const CsrMatrix& A, double beta, const CsrMatrix& B) {
    if (A.rows != B.rows || A.cols != B.cols)
        throw std::invalid_argument("csr_add: shape mismatch");
    CsrMatrix C;
    C.rows = A.rows;
    C.cols = A.cols;
    C.row_ptr.assign(A.rows + 1, 0);
    for (int i = 0; i < A.rows; ++i) {
        int qa = A.row_ptr[i], qb = B.row_ptr[i];
        while (qa < A.row_ptr[i + 1] || qb < B.row_ptr[i + 1]) {
            const int ja = qa < A.row_ptr[i + 1] ? A.col_idx[qa] : A.cols;
            const int jb = qb < B.row_ptr[i + 1] ? B.col_idx[qb] : B.cols;
            if (ja == jb) {
                C.col_idx.push_back(ja);
                C.values.push_back(alpha * A.values[qa++] + beta * B.values[qb++]);
            } else if (ja < jb) {
                C.col_idx.push_back(ja);
                C.values.push_back(alpha * A.values[qa++]);
            } else {
                C.col_idx.push_back(jb);
                C.values.push_back(beta * B.values[qb++]);
            }
        }
        C.row_ptr[i + 1] = static_cast<int>(C.col_idx.size());
    }
    return C;
}

inline void mm_write(const std::string& path, const CsrMatrix& A) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("mm_write: cannot open " + path);
    out << "%%MatrixMarket matrix coordinate real general\n";
    out << A.rows << " " << A.cols << " " << A.nnz() << "\n";
    out << std::setprecision(17);
    for (int i = 0; i < A.rows; ++i)
        for (int q = A.row_ptr[i]; q < A.row_ptr[i + 1]; ++q)
            out << (i + 1) << " " << (A.col_idx[q] + 1) << " " << A.values[q] << "\n";
    if (!out) throw std::runtime_error("mm_write: write failed for " + path);
}

inline CsrMatrix mm_read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("mm_read: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("mm_read: empty file " + path);
    {
        std::istringstream hs(line);
        std::string banner, object, format, field, symmetry;
        hs >> banner >> object >> format >> field >> symmetry;
        if (banner != "%%MatrixMarket" || object != "matrix" || format != "coordinate" ||
            field != "real" || symmetry != "general")
            throw std::runtime_error("mm_read: unsupported header in " + path + ": " + line);
    }
    while (std::getline(in, line)) {
        if (!line.empty() && line[0] != '%') break;
    }
    int rows = 0, cols = 0;
    long long nnz = 0;
    {
        std::istringstream ss(line);
        if (!(ss >> rows >> cols >> nnz))
            throw std::runtime_error("mm_read: bad size line in " + path);
    }
    std::vector<std::tuple<int, int, double>> trip;
    trip.reserve(static_cast<std::size_t>(nnz));
    for (long long q = 0; q < nnz; ++q) {
        int i = 0, j = 0;
        double v = 0.0;
        if (!(in >> i >> j >> v))
            throw std::runtime_error("mm_read: truncated entries in " + path);
        trip.emplace_back(i - 1, j - 1, v);
    }
    return csr_from_triplets(rows, cols, std::move(trip));
}

inline double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (const double x : v) s += x * x;
    return std::sqrt(s);
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline void axpy(double alpha, const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

} // namespace thermoflow
