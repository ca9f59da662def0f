#ifndef HYPERTRAIN_TEST_UTIL_HPP
#define HYPERTRAIN_TEST_UTIL_HPP

// Independent oracle helpers for tests. These deliberately avoid the library's
// own linear algebra paths beyond the basic containers.

#include <cmath>
#include <random>
#include <vector>

#include "hypertrain/data.hpp"
#include "hypertrain/linalg.hpp"

namespace ht_test {

using hypertrain::Batch;
using hypertrain::DenseMatrix;
using hypertrain::DenseVector;

/// Plain Gaussian elimination with partial pivoting: solve A x = b.
inline DenseVector solve_dense(DenseMatrix a, DenseVector b) {
    const std::size_t n = a.rows;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(a(r, col)) > std::fabs(a(piv, col))) piv = r;
        if (piv != col) {
            for (std::size_t c = 0; c < n; ++c) std::swap(a(col, c), a(piv, c));
            std::swap(b[col], b[piv]);
        }
        const double d = a(col, col);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a(r, col) / d;
            if (f == 0.0) continue;
            for (std::size_t c = col; c < n; ++c) a(r, c) -= f * a(col, c);
            b[r] -= f * b[col];
        }
    }
    DenseVector x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double v = b[ii];
        for (std::size_t c = ii + 1; c < n; ++c) v -= a(ii, c) * x[c];
        x[ii] = v / a(ii, ii);
    }
    return x;
}

/// Ridge normal equations: (X^T X / n + exp(lambda) I)^{-1} X^T y / n.
inline DenseVector ridge_solution(const DenseMatrix& X, const DenseVector& y, double lambda_log) {
    const std::size_t n = X.rows, d = X.cols;
    DenseMatrix A(d, d);
    DenseVector b(d, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t i = 0; i < d; ++i) {
            b[i] += X(r, i) * y[r] / double(n);
            for (std::size_t j = 0; j < d; ++j) A(i, j) += X(r, i) * X(r, j) / double(n);
        }
    const double a = std::exp(lambda_log);
    for (std::size_t i = 0; i < d; ++i) A(i, i) += a;
    return solve_dense(std::move(A), std::move(b));
}

inline double mse_on(const DenseMatrix& X, const DenseVector& y, const DenseVector& w) {
    double acc = 0.0;
    for (std::size_t r = 0; r < X.rows; ++r) {
        double p = 0.0;
        for (std::size_t j = 0; j < X.cols; ++j) p += X(r, j) * w[j];
        acc += (p - y[r]) * (p - y[r]);
    }
    return acc / double(X.rows);
}

/// Golden-section search for the minimizer of a unimodal f over [lo, hi].
template <class F>
double golden_section(F&& f, double lo, double hi, double tol = 1e-7) {
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - gr * (b - a), d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    return (a + b) / 2.0;
}

inline Batch class_batch(std::initializer_list<std::initializer_list<double>> rows, std::initializer_list<int> labels) {
    Batch b;
    const std::size_t n = rows.size();
    const std::size_t d = rows.begin()->size();
    b.features = DenseMatrix(n, d);
    std::size_t i = 0;
    for (const auto& row : rows) {
        std::size_t j = 0;
        for (double v : row) b.features(i, j++) = v;
        ++i;
    }
    b.class_labels.assign(labels);
    return b;
}

inline Batch reg_batch(std::initializer_list<std::initializer_list<double>> rows, std::initializer_list<double> targets) {
    Batch b;
    const std::size_t n = rows.size();
    const std::size_t d = rows.begin()->size();
    b.features = DenseMatrix(n, d);
    std::size_t i = 0;
    for (const auto& row : rows) {
        std::size_t j = 0;
        for (double v : row) b.features(i, j++) = v;
        ++i;
    }
    b.reg_targets.assign(targets);
    return b;
}

/// Central finite differences of a vector-valued function, column j =
/// d f / d x_j.
template <class F>
DenseMatrix fd_jacobian(F&& f, const DenseVector& x, double eps) {
    DenseVector x0 = x;
    const DenseVector f0 = f(x0);
    DenseMatrix J(f0.size(), x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        x0[j] = x[j] + eps;
        const DenseVector fp = f(x0);
        x0[j] = x[j] - eps;
        const DenseVector fm = f(x0);
        x0[j] = x[j];
        for (std::size_t i = 0; i < f0.size(); ++i) J(i, j) = (fp[i] - fm[i]) / (2.0 * eps);
    }
    return J;
}

} // namespace ht_test

#endif
