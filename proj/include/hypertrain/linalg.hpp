#ifndef HYPERTRAIN_LINALG_HPP
#define HYPERTRAIN_LINALG_HPP

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hypertrain/errors.hpp"

namespace hypertrain {

/// Flat 64-bit float vector; the generic carrier for weights, hyperparameters
/// and gradients.
using DenseVector = std::vector<double>;

/// Row-major dense matrix of 64-bit floats.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    const double* row(std::size_t i) const { return data.data() + i * cols; }
    double* row(std::size_t i) { return data.data() + i * cols; }

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }
};

inline bool all_finite(const DenseVector& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline bool all_finite(const DenseMatrix& m) {
    for (double x : m.data)
        if (!std::isfinite(x)) return false;
    return true;
}

/// Standard matrix-vector product. Throws ShapeError on dimension mismatch.
inline DenseVector matvec(const DenseMatrix& m, const DenseVector& v) {
    if (m.cols != v.size())
        throw ShapeError("matvec: matrix has " + std::to_string(m.cols) + " cols but vector has " +
                         std::to_string(v.size()) + " entries");
    DenseVector out(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* r = m.row(i);
        double acc = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) acc += r[j] * v[j];
        out[i] = acc;
    }
    return out;
}

/// m^T v without forming the transpose.
inline DenseVector matvec_t(const DenseMatrix& m, const DenseVector& v) {
    if (m.rows != v.size())
        throw ShapeError("matvec_t: matrix has " + std::to_string(m.rows) + " rows but vector has " +
                         std::to_string(v.size()) + " entries");
    DenseVector out(m.cols, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double vi = v[i];
        if (vi == 0.0) continue;
        const double* r = m.row(i);
        for (std::size_t j = 0; j < m.cols; ++j) out[j] += vi * r[j];
    }
    return out;
}

inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols != b.rows)
        throw ShapeError("matmul: inner dimensions " + std::to_string(a.cols) + " vs " + std::to_string(b.rows));
    DenseMatrix out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* brow = b.row(k);
            double* orow = out.row(i);
            for (std::size_t j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

inline double dot(const DenseVector& a, const DenseVector& b) {
    if (a.size() != b.size())
        throw ShapeError("dot: lengths " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline double norm2(const DenseVector& v) { return std::sqrt(dot(v, v)); }

inline double norm_inf(const DenseVector& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

/// y += alpha * x
inline void axpy(double alpha, const DenseVector& x, DenseVector& y) {
    if (x.size() != y.size())
        throw ShapeError("axpy: lengths " + std::to_string(x.size()) + " vs " + std::to_string(y.size()));
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(DenseVector& v, double alpha) {
    for (double& x : v) x *= alpha;
}

} // namespace hypertrain

#endif
