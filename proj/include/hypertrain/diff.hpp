#ifndef HYPERTRAIN_DIFF_HPP
#define HYPERTRAIN_DIFF_HPP

#include <cmath>
#include <functional>
#include <string>
#include <utility>

#include "hypertrain/errors.hpp"
#include "hypertrain/linalg.hpp"

namespace hypertrain {

/// A scalar function of one flat parameter vector together with its analytic
/// gradient. Losses in this library carry hand-written backprop, so both
/// callbacks are cheap and deterministic given identical inputs.
struct DiffScalarFn {
    std::string name;
    std::function<double(const DenseVector&)> value;
    std::function<std::pair<double, DenseVector>(const DenseVector&)> value_grad;
};

/// Evaluate f and its gradient at x. Throws NumericError (naming the
/// function) if a non-finite value or gradient entry is produced.
inline std::pair<double, DenseVector> value_and_grad(const DiffScalarFn& f, const DenseVector& x) {
    auto [v, g] = f.value_grad(x);
    if (!std::isfinite(v)) throw NumericError(f.name + ": non-finite value");
    if (g.size() != x.size())
        throw ShapeError(f.name + ": gradient length " + std::to_string(g.size()) + " != input length " +
                         std::to_string(x.size()));
    if (!all_finite(g)) throw NumericError(f.name + ": non-finite gradient");
    return {v, std::move(g)};
}

/// Max over coordinates of the relative error between the analytic gradient
/// and central finite differences with step eps. The relative-error
/// denominator is floored at 1e-8 so zero gradients do not blow up.
inline double grad_check(const DiffScalarFn& f, const DenseVector& x, double eps) {
    if (!(eps > 0.0)) throw ConfigError("grad_check: eps must be > 0");
    auto [v, g] = value_and_grad(f, x);
    (void)v;
    double worst = 0.0;
    DenseVector xp = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        xp[i] = xi + eps;
        const double fp = f.value(xp);
        xp[i] = xi - eps;
        const double fm = f.value(xp);
        xp[i] = xi;
        const double numeric = (fp - fm) / (2.0 * eps);
        const double denom = std::max({std::fabs(g[i]), std::fabs(numeric), 1e-8});
        worst = std::max(worst, std::fabs(g[i] - numeric) / denom);
    }
    return worst;
}

} // namespace hypertrain

#endif
