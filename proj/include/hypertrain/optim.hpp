#ifndef HYPERTRAIN_OPTIM_HPP
#define HYPERTRAIN_OPTIM_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include "hypertrain/errors.hpp"
#include "hypertrain/linalg.hpp"

namespace hypertrain {

/// Adam moment accumulators. Defaults follow the usual (.9, .999) betas.
struct AdamState {
    DenseVector m;
    DenseVector v;
    std::uint64_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double alpha = 3e-4;
};

inline AdamState make_adam(std::size_t n, double alpha, double beta1 = 0.9, double beta2 = 0.999,
                           double eps = 1e-8) {
    AdamState s;
    s.m.assign(n, 0.0);
    s.v.assign(n, 0.0);
    s.alpha = alpha;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.eps = eps;
    return s;
}

/// One bias-corrected Adam update. Pure: returns the new parameters and state.
inline std::pair<DenseVector, AdamState> adam_step(AdamState state, DenseVector params, const DenseVector& grad) {
    if (params.size() != grad.size() || params.size() != state.m.size())
        throw ShapeError("adam_step: params " + std::to_string(params.size()) + ", grad " +
                         std::to_string(grad.size()) + ", state " + std::to_string(state.m.size()));
    state.t += 1;
    const double c1 = 1.0 - std::pow(state.beta1, double(state.t));
    const double c2 = 1.0 - std::pow(state.beta2, double(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * grad[i];
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * grad[i] * grad[i];
        const double mhat = state.m[i] / c1;
        const double vhat = state.v[i] / c2;
        params[i] -= state.alpha * mhat / (std::sqrt(vhat) + state.eps);
    }
    return {std::move(params), std::move(state)};
}

struct SgdState {
    double alpha = 1e-2;
};

/// Plain gradient step: params - alpha * grad.
inline DenseVector sgd_step(const SgdState& state, DenseVector params, const DenseVector& grad) {
    if (params.size() != grad.size())
        throw ShapeError("sgd_step: params " + std::to_string(params.size()) + ", grad " +
                         std::to_string(grad.size()));
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= state.alpha * grad[i];
    return params;
}

} // namespace hypertrain

#endif
