#ifndef HYPERTRAIN_HYPERNETS_HPP
#define HYPERTRAIN_HYPERNETS_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hypertrain/errors.hpp"
#include "hypertrain/linalg.hpp"
#include "hypertrain/rng.hpp"

namespace hypertrain {

/// Hyperparameter vector (log-scale regularization strengths).
using HyperVector = DenseVector;

enum class HyperNetFamily { Linear, Factorized, Mlp };

/// theta_phi(lambda) family: affine map, factorized affine map (rank-k
/// bottleneck), or one-hidden-layer ReLU MLP.
struct HyperNetSpec {
    HyperNetFamily family = HyperNetFamily::Linear;
    std::size_t lambda_dim = 1;
    std::size_t theta_dim = 0;   // D, length of the produced weight vector
    std::size_t bottleneck = 0;  // k, factorized only
    std::size_t hidden = 0;      // H, mlp only
};

/// Dense MLP weight count grows as D*H; cap it per the stated memory blow-up.
constexpr std::size_t kMlpParamCap = 5'000'000;

struct HyperNetLayout {
    // linear: W (D x lambda_dim), b (D)
    // factorized: U (D x k), V (k x lambda_dim), b (D)
    // mlp: W1 (H x lambda_dim), b1 (H), W2 (D x H), b2 (D)
    std::size_t w = 0, b = 0;
    std::size_t u = 0, v = 0;
    std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0;
    std::size_t total = 0;
};

inline HyperNetLayout make_hypernet_layout(const HyperNetSpec& spec) {
    const std::size_t L = spec.lambda_dim, D = spec.theta_dim;
    if (L < 1 || D < 1) throw ConfigError("hypernet: lambda_dim and theta_dim must be >= 1");
    HyperNetLayout lay;
    switch (spec.family) {
        case HyperNetFamily::Linear:
            lay.w = 0;
            lay.b = D * L;
            lay.total = D * L + D;
            break;
        case HyperNetFamily::Factorized: {
            const std::size_t k = spec.bottleneck;
            if (k < 1 || k > std::min(L, D))
                throw ConfigError("hypernet: factorized bottleneck must be in [1, min(lambda_dim, theta_dim)]");
            lay.u = 0;
            lay.v = D * k;
            lay.b = D * k + k * L;
            lay.total = D * k + k * L + D;
            break;
        }
        case HyperNetFamily::Mlp: {
            const std::size_t H = spec.hidden;
            if (H < 1) throw ConfigError("hypernet: mlp hidden units must be >= 1");
            if (D * H > kMlpParamCap)
                throw CapabilityError("hypernet: mlp output layer " + std::to_string(D * H) +
                                      " parameters over cap " + std::to_string(kMlpParamCap));
            lay.w1 = 0;
            lay.b1 = H * L;
            lay.w2 = H * L + H;
            lay.b2 = H * L + H + D * H;
            lay.total = H * L + H + D * H + D;
            break;
        }
    }
    return lay;
}

/// Flat hypernetwork weights phi.
struct HyperNetParams {
    DenseVector flat;
    std::uint64_t seed = 0;
};

namespace detail {

inline void check_hypernet(const HyperNetSpec& spec, const HyperNetParams& phi, const DenseVector& lambda) {
    const auto lay = make_hypernet_layout(spec);
    if (phi.flat.size() != lay.total)
        throw ShapeError("hypernet: phi length " + std::to_string(phi.flat.size()) + " != layout total " +
                         std::to_string(lay.total));
    if (lambda.size() != spec.lambda_dim)
        throw ShapeError("hypernet: lambda length " + std::to_string(lambda.size()) + " != lambda_dim " +
                         std::to_string(spec.lambda_dim));
}

} // namespace detail

/// Predicted elementary weights theta_phi(lambda).
inline DenseVector predict_weights(const HyperNetSpec& spec, const HyperNetParams& phi, const HyperVector& lambda) {
    detail::check_hypernet(spec, phi, lambda);
    const auto lay = make_hypernet_layout(spec);
    const std::size_t L = spec.lambda_dim, D = spec.theta_dim;
    const double* p = phi.flat.data();
    DenseVector theta(D);
    switch (spec.family) {
        case HyperNetFamily::Linear:
            for (std::size_t i = 0; i < D; ++i) {
                const double* w = p + lay.w + i * L;
                double acc = p[lay.b + i];
                for (std::size_t j = 0; j < L; ++j) acc += w[j] * lambda[j];
                theta[i] = acc;
            }
            break;
        case HyperNetFamily::Factorized: {
            const std::size_t k = spec.bottleneck;
            DenseVector h(k, 0.0);
            for (std::size_t a = 0; a < k; ++a) {
                const double* v = p + lay.v + a * L;
                double acc = 0.0;
                for (std::size_t j = 0; j < L; ++j) acc += v[j] * lambda[j];
                h[a] = acc;
            }
            for (std::size_t i = 0; i < D; ++i) {
                const double* u = p + lay.u + i * k;
                double acc = p[lay.b + i];
                for (std::size_t a = 0; a < k; ++a) acc += u[a] * h[a];
                theta[i] = acc;
            }
            break;
        }
        case HyperNetFamily::Mlp: {
            const std::size_t H = spec.hidden;
            DenseVector a(H);
            for (std::size_t h = 0; h < H; ++h) {
                const double* w1 = p + lay.w1 + h * L;
                double acc = p[lay.b1 + h];
                for (std::size_t j = 0; j < L; ++j) acc += w1[j] * lambda[j];
                a[h] = acc > 0.0 ? acc : 0.0;
            }
            for (std::size_t i = 0; i < D; ++i) {
                const double* w2 = p + lay.w2 + i * H;
                double acc = p[lay.b2 + i];
                for (std::size_t h = 0; h < H; ++h) acc += w2[h] * a[h];
                theta[i] = acc;
            }
            break;
        }
    }
    return theta;
}

/// Initialize phi so theta_phi(0) equals theta_init exactly while all
/// lambda-sensitive weights are small (1e-3 scale), i.e. the hypernetwork
/// starts as a near-constant map producing a standard weight init.
inline HyperNetParams init_hypernet(const HyperNetSpec& spec, const DenseVector& theta_init, std::uint64_t seed) {
    if (theta_init.size() != spec.theta_dim)
        throw ShapeError("init_hypernet: theta_init length " + std::to_string(theta_init.size()) +
                         " != theta_dim " + std::to_string(spec.theta_dim));
    const auto lay = make_hypernet_layout(spec);
    HyperNetParams phi;
    phi.seed = seed;
    phi.flat.assign(lay.total, 0.0);
    auto rng = make_rng(seed, {0x4b9e7});
    std::normal_distribution<double> normal(0.0, 1.0);
    auto small = [&] { return 1e-3 * normal(rng); };
    switch (spec.family) {
        case HyperNetFamily::Linear:
            for (std::size_t i = lay.w; i < lay.b; ++i) phi.flat[i] = small();
            for (std::size_t i = 0; i < spec.theta_dim; ++i) phi.flat[lay.b + i] = theta_init[i];
            break;
        case HyperNetFamily::Factorized:
            for (std::size_t i = lay.u; i < lay.b; ++i) phi.flat[i] = small();
            for (std::size_t i = 0; i < spec.theta_dim; ++i) phi.flat[lay.b + i] = theta_init[i];
            break;
        case HyperNetFamily::Mlp: {
            for (std::size_t i = lay.w1; i < lay.w2; ++i) phi.flat[i] = small();
            for (std::size_t i = lay.w2; i < lay.b2; ++i) phi.flat[i] = small();
            // b2 absorbs W2 relu(b1) so the prediction at lambda = 0 is exact
            HyperNetParams tmp = phi;
            DenseVector at_zero = predict_weights(spec, tmp, DenseVector(spec.lambda_dim, 0.0));
            for (std::size_t i = 0; i < spec.theta_dim; ++i) phi.flat[lay.b2 + i] = theta_init[i] - at_zero[i];
            break;
        }
    }
    return phi;
}

/// Full Jacobian d theta_phi / d lambda (D x lambda_dim). Linear: W;
/// factorized: U V; mlp: W2 diag(relu'(W1 lambda + b1)) W1.
inline DenseMatrix jacobian_dtheta_dlambda(const HyperNetSpec& spec, const HyperNetParams& phi,
                                           const HyperVector& lambda) {
    detail::check_hypernet(spec, phi, lambda);
    const auto lay = make_hypernet_layout(spec);
    const std::size_t L = spec.lambda_dim, D = spec.theta_dim;
    const double* p = phi.flat.data();
    DenseMatrix J(D, L);
    switch (spec.family) {
        case HyperNetFamily::Linear:
            for (std::size_t i = 0; i < D; ++i)
                for (std::size_t j = 0; j < L; ++j) J(i, j) = p[lay.w + i * L + j];
            break;
        case HyperNetFamily::Factorized: {
            const std::size_t k = spec.bottleneck;
            for (std::size_t i = 0; i < D; ++i) {
                const double* u = p + lay.u + i * k;
                for (std::size_t j = 0; j < L; ++j) {
                    double acc = 0.0;
                    for (std::size_t a = 0; a < k; ++a) acc += u[a] * p[lay.v + a * L + j];
                    J(i, j) = acc;
                }
            }
            break;
        }
        case HyperNetFamily::Mlp: {
            const std::size_t H = spec.hidden;
            std::vector<bool> active(H);
            for (std::size_t h = 0; h < H; ++h) {
                const double* w1 = p + lay.w1 + h * L;
                double acc = p[lay.b1 + h];
                for (std::size_t j = 0; j < L; ++j) acc += w1[j] * lambda[j];
                active[h] = acc > 0.0;
            }
            for (std::size_t i = 0; i < D; ++i) {
                const double* w2 = p + lay.w2 + i * H;
                for (std::size_t j = 0; j < L; ++j) {
                    double acc = 0.0;
                    for (std::size_t h = 0; h < H; ++h)
                        if (active[h]) acc += w2[h] * p[lay.w1 + h * L + j];
                    J(i, j) = acc;
                }
            }
            break;
        }
    }
    return J;
}

/// Vector-Jacobian product g_theta^T (d theta / d lambda) without
/// materializing the Jacobian. This is the hypergradient's lambda-side pull.
inline DenseVector lambda_vjp(const HyperNetSpec& spec, const HyperNetParams& phi, const HyperVector& lambda,
                              const DenseVector& g_theta) {
    detail::check_hypernet(spec, phi, lambda);
    if (g_theta.size() != spec.theta_dim)
        throw ShapeError("lambda_vjp: cotangent length " + std::to_string(g_theta.size()) + " != theta_dim " +
                         std::to_string(spec.theta_dim));
    const auto lay = make_hypernet_layout(spec);
    const std::size_t L = spec.lambda_dim, D = spec.theta_dim;
    const double* p = phi.flat.data();
    DenseVector out(L, 0.0);
    switch (spec.family) {
        case HyperNetFamily::Linear:
            for (std::size_t i = 0; i < D; ++i) {
                const double gi = g_theta[i];
                if (gi == 0.0) continue;
                const double* w = p + lay.w + i * L;
                for (std::size_t j = 0; j < L; ++j) out[j] += gi * w[j];
            }
            break;
        case HyperNetFamily::Factorized: {
            const std::size_t k = spec.bottleneck;
            DenseVector gu(k, 0.0);  // U^T g
            for (std::size_t i = 0; i < D; ++i) {
                const double gi = g_theta[i];
                if (gi == 0.0) continue;
                const double* u = p + lay.u + i * k;
                for (std::size_t a = 0; a < k; ++a) gu[a] += gi * u[a];
            }
            for (std::size_t a = 0; a < k; ++a) {
                const double* v = p + lay.v + a * L;
                for (std::size_t j = 0; j < L; ++j) out[j] += gu[a] * v[j];
            }
            break;
        }
        case HyperNetFamily::Mlp: {
            const std::size_t H = spec.hidden;
            DenseVector gh(H, 0.0);  // relu-masked W2^T g
            for (std::size_t i = 0; i < D; ++i) {
                const double gi = g_theta[i];
                if (gi == 0.0) continue;
                const double* w2 = p + lay.w2 + i * H;
                for (std::size_t h = 0; h < H; ++h) gh[h] += gi * w2[h];
            }
            for (std::size_t h = 0; h < H; ++h) {
                const double* w1 = p + lay.w1 + h * L;
                double z = p[lay.b1 + h];
                for (std::size_t j = 0; j < L; ++j) z += w1[j] * lambda[j];
                if (z <= 0.0) continue;
                for (std::size_t j = 0; j < L; ++j) out[j] += gh[h] * w1[j];
            }
            break;
        }
    }
    return out;
}

/// Backprop of a theta-cotangent into phi: g_phi = g_theta^T (d theta / d phi).
/// Used for every hypernetwork training step.
inline DenseVector phi_vjp(const HyperNetSpec& spec, const HyperNetParams& phi, const HyperVector& lambda,
                           const DenseVector& g_theta) {
    detail::check_hypernet(spec, phi, lambda);
    if (g_theta.size() != spec.theta_dim)
        throw ShapeError("phi_vjp: cotangent length " + std::to_string(g_theta.size()) + " != theta_dim " +
                         std::to_string(spec.theta_dim));
    const auto lay = make_hypernet_layout(spec);
    const std::size_t L = spec.lambda_dim, D = spec.theta_dim;
    const double* p = phi.flat.data();
    DenseVector g(phi.flat.size(), 0.0);
    switch (spec.family) {
        case HyperNetFamily::Linear:
            for (std::size_t i = 0; i < D; ++i) {
                const double gi = g_theta[i];
                g[lay.b + i] = gi;
                if (gi == 0.0) continue;
                double* wg = g.data() + lay.w + i * L;
                for (std::size_t j = 0; j < L; ++j) wg[j] = gi * lambda[j];
            }
            break;
        case HyperNetFamily::Factorized: {
            const std::size_t k = spec.bottleneck;
            DenseVector h(k, 0.0);  // V lambda
            for (std::size_t a = 0; a < k; ++a) {
                const double* v = p + lay.v + a * L;
                double acc = 0.0;
                for (std::size_t j = 0; j < L; ++j) acc += v[j] * lambda[j];
                h[a] = acc;
            }
            DenseVector gu(k, 0.0);  // U^T g
            for (std::size_t i = 0; i < D; ++i) {
                const double gi = g_theta[i];
                g[lay.b + i] = gi;
                if (gi == 0.0) continue;
                const double* u = p + lay.u + i * k;
                double* ug = g.data() + lay.u + i * k;
                for (std::size_t a = 0; a < k; ++a) {
                    ug[a] = gi * h[a];
                    gu[a] += gi * u[a];
                }
            }
            for (std::size_t a = 0; a < k; ++a) {
                double* vg = g.data() + lay.v + a * L;
                for (std::size_t j = 0; j < L; ++j) vg[j] = gu[a] * lambda[j];
            }
            break;
        }
        case HyperNetFamily::Mlp: {
            const std::size_t H = spec.hidden;
            DenseVector a(H), mask(H);
            for (std::size_t h = 0; h < H; ++h) {
                const double* w1 = p + lay.w1 + h * L;
                double z = p[lay.b1 + h];
                for (std::size_t j = 0; j < L; ++j) z += w1[j] * lambda[j];
                mask[h] = z > 0.0 ? 1.0 : 0.0;
                a[h] = z > 0.0 ? z : 0.0;
            }
            DenseVector gh(H, 0.0);  // W2^T g
            for (std::size_t i = 0; i < D; ++i) {
                const double gi = g_theta[i];
                g[lay.b2 + i] = gi;
                if (gi == 0.0) continue;
                const double* w2 = p + lay.w2 + i * H;
                double* w2g = g.data() + lay.w2 + i * H;
                for (std::size_t h = 0; h < H; ++h) {
                    w2g[h] = gi * a[h];
                    gh[h] += gi * w2[h];
                }
            }
            for (std::size_t h = 0; h < H; ++h) {
                const double gz = gh[h] * mask[h];
                g[lay.b1 + h] = gz;
                if (gz == 0.0) continue;
                double* w1g = g.data() + lay.w1 + h * L;
                for (std::size_t j = 0; j < L; ++j) w1g[j] = gz * lambda[j];
            }
            break;
        }
    }
    return g;
}

inline std::string family_name(HyperNetFamily f) {
    switch (f) {
        case HyperNetFamily::Linear: return "linear";
        case HyperNetFamily::Factorized: return "factorized";
        case HyperNetFamily::Mlp: return "mlp";
    }
    return "?";
}

} // namespace hypertrain

#endif
