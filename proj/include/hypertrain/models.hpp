#ifndef HYPERTRAIN_MODELS_HPP
#define HYPERTRAIN_MODELS_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hypertrain/data.hpp"
#include "hypertrain/diff.hpp"
#include "hypertrain/errors.hpp"
#include "hypertrain/linalg.hpp"
#include "hypertrain/rng.hpp"

namespace hypertrain {

// ---------------------------------------------------------------------------
// Model and regularizer specs
// ---------------------------------------------------------------------------

enum class LossTask { SoftmaxCrossEntropy, MeanSquaredError };

/// Fully connected model: input, hidden..., output sizes with ReLU hidden
/// units. `bias = false` gives the pure linear map used by the ridge oracle.
struct ModelSpec {
    std::vector<std::size_t> layer_sizes;
    LossTask task = LossTask::SoftmaxCrossEntropy;
    bool bias = true;

    std::size_t input_dim() const { return layer_sizes.front(); }
    std::size_t output_dim() const { return layer_sizes.back(); }
    std::size_t n_layers() const { return layer_sizes.size() - 1; }
};

struct LayerSlice {
    std::size_t w_offset = 0;  // in*out weights, row-major (in x out)
    std::size_t b_offset = 0;  // out biases (unused when bias == false)
    std::size_t in = 0;
    std::size_t out = 0;
};

struct ElemLayout {
    std::vector<LayerSlice> layers;
    std::size_t total = 0;
    bool bias = true;
};

inline ElemLayout make_layout(const ModelSpec& spec) {
    if (spec.layer_sizes.size() < 2) throw ConfigError("model: need at least input and output sizes");
    ElemLayout layout;
    layout.bias = spec.bias;
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
        LayerSlice s;
        s.in = spec.layer_sizes[l];
        s.out = spec.layer_sizes[l + 1];
        s.w_offset = off;
        off += s.in * s.out;
        s.b_offset = off;
        if (spec.bias) off += s.out;
        layout.layers.push_back(s);
    }
    layout.total = off;
    return layout;
}

/// Flat elementary weights plus the per-layer layout that interprets them.
struct ElemParams {
    DenseVector flat;
    ElemLayout layout;
};

inline ElemParams zeros_like(const ModelSpec& spec) {
    ElemParams p;
    p.layout = make_layout(spec);
    p.flat.assign(p.layout.total, 0.0);
    return p;
}

/// Scaled-Gaussian init: W ~ N(0, 1/fan_in), biases zero.
inline ElemParams init_elem_params(const ModelSpec& spec, std::uint64_t seed) {
    ElemParams p = zeros_like(spec);
    auto rng = make_rng(seed, {0xe1e3});
    std::normal_distribution<double> normal(0.0, 1.0);
    for (const LayerSlice& s : p.layout.layers) {
        const double scale = 1.0 / std::sqrt(double(s.in));
        for (std::size_t i = 0; i < s.in * s.out; ++i) p.flat[s.w_offset + i] = scale * normal(rng);
    }
    return p;
}

enum class RegMode { Global, PerWeight };

/// exp(lambda)-weighted L2 decay. Per-weight mode carries one lambda per
/// elementary parameter (biases included), global mode a single lambda.
struct RegSpec {
    RegMode mode = RegMode::Global;
    std::size_t dim = 1;
};

inline RegSpec make_reg(RegMode mode, const ElemLayout& layout) {
    return RegSpec{mode, mode == RegMode::Global ? std::size_t{1} : layout.total};
}

inline void check_reg(const RegSpec& reg, const DenseVector& lambda, std::size_t theta_dim) {
    if (lambda.size() != reg.dim)
        throw ShapeError("regularizer expects lambda of length " + std::to_string(reg.dim) + ", got " +
                         std::to_string(lambda.size()));
    if (reg.mode == RegMode::PerWeight && reg.dim != theta_dim)
        throw ShapeError("per-weight regularizer dimension " + std::to_string(reg.dim) +
                         " != elementary parameter count " + std::to_string(theta_dim));
}

// ---------------------------------------------------------------------------
// Forward / losses
// ---------------------------------------------------------------------------

namespace detail {

struct ForwardCache {
    std::vector<DenseMatrix> activations;      // a_0 = X, ..., a_L = output
    std::vector<DenseMatrix> preactivations;   // z_1, ..., z_L
};

inline DenseMatrix layer_affine(const DenseMatrix& a, const DenseVector& flat, const LayerSlice& s, bool bias) {
    DenseMatrix z(a.rows, s.out);
    for (std::size_t r = 0; r < a.rows; ++r) {
        const double* arow = a.row(r);
        double* zrow = z.row(r);
        if (bias)
            for (std::size_t j = 0; j < s.out; ++j) zrow[j] = flat[s.b_offset + j];
        for (std::size_t i = 0; i < s.in; ++i) {
            const double ai = arow[i];
            if (ai == 0.0) continue;
            const double* wrow = flat.data() + s.w_offset + i * s.out;
            for (std::size_t j = 0; j < s.out; ++j) zrow[j] += ai * wrow[j];
        }
    }
    return z;
}

inline ForwardCache forward_cached(const ModelSpec& spec, const ElemParams& theta, const DenseMatrix& X) {
    if (X.cols != spec.input_dim())
        throw ShapeError("forward: input has " + std::to_string(X.cols) + " features, model expects " +
                         std::to_string(spec.input_dim()));
    if (theta.flat.size() != theta.layout.total)
        throw ShapeError("forward: theta length " + std::to_string(theta.flat.size()) + " != layout total " +
                         std::to_string(theta.layout.total));
    ForwardCache cache;
    cache.activations.push_back(X);
    for (std::size_t l = 0; l < theta.layout.layers.size(); ++l) {
        DenseMatrix z = layer_affine(cache.activations.back(), theta.flat, theta.layout.layers[l], theta.layout.bias);
        cache.preactivations.push_back(z);
        if (l + 1 < theta.layout.layers.size())
            for (double& v : z.data) v = v > 0.0 ? v : 0.0;
        cache.activations.push_back(std::move(z));
    }
    return cache;
}

} // namespace detail

/// Logits (classification) or predictions (regression) for a feature matrix.
inline DenseMatrix forward(const ModelSpec& spec, const ElemParams& theta, const DenseMatrix& X) {
    return detail::forward_cached(spec, theta, X).activations.back();
}

namespace detail {

/// Loss value plus gradient w.r.t. the output layer, shared by value and
/// backprop paths. Cross-entropy uses max-subtracted log-softmax.
inline double output_loss(const ModelSpec& spec, const DenseMatrix& out, const Batch& batch, DenseMatrix* grad_out) {
    const std::size_t n = out.rows;
    if (n == 0) throw ConfigError("loss: empty batch");
    double loss = 0.0;
    if (grad_out) *grad_out = DenseMatrix(out.rows, out.cols);
    if (spec.task == LossTask::SoftmaxCrossEntropy) {
        if (batch.class_labels.size() != n) throw ShapeError("loss: batch labels do not match feature rows");
        for (std::size_t r = 0; r < n; ++r) {
            const double* z = out.row(r);
            double zmax = z[0];
            for (std::size_t j = 1; j < out.cols; ++j) zmax = std::max(zmax, z[j]);
            double sum = 0.0;
            for (std::size_t j = 0; j < out.cols; ++j) sum += std::exp(z[j] - zmax);
            const double lse = zmax + std::log(sum);
            const int t = batch.class_labels[r];
            loss += lse - z[t];
            if (grad_out) {
                double* g = grad_out->row(r);
                for (std::size_t j = 0; j < out.cols; ++j) g[j] = std::exp(z[j] - lse) / double(n);
                g[t] -= 1.0 / double(n);
            }
        }
    } else {
        if (out.cols != 1) throw ShapeError("loss: mean-squared-error expects a single output unit");
        if (batch.reg_targets.size() != n) throw ShapeError("loss: batch targets do not match feature rows");
        for (std::size_t r = 0; r < n; ++r) {
            const double diff = out.row(r)[0] - batch.reg_targets[r];
            loss += diff * diff;
            if (grad_out) grad_out->row(r)[0] = 2.0 * diff / double(n);
        }
    }
    return loss / double(n);
}

inline DenseVector backprop_theta(const ElemParams& theta, const ForwardCache& cache, DenseMatrix grad_z) {
    DenseVector grad(theta.flat.size(), 0.0);
    const auto& layers = theta.layout.layers;
    for (std::size_t l = layers.size(); l-- > 0;) {
        const LayerSlice& s = layers[l];
        const DenseMatrix& a_prev = cache.activations[l];
        // dW = a_prev^T grad_z, db = column sums of grad_z
        for (std::size_t r = 0; r < grad_z.rows; ++r) {
            const double* gr = grad_z.row(r);
            const double* ar = a_prev.row(r);
            for (std::size_t i = 0; i < s.in; ++i) {
                const double ai = ar[i];
                if (ai == 0.0) continue;
                double* wg = grad.data() + s.w_offset + i * s.out;
                for (std::size_t j = 0; j < s.out; ++j) wg[j] += ai * gr[j];
            }
            if (theta.layout.bias) {
                double* bg = grad.data() + s.b_offset;
                for (std::size_t j = 0; j < s.out; ++j) bg[j] += gr[j];
            }
        }
        if (l == 0) break;
        // grad_a = grad_z W^T, masked by relu'(z_{l-1})
        const DenseMatrix& z_prev = cache.preactivations[l - 1];
        DenseMatrix next(grad_z.rows, s.in);
        for (std::size_t r = 0; r < grad_z.rows; ++r) {
            const double* gr = grad_z.row(r);
            const double* zr = z_prev.row(r);
            double* nr = next.row(r);
            for (std::size_t i = 0; i < s.in; ++i) {
                if (zr[i] <= 0.0) continue;
                const double* wrow = theta.flat.data() + s.w_offset + i * s.out;
                double acc = 0.0;
                for (std::size_t j = 0; j < s.out; ++j) acc += gr[j] * wrow[j];
                nr[i] = acc;
            }
        }
        grad_z = std::move(next);
    }
    return grad;
}

} // namespace detail

/// Mean prediction loss over a batch: numerically stable cross-entropy
/// (natural log) or mean squared error. Never sees lambda.
inline double pred_loss(const ModelSpec& spec, const ElemParams& theta, const Batch& batch) {
    const DenseMatrix out = forward(spec, theta, batch.features);
    return detail::output_loss(spec, out, batch, nullptr);
}

/// Prediction loss and its gradient in theta (hand-written backprop).
inline std::pair<double, DenseVector> pred_loss_grad(const ModelSpec& spec, const ElemParams& theta,
                                                     const Batch& batch) {
    auto cache = detail::forward_cached(spec, theta, batch.features);
    DenseMatrix grad_z;
    const double loss = detail::output_loss(spec, cache.activations.back(), batch, &grad_z);
    return {loss, detail::backprop_theta(theta, cache, std::move(grad_z))};
}

inline double reg_penalty(const RegSpec& reg, const DenseVector& lambda, const DenseVector& theta_flat) {
    check_reg(reg, lambda, theta_flat.size());
    double acc = 0.0;
    if (reg.mode == RegMode::Global) {
        for (double t : theta_flat) acc += t * t;
        acc *= std::exp(lambda[0]);
    } else {
        for (std::size_t i = 0; i < theta_flat.size(); ++i) acc += std::exp(lambda[i]) * theta_flat[i] * theta_flat[i];
    }
    return acc;
}

/// Training loss: pred_loss + exp(lambda)-weighted L2 penalty (no 1/2 factor,
/// biases regularized).
inline double train_loss(const ModelSpec& spec, const ElemParams& theta, const DenseVector& lambda,
                         const RegSpec& reg, const Batch& batch) {
    return pred_loss(spec, theta, batch) + reg_penalty(reg, lambda, theta.flat);
}

/// Gradient of train_loss in theta.
inline DenseVector train_grad_theta(const ModelSpec& spec, const ElemParams& theta, const DenseVector& lambda,
                                    const RegSpec& reg, const Batch& batch) {
    check_reg(reg, lambda, theta.flat.size());
    auto [loss, grad] = pred_loss_grad(spec, theta, batch);
    (void)loss;
    if (reg.mode == RegMode::Global) {
        const double w = 2.0 * std::exp(lambda[0]);
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += w * theta.flat[i];
    } else {
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += 2.0 * std::exp(lambda[i]) * theta.flat[i];
    }
    return grad;
}

inline std::pair<double, DenseVector> train_loss_grad(const ModelSpec& spec, const ElemParams& theta,
                                                      const DenseVector& lambda, const RegSpec& reg,
                                                      const Batch& batch) {
    check_reg(reg, lambda, theta.flat.size());
    auto [loss, grad] = pred_loss_grad(spec, theta, batch);
    loss += reg_penalty(reg, lambda, theta.flat);
    if (reg.mode == RegMode::Global) {
        const double w = 2.0 * std::exp(lambda[0]);
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += w * theta.flat[i];
    } else {
        for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += 2.0 * std::exp(lambda[i]) * theta.flat[i];
    }
    return {loss, std::move(grad)};
}

// ---------------------------------------------------------------------------
// Exact second derivatives (one-layer models, capped dimension). Used by the
// unrolled-differentiation baseline.
// ---------------------------------------------------------------------------

constexpr std::size_t kDefaultHessianCap = 200;

namespace detail {

inline void require_one_layer_under_cap(const ModelSpec& spec, const ElemParams& theta, std::size_t cap,
                                        const char* op) {
    if (spec.n_layers() != 1)
        throw CapabilityError(std::string(op) + ": exact second derivatives are only assembled for 1-layer models");
    if (theta.flat.size() > cap)
        throw CapabilityError(std::string(op) + ": dimension " + std::to_string(theta.flat.size()) + " over cap " +
                              std::to_string(cap));
}

} // namespace detail

/// Exact Hessian of train_loss in theta for 1-layer models (softmax or MSE),
/// symmetric by construction.
inline DenseMatrix train_hessian_theta(const ModelSpec& spec, const ElemParams& theta, const DenseVector& lambda,
                                       const RegSpec& reg, const Batch& batch,
                                       std::size_t cap = kDefaultHessianCap) {
    detail::require_one_layer_under_cap(spec, theta, cap, "train_hessian_theta");
    check_reg(reg, lambda, theta.flat.size());
    const LayerSlice& s = theta.layout.layers[0];
    const bool bias = theta.layout.bias;
    const std::size_t D = theta.flat.size();
    const std::size_t n = batch.size();
    const std::size_t aug = s.in + (bias ? 1 : 0);
    const DenseMatrix out = forward(spec, theta, batch.features);

    // flat index of augmented-input i (bias slot = s.in) with output j
    auto pidx = [&](std::size_t i, std::size_t j) {
        return i < s.in ? s.w_offset + i * s.out + j : s.b_offset + j;
    };

    DenseMatrix H(D, D);
    if (spec.task == LossTask::MeanSquaredError) {
        // (2/n) X~^T X~ per output block
        DenseMatrix gram(aug, aug);
        for (std::size_t r = 0; r < n; ++r) {
            const double* x = batch.features.row(r);
            auto xv = [&](std::size_t i) { return i < s.in ? x[i] : 1.0; };
            for (std::size_t i = 0; i < aug; ++i)
                for (std::size_t k = 0; k < aug; ++k) gram(i, k) += xv(i) * xv(k);
        }
        for (std::size_t i = 0; i < aug; ++i)
            for (std::size_t k = 0; k < aug; ++k)
                for (std::size_t j = 0; j < s.out; ++j)
                    H(pidx(i, j), pidx(k, j)) += 2.0 * gram(i, k) / double(n);
    } else {
        // per-example softmax curvature diag(p) - p p^T spread over x~ x~^T
        for (std::size_t r = 0; r < n; ++r) {
            const double* z = out.row(r);
            double zmax = z[0];
            for (std::size_t j = 1; j < s.out; ++j) zmax = std::max(zmax, z[j]);
            DenseVector p(s.out);
            double sum = 0.0;
            for (std::size_t j = 0; j < s.out; ++j) sum += p[j] = std::exp(z[j] - zmax);
            for (double& v : p) v /= sum;
            const double* x = batch.features.row(r);
            auto xv = [&](std::size_t i) { return i < s.in ? x[i] : 1.0; };
            for (std::size_t i = 0; i < aug; ++i)
                for (std::size_t k = 0; k < aug; ++k) {
                    const double xx = xv(i) * xv(k) / double(n);
                    if (xx == 0.0) continue;
                    for (std::size_t j = 0; j < s.out; ++j) {
                        for (std::size_t l = 0; l < s.out; ++l) {
                            const double curv = (j == l ? p[j] : 0.0) - p[j] * p[l];
                            if (curv != 0.0) H(pidx(i, j), pidx(k, l)) += xx * curv;
                        }
                    }
                }
        }
    }
    if (reg.mode == RegMode::Global) {
        const double w = 2.0 * std::exp(lambda[0]);
        for (std::size_t i = 0; i < D; ++i) H(i, i) += w;
    } else {
        for (std::size_t i = 0; i < D; ++i) H(i, i) += 2.0 * std::exp(lambda[i]);
    }
    return H;
}

/// Mixed second derivative d^2 train_loss / (dlambda dtheta). Only the
/// regularizer couples lambda and theta, so per-weight mode is the diagonal
/// matrix 2 exp(lambda_i) theta_i and global mode the column 2 exp(lambda) theta.
inline DenseMatrix train_mixed_partials(const ModelSpec& spec, const ElemParams& theta, const DenseVector& lambda,
                                        const RegSpec& reg, const Batch& batch,
                                        std::size_t cap = kDefaultHessianCap) {
    (void)batch;
    detail::require_one_layer_under_cap(spec, theta, cap, "train_mixed_partials");
    check_reg(reg, lambda, theta.flat.size());
    const std::size_t D = theta.flat.size();
    DenseMatrix M(D, reg.dim);
    if (reg.mode == RegMode::Global) {
        const double w = 2.0 * std::exp(lambda[0]);
        for (std::size_t i = 0; i < D; ++i) M(i, 0) = w * theta.flat[i];
    } else {
        for (std::size_t i = 0; i < D; ++i) M(i, i) = 2.0 * std::exp(lambda[i]) * theta.flat[i];
    }
    return M;
}

// ---------------------------------------------------------------------------
// DiffScalarFn adapters
// ---------------------------------------------------------------------------

/// Prediction loss as a scalar function of flat theta.
inline DiffScalarFn pred_loss_fn(ModelSpec spec, Batch batch) {
    auto layout = make_layout(spec);
    DiffScalarFn f;
    f.name = "pred_loss(theta)";
    f.value = [spec, batch, layout](const DenseVector& x) {
        return pred_loss(spec, ElemParams{x, layout}, batch);
    };
    f.value_grad = [spec, batch, layout](const DenseVector& x) {
        return pred_loss_grad(spec, ElemParams{x, layout}, batch);
    };
    return f;
}

/// Training loss as a scalar function of flat theta at fixed lambda.
inline DiffScalarFn train_loss_fn(ModelSpec spec, DenseVector lambda, RegSpec reg, Batch batch) {
    auto layout = make_layout(spec);
    DiffScalarFn f;
    f.name = "train_loss(theta)";
    f.value = [spec, lambda, reg, batch, layout](const DenseVector& x) {
        return train_loss(spec, ElemParams{x, layout}, lambda, reg, batch);
    };
    f.value_grad = [spec, lambda, reg, batch, layout](const DenseVector& x) {
        return train_loss_grad(spec, ElemParams{x, layout}, lambda, reg, batch);
    };
    return f;
}

} // namespace hypertrain

#endif
