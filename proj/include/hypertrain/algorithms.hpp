#ifndef HYPERTRAIN_ALGORITHMS_HPP
#define HYPERTRAIN_ALGORITHMS_HPP

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "hypertrain/data.hpp"
#include "hypertrain/errors.hpp"
#include "hypertrain/hypernets.hpp"
#include "hypertrain/linalg.hpp"
#include "hypertrain/models.hpp"
#include "hypertrain/optim.hpp"
#include "hypertrain/rng.hpp"
#include "hypertrain/threading.hpp"

namespace hypertrain {

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

enum class SamplerKind { GlobalGaussian, LocalGaussian };

/// Hyperparameter training distribution: a broad Gaussian p(lambda) for the
/// two-phase algorithm, or the conditional N(lambda_hat, sigma^2 I) that only
/// puts mass close to the current hyperparameters for the joint algorithm.
struct SamplerSpec {
    SamplerKind kind = SamplerKind::GlobalGaussian;
    HyperVector mean;   // global: per-coordinate mean
    HyperVector sd;     // global: per-coordinate sd, entries > 0
    double sigma = 0.1;  // local: shared sd around lambda_hat
};

enum class InnerOpt { Adam, Sgd };

struct RunConfig {
    ModelSpec model;
    RegSpec reg;
    HyperNetSpec hypernet;
    SamplerSpec sampler;

    std::size_t data_batch = 0;    // 0 = full train split
    std::size_t valid_batch = 0;   // 0 = full valid split
    std::size_t lambda_batch = 8;  // hyperparameters sampled per phi step

    std::size_t steps_hypernet = 1000;  // two-phase: phase 1
    std::size_t steps_hyper = 1000;     // two-phase: phase 2
    std::size_t steps_joint = 1000;     // joint: loop count
    std::size_t steps_inner = 1000;     // cross-validation / truth runs

    double step_phi = 3e-3;
    double step_lambda = 1e-2;
    double step_theta = 1e-2;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    InnerOpt inner_opt = InnerOpt::Adam;

    HyperVector lambda_init;  // empty = zeros(reg.dim)
    std::uint64_t seed = 0;
};

/// One logged training step. wall_seconds is kept in memory for reporting;
/// the CSV serialization writes a reserved 0 in its place so identical runs
/// produce byte-identical files.
struct RunRow {
    std::size_t step = 0;
    double train_loss = 0.0;
    double valid_loss = 0.0;
    double lambda_norm = 0.0;
    double lambda0 = 0.0;
    double wall_seconds = 0.0;
};

struct RunRecord {
    std::vector<RunRow> rows;
    std::uint64_t train_grad_evals = 0;  // elementary-gradient evaluations
    double total_seconds = 0.0;

    void write_csv(std::ostream& os) const {
        os << "step,train_loss,valid_loss,lambda_norm,lambda_0,seconds\n";
        char buf[256];
        for (const RunRow& r : rows) {
            std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.6f\n", r.step, r.train_loss, r.valid_loss,
                          r.lambda_norm, r.lambda0, 0.0);
            os << buf;
        }
    }
};

namespace detail {

inline HyperVector initial_lambda(const RunConfig& cfg) {
    if (!cfg.lambda_init.empty()) {
        if (cfg.lambda_init.size() != cfg.reg.dim)
            throw ConfigError("lambda_init length " + std::to_string(cfg.lambda_init.size()) +
                              " != regularizer dimension " + std::to_string(cfg.reg.dim));
        return cfg.lambda_init;
    }
    return HyperVector(cfg.reg.dim, 0.0);
}

inline std::size_t effective_batch(std::size_t requested, std::size_t split_size) {
    return requested == 0 ? split_size : requested;
}

struct Clock {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

} // namespace detail

// ---------------------------------------------------------------------------
// Hypergradient
// ---------------------------------------------------------------------------

/// Gradient of the validation loss in lambda through the hypernetwork:
/// (dL_valid/dtheta at theta_phi(lambda)) * (dtheta_phi/dlambda).
/// The direct dL_valid/dlambda term is identically zero for decay
/// hyperparameters, so no such term appears here.
inline DenseVector hypergradient(const ModelSpec& model, const HyperNetSpec& hn, const HyperNetParams& phi,
                                 const HyperVector& lambda_hat, const Batch& valid_batch) {
    const auto layout = make_layout(model);
    ElemParams theta{predict_weights(hn, phi, lambda_hat), layout};
    auto [loss, g_theta] = pred_loss_grad(model, theta, valid_batch);
    (void)loss;
    return lambda_vjp(hn, phi, lambda_hat, g_theta);
}

// ---------------------------------------------------------------------------
// Elementary training (the inner loop of cross-validation)
// ---------------------------------------------------------------------------

struct TrainedModel {
    ElemParams theta;
    double valid_loss = 0.0;
    std::uint64_t grad_evals = 0;
};

/// Train elementary weights at fixed lambda for cfg.steps_inner steps and
/// report the full-validation-split loss. theta_seed picks the init draw and
/// stream_seed the mini-batch order, so callers control what varies between
/// runs.
inline TrainedModel train_elementary(const RunConfig& cfg, const Dataset& data, const Splits& splits,
                                     const DenseVector& lambda, std::uint64_t theta_seed,
                                     std::uint64_t stream_seed) {
    TrainedModel out;
    out.theta = init_elem_params(cfg.model, theta_seed);
    const std::size_t batch_size = detail::effective_batch(cfg.data_batch, splits.train.size());
    BatchStream stream(splits.train, batch_size, stream_seed);
    AdamState adam = make_adam(out.theta.flat.size(), cfg.step_theta, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    SgdState sgd{cfg.step_theta};
    for (std::size_t t = 0; t < cfg.steps_inner; ++t) {
        const Batch batch = next_batch(stream, data);
        DenseVector grad = train_grad_theta(cfg.model, out.theta, lambda, cfg.reg, batch);
        ++out.grad_evals;
        if (cfg.inner_opt == InnerOpt::Adam) {
            auto [p, s] = adam_step(std::move(adam), std::move(out.theta.flat), grad);
            out.theta.flat = std::move(p);
            adam = std::move(s);
        } else {
            out.theta.flat = sgd_step(sgd, std::move(out.theta.flat), grad);
        }
    }
    out.valid_loss = pred_loss(cfg.model, out.theta, gather(data, splits.valid));
    return out;
}

// ---------------------------------------------------------------------------
// Algorithm 1: cross-validation over proposed hyperparameters
// ---------------------------------------------------------------------------

struct CrossValResult {
    HyperVector best_lambda;
    ElemParams best_theta;
    std::size_t best_index = 0;
    DenseVector valid_losses;
    std::uint64_t grad_evals = 0;
};

/// For each proposal: re-initialize theta (same draw for every proposal so
/// losses are comparable), run the inner optimization on the training loss,
/// record the validation loss. Returns the argmin proposal; ties keep the
/// lowest index.
inline CrossValResult cross_validate(const RunConfig& cfg, const Dataset& data, const Splits& splits,
                                     const std::vector<HyperVector>& proposals) {
    if (proposals.empty()) throw ConfigError("cross_validate: need at least one proposal");
    CrossValResult res;
    res.valid_losses.resize(proposals.size());
    std::vector<TrainedModel> trained(proposals.size());
    const std::uint64_t theta_seed = derive_seed(cfg.seed, {0xc01});
    const std::uint64_t stream_seed = derive_seed(cfg.seed, {0xc02});
    parallel_for_indexed(proposals.size(), [&](std::size_t i) {
        trained[i] = train_elementary(cfg, data, splits, proposals[i], theta_seed, stream_seed);
    });
    std::size_t best = 0;
    for (std::size_t i = 0; i < proposals.size(); ++i) {
        res.valid_losses[i] = trained[i].valid_loss;
        res.grad_evals += trained[i].grad_evals;
        if (trained[i].valid_loss < res.valid_losses[best]) best = i;
    }
    res.best_index = best;
    res.best_lambda = proposals[best];
    res.best_theta = std::move(trained[best].theta);
    return res;
}

// ---------------------------------------------------------------------------
// Hypernetwork training steps shared by Algorithms 2 and 3
// ---------------------------------------------------------------------------

namespace detail {

struct PhiStepResult {
    DenseVector grad;     // averaged over the lambda mini-batch
    double mean_loss = 0.0;
};

/// Average of grad_phi L_Train(lambda_i, theta_phi(lambda_i), batch) over a
/// sampled lambda mini-batch. Per-sample evaluations may run on worker
/// threads; the average is accumulated in index order, so the result does not
/// depend on thread count.
inline PhiStepResult phi_gradient_over_samples(const RunConfig& cfg, const HyperNetParams& phi,
                                               const std::vector<HyperVector>& lambdas, const Batch& batch,
                                               const ElemLayout& layout) {
    PhiStepResult out;
    std::vector<DenseVector> grads(lambdas.size());
    DenseVector losses(lambdas.size(), 0.0);
    parallel_for_indexed(lambdas.size(), [&](std::size_t i) {
        ElemParams theta{predict_weights(cfg.hypernet, phi, lambdas[i]), layout};
        auto [loss, g_theta] = train_loss_grad(cfg.model, theta, lambdas[i], cfg.reg, batch);
        losses[i] = loss;
        grads[i] = phi_vjp(cfg.hypernet, phi, lambdas[i], g_theta);
    });
    out.grad.assign(phi.flat.size(), 0.0);
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
        axpy(1.0, grads[i], out.grad);
        out.mean_loss += losses[i];
    }
    scale(out.grad, 1.0 / double(lambdas.size()));
    out.mean_loss /= double(lambdas.size());
    return out;
}

inline std::vector<HyperVector> sample_global(const SamplerSpec& s, std::size_t count, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<HyperVector> out(count);
    for (auto& l : out) {
        l.resize(s.mean.size());
        for (std::size_t j = 0; j < l.size(); ++j) l[j] = s.mean[j] + s.sd[j] * normal(rng);
    }
    return out;
}

inline std::vector<HyperVector> sample_local(const HyperVector& center, double sigma, std::size_t count,
                                             std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<HyperVector> out(count);
    for (auto& l : out) {
        l.resize(center.size());
        for (std::size_t j = 0; j < l.size(); ++j) l[j] = center[j] + sigma * normal(rng);
    }
    return out;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Algorithm 2: optimize the hypernetwork, then the hyperparameters
// ---------------------------------------------------------------------------

struct HyperTrainResult {
    HyperNetParams phi;
    HyperVector lambda_hat;
    RunRecord record;
};

/// Phase 1 trains phi to minimize E_{lambda ~ p}[L_Train(lambda,
/// theta_phi(lambda))] with sampled hyperparameter mini-batches. Phase 2
/// freezes phi and descends the surrogate validation loss in lambda_hat.
inline HyperTrainResult hyper_train_global(const RunConfig& cfg, const Dataset& data, const Splits& splits) {
    if (cfg.sampler.kind != SamplerKind::GlobalGaussian)
        throw ConfigError("hyper_train_global: sampler.kind must be global-gaussian");
    if (cfg.sampler.mean.size() != cfg.reg.dim || cfg.sampler.sd.size() != cfg.reg.dim)
        throw ConfigError("sampler: mean/sd must have the regularizer dimension");
    if (cfg.lambda_batch < 1) throw ConfigError("lambda_batch must be >= 1");

    detail::Clock clock;
    HyperTrainResult res;
    res.lambda_hat = detail::initial_lambda(cfg);
    const auto layout = make_layout(cfg.model);
    const ElemParams theta0 = init_elem_params(cfg.model, derive_seed(cfg.seed, {0xa20}));
    res.phi = init_hypernet(cfg.hypernet, theta0.flat, derive_seed(cfg.seed, {0xa21}));

    BatchStream train_stream(splits.train, detail::effective_batch(cfg.data_batch, splits.train.size()),
                             derive_seed(cfg.seed, {0xa22}));
    BatchStream valid_stream(splits.valid, detail::effective_batch(cfg.valid_batch, splits.valid.size()),
                             derive_seed(cfg.seed, {0xa23}));
    auto lambda_rng = make_rng(cfg.seed, {0xa24});
    const Batch full_valid = gather(data, splits.valid);

    AdamState adam_phi = make_adam(res.phi.flat.size(), cfg.step_phi, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    for (std::size_t t = 0; t < cfg.steps_hypernet; ++t) {
        const Batch batch = next_batch(train_stream, data);
        const auto lambdas = detail::sample_global(cfg.sampler, cfg.lambda_batch, lambda_rng);
        auto step = detail::phi_gradient_over_samples(cfg, res.phi, lambdas, batch, layout);
        res.record.train_grad_evals += lambdas.size();
        if (!all_finite(step.grad)) throw NumericError("hyper_train_global: phi gradient at step " + std::to_string(t));
        auto [p, s] = adam_step(std::move(adam_phi), std::move(res.phi.flat), step.grad);
        res.phi.flat = std::move(p);
        adam_phi = std::move(s);
        ElemParams theta_hat{predict_weights(cfg.hypernet, res.phi, res.lambda_hat), layout};
        res.record.rows.push_back({t, step.mean_loss, pred_loss(cfg.model, theta_hat, full_valid),
                                   norm2(res.lambda_hat), res.lambda_hat[0], clock.elapsed()});
    }

    AdamState adam_lambda =
        make_adam(res.lambda_hat.size(), cfg.step_lambda, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    for (std::size_t t = 0; t < cfg.steps_hyper; ++t) {
        const Batch vbatch = next_batch(valid_stream, data);
        DenseVector g = hypergradient(cfg.model, cfg.hypernet, res.phi, res.lambda_hat, vbatch);
        if (!all_finite(g))
            throw NumericError("hyper_train_global: hypergradient at step " + std::to_string(cfg.steps_hypernet + t));
        auto [l, s] = adam_step(std::move(adam_lambda), std::move(res.lambda_hat), g);
        res.lambda_hat = std::move(l);
        adam_lambda = std::move(s);
        ElemParams theta_hat{predict_weights(cfg.hypernet, res.phi, res.lambda_hat), layout};
        const Batch tbatch = next_batch(train_stream, data);
        res.record.rows.push_back({cfg.steps_hypernet + t,
                                   train_loss(cfg.model, theta_hat, res.lambda_hat, cfg.reg, tbatch),
                                   pred_loss(cfg.model, theta_hat, full_valid), norm2(res.lambda_hat),
                                   res.lambda_hat[0], clock.elapsed()});
    }
    res.record.total_seconds = clock.elapsed();
    return res;
}

// ---------------------------------------------------------------------------
// Algorithm 3: joint optimization of hypernetwork and hyperparameters
// ---------------------------------------------------------------------------

/// Each iteration: (a) sample lambda near lambda_hat and a training batch,
/// update phi on the training loss; (b) sample a validation batch, update
/// lambda_hat with the hypergradient.
inline HyperTrainResult hyper_train_joint(const RunConfig& cfg, const Dataset& data, const Splits& splits) {
    if (cfg.sampler.kind != SamplerKind::LocalGaussian)
        throw ConfigError("hyper_train_joint: sampler.kind must be local-gaussian");
    if (cfg.lambda_batch < 1) throw ConfigError("lambda_batch must be >= 1");

    detail::Clock clock;
    HyperTrainResult res;
    res.lambda_hat = detail::initial_lambda(cfg);
    const auto layout = make_layout(cfg.model);
    const ElemParams theta0 = init_elem_params(cfg.model, derive_seed(cfg.seed, {0xa30}));
    res.phi = init_hypernet(cfg.hypernet, theta0.flat, derive_seed(cfg.seed, {0xa31}));

    BatchStream train_stream(splits.train, detail::effective_batch(cfg.data_batch, splits.train.size()),
                             derive_seed(cfg.seed, {0xa32}));
    BatchStream valid_stream(splits.valid, detail::effective_batch(cfg.valid_batch, splits.valid.size()),
                             derive_seed(cfg.seed, {0xa33}));
    auto lambda_rng = make_rng(cfg.seed, {0xa34});
    const Batch full_valid = gather(data, splits.valid);

    AdamState adam_phi = make_adam(res.phi.flat.size(), cfg.step_phi, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    AdamState adam_lambda =
        make_adam(res.lambda_hat.size(), cfg.step_lambda, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);

    for (std::size_t t = 0; t < cfg.steps_joint; ++t) {
        const Batch batch = next_batch(train_stream, data);
        const auto lambdas = detail::sample_local(res.lambda_hat, cfg.sampler.sigma, cfg.lambda_batch, lambda_rng);
        auto step = detail::phi_gradient_over_samples(cfg, res.phi, lambdas, batch, layout);
        res.record.train_grad_evals += lambdas.size();
        if (!all_finite(step.grad)) throw NumericError("hyper_train_joint: phi gradient at step " + std::to_string(t));
        auto [p, s] = adam_step(std::move(adam_phi), std::move(res.phi.flat), step.grad);
        res.phi.flat = std::move(p);
        adam_phi = std::move(s);

        const Batch vbatch = next_batch(valid_stream, data);
        DenseVector g = hypergradient(cfg.model, cfg.hypernet, res.phi, res.lambda_hat, vbatch);
        if (!all_finite(g)) throw NumericError("hyper_train_joint: hypergradient at step " + std::to_string(t));
        auto [l, s2] = adam_step(std::move(adam_lambda), std::move(res.lambda_hat), g);
        res.lambda_hat = std::move(l);
        adam_lambda = std::move(s2);

        ElemParams theta_hat{predict_weights(cfg.hypernet, res.phi, res.lambda_hat), layout};
        res.record.rows.push_back({t, step.mean_loss, pred_loss(cfg.model, theta_hat, full_valid),
                                   norm2(res.lambda_hat), res.lambda_hat[0], clock.elapsed()});
    }
    res.record.total_seconds = clock.elapsed();
    return res;
}

} // namespace hypertrain

#endif
