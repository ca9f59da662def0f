#ifndef HYPERTRAIN_BASELINES_HPP
#define HYPERTRAIN_BASELINES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hypertrain/algorithms.hpp"
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
// Gaussian-process regression with an RBF kernel
// ---------------------------------------------------------------------------

/// Zero-mean GP posterior over scalar targets. Kernel
/// k(a,b) = signal^2 exp(-|a-b|^2 / (2 l^2)), observation noise noise_sd.
struct GpModel {
    std::vector<HyperVector> inputs;
    DenseVector targets;
    double lengthscale = 1.0;
    double signal_sd = 1.0;
    double noise_sd = 1e-3;
    DenseMatrix chol;        // lower-triangular factor of K + noise^2 I
    DenseVector alpha;       // (K + noise^2 I)^{-1} targets
    double log_marginal = 0.0;
};

namespace detail {

inline double rbf(const HyperVector& a, const HyperVector& b, double lengthscale, double signal_sd) {
    if (a.size() != b.size()) throw ShapeError("gp: input dimensions differ");
    double d2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        d2 += d * d;
    }
    return signal_sd * signal_sd * std::exp(-d2 / (2.0 * lengthscale * lengthscale));
}

/// In-place lower Cholesky; returns false if a pivot is not positive.
inline bool cholesky(DenseMatrix& a) {
    const std::size_t n = a.rows;
    for (std::size_t j = 0; j < n; ++j) {
        double diag = a(j, j);
        for (std::size_t k = 0; k < j; ++k) diag -= a(j, k) * a(j, k);
        if (!(diag > 0.0)) return false;
        const double ljj = std::sqrt(diag);
        a(j, j) = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double v = a(i, j);
            for (std::size_t k = 0; k < j; ++k) v -= a(i, k) * a(j, k);
            a(i, j) = v / ljj;
        }
        for (std::size_t k = j + 1; k < n; ++k) a(j, k) = 0.0;
    }
    return true;
}

inline DenseVector chol_forward(const DenseMatrix& L, const DenseVector& b) {
    DenseVector x(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) {
        double v = b[i];
        for (std::size_t k = 0; k < i; ++k) v -= L(i, k) * x[k];
        x[i] = v / L(i, i);
    }
    return x;
}

inline DenseVector chol_backward(const DenseMatrix& L, const DenseVector& b) {
    const std::size_t n = b.size();
    DenseVector x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double v = b[ii];
        for (std::size_t k = ii + 1; k < n; ++k) v -= L(k, ii) * x[k];
        x[ii] = v / L(ii, ii);
    }
    return x;
}

} // namespace detail

/// Fit the GP: factorize K + noise^2 I and precompute the weight vector.
/// Throws NumericError with a suggested jitter if the factorization fails.
inline GpModel gp_fit(std::vector<HyperVector> points, DenseVector targets, double lengthscale, double signal_sd,
                      double noise_sd) {
    if (points.empty()) throw ConfigError("gp_fit: need at least one point");
    if (points.size() != targets.size()) throw ShapeError("gp_fit: point/target counts differ");
    if (!(lengthscale > 0.0) || !(signal_sd > 0.0) || !(noise_sd >= 0.0))
        throw ConfigError("gp_fit: kernel hyperparameters must be positive");
    GpModel m;
    m.inputs = std::move(points);
    m.targets = std::move(targets);
    m.lengthscale = lengthscale;
    m.signal_sd = signal_sd;
    m.noise_sd = noise_sd;
    const std::size_t n = m.inputs.size();
    DenseMatrix K(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) K(i, j) = K(j, i) = detail::rbf(m.inputs[i], m.inputs[j], lengthscale, signal_sd);
    for (std::size_t i = 0; i < n; ++i) K(i, i) += noise_sd * noise_sd;
    if (!detail::cholesky(K))
        throw NumericError("gp_fit: kernel factorization failed; increase noise_sd jitter (try " +
                           std::to_string(std::max(1e-6, noise_sd * 10.0)) + ")");
    m.chol = std::move(K);
    m.alpha = detail::chol_backward(m.chol, detail::chol_forward(m.chol, m.targets));
    double logdet = 0.0;
    for (std::size_t i = 0; i < n; ++i) logdet += std::log(m.chol(i, i));
    m.log_marginal = -0.5 * dot(m.targets, m.alpha) - logdet - 0.5 * double(n) * std::log(2.0 * 3.14159265358979323846);
    return m;
}

/// Posterior mean and variance at a query point. Variance is clamped at zero
/// after rounding.
inline std::pair<double, double> gp_predict(const GpModel& m, const HyperVector& x) {
    const std::size_t n = m.inputs.size();
    DenseVector kstar(n);
    for (std::size_t i = 0; i < n; ++i) kstar[i] = detail::rbf(m.inputs[i], x, m.lengthscale, m.signal_sd);
    const double mean = dot(kstar, m.alpha);
    const DenseVector w = detail::chol_forward(m.chol, kstar);
    double var = m.signal_sd * m.signal_sd - dot(w, w);
    if (var < 0.0) var = 0.0;
    return {mean, var};
}

/// Kernel-hyperparameter grids for gp_fit_auto.
struct GpGrid {
    DenseVector lengthscales{0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0};
    DenseVector noises{1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1};
};

/// Grid search over lengthscale x noise maximizing the log marginal
/// likelihood; the signal scale is set to the target standard deviation.
inline GpModel gp_fit_auto(const std::vector<HyperVector>& points, const DenseVector& targets,
                           const GpGrid& grid = {}) {
    double mean = 0.0;
    for (double t : targets) mean += t;
    mean /= double(targets.size());
    double var = 0.0;
    for (double t : targets) var += (t - mean) * (t - mean);
    const double signal = std::max(std::sqrt(var / double(targets.size())), 1e-6);

    GpModel best;
    bool have = false;
    for (double l : grid.lengthscales)
        for (double s : grid.noises) {
            GpModel m;
            try {
                m = gp_fit(points, targets, l, signal, s);
            } catch (const NumericError&) {
                continue;
            }
            if (!have || m.log_marginal > best.log_marginal) {
                best = std::move(m);
                have = true;
            }
        }
    if (!have) throw NumericError("gp_fit_auto: no grid point factorized; widen the noise grid");
    return best;
}

// ---------------------------------------------------------------------------
// Truncated unrolled differentiation
// ---------------------------------------------------------------------------

enum class UnrollStart { AtApproxBestResponse, FixedInit };

/// K explicit SGD steps differentiated exactly through the recurrence
/// d theta_{i+1}/d lambda = (I - a H) d theta_i/d lambda - a M.
struct UnrollSpec {
    std::size_t unroll_steps = 1;                       // K
    double step = 0.1;                                  // inner SGD step a
    UnrollStart start = UnrollStart::FixedInit;
    std::size_t hessian_cap = kDefaultHessianCap;
};

/// Hypergradient of the validation loss through K unrolled SGD steps from
/// theta_start: (dL_valid/dtheta at theta_K) * (d theta_K / d lambda).
inline DenseVector unrolled_hypergradient(const ModelSpec& model, const RegSpec& reg, const DenseVector& lambda,
                                          const ElemParams& theta_start, const UnrollSpec& unroll,
                                          const Batch& train_batch, const Batch& valid_batch) {
    if (unroll.unroll_steps < 1) throw ConfigError("unroll: need K >= 1");
    if (!(unroll.step > 0.0)) throw ConfigError("unroll: step must be > 0");
    ElemParams theta = theta_start;
    const std::size_t D = theta.flat.size();

    if (unroll.start == UnrollStart::AtApproxBestResponse) {
        // settle theta near a best response before differentiating
        const std::size_t max_steps = 200 * unroll.unroll_steps;
        for (std::size_t t = 0; t < max_steps; ++t) {
            DenseVector g = train_grad_theta(model, theta, lambda, reg, train_batch);
            if (norm_inf(g) <= 1e-12 * std::max(1.0, norm_inf(theta.flat))) break;
            for (std::size_t i = 0; i < D; ++i) theta.flat[i] -= unroll.step * g[i];
        }
    }

    const std::size_t L = lambda.size();
    DenseMatrix J(D, L);  // d theta_i / d lambda, starts at zero
    for (std::size_t k = 0; k < unroll.unroll_steps; ++k) {
        const DenseMatrix H = train_hessian_theta(model, theta, lambda, reg, train_batch, unroll.hessian_cap);
        const DenseMatrix M = train_mixed_partials(model, theta, lambda, reg, train_batch, unroll.hessian_cap);
        // J <- J - a (H J + M)
        DenseMatrix HJ = matmul(H, J);
        for (std::size_t i = 0; i < D * L; ++i) J.data[i] -= unroll.step * (HJ.data[i] + M.data[i]);
        DenseVector g = train_grad_theta(model, theta, lambda, reg, train_batch);
        for (std::size_t i = 0; i < D; ++i) theta.flat[i] -= unroll.step * g[i];
    }

    auto [loss, g_valid] = pred_loss_grad(model, theta, valid_batch);
    (void)loss;
    DenseVector out(L, 0.0);
    for (std::size_t i = 0; i < D; ++i)
        for (std::size_t j = 0; j < L; ++j) out[j] += g_valid[i] * J(i, j);
    return out;
}

// ---------------------------------------------------------------------------
// Random search
// ---------------------------------------------------------------------------

struct RandomSearchResult {
    CrossValResult cv;
    std::vector<HyperVector> proposals;
};

/// Uniform box samples delegated to cross-validation.
inline RandomSearchResult random_search(const RunConfig& cfg, const Dataset& data, const Splits& splits,
                                        std::size_t n_samples, const HyperVector& lo, const HyperVector& hi) {
    if (n_samples < 1) throw ConfigError("random_search: need n_samples >= 1");
    if (lo.size() != cfg.reg.dim || hi.size() != cfg.reg.dim)
        throw ConfigError("random_search: box bounds must have the regularizer dimension");
    auto rng = make_rng(cfg.seed, {0x4a2d});
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    RandomSearchResult res;
    res.proposals.resize(n_samples);
    for (auto& l : res.proposals) {
        l.resize(lo.size());
        for (std::size_t j = 0; j < l.size(); ++j) l[j] = lo[j] + (hi[j] - lo[j]) * unit(rng);
    }
    res.cv = cross_validate(cfg, data, splits, res.proposals);
    return res;
}

// ---------------------------------------------------------------------------
// Surrogate comparison: GP vs fixed-set hypernet vs stochastically trained
// hypernet, compute-matched by elementary-gradient-evaluation counts.
// ---------------------------------------------------------------------------

struct SurrogateArm {
    std::string name;
    DenseVector predictions;
    DenseVector errors;  // prediction - true loss
    double mean_error = 0.0;
    double sd_error = 0.0;
    double frac_within = 0.0;  // fraction of |error| < delta
    std::uint64_t grad_evals = 0;
};

struct SurrogateComparison {
    std::vector<HyperVector> fit_lambdas;
    DenseVector fit_losses;
    std::vector<HyperVector> eval_lambdas;
    DenseVector true_losses;
    SurrogateArm gp;
    SurrogateArm hypernet_fixed;
    SurrogateArm hypernet_trained;
    double delta = 0.05;
    std::uint64_t fit_grad_evals = 0;  // cost of producing the GP's training set
};

namespace detail {

inline void finish_arm(SurrogateArm& arm, const DenseVector& truth, double delta) {
    arm.errors.resize(truth.size());
    double mean = 0.0;
    std::size_t within = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        arm.errors[i] = arm.predictions[i] - truth[i];
        mean += arm.errors[i];
        if (std::fabs(arm.errors[i]) < delta) ++within;
    }
    arm.mean_error = truth.empty() ? 0.0 : mean / double(truth.size());
    double var = 0.0;
    for (double e : arm.errors) var += (e - arm.mean_error) * (e - arm.mean_error);
    arm.sd_error = truth.empty() ? 0.0 : std::sqrt(var / double(truth.size()));
    arm.frac_within = truth.empty() ? 0.0 : double(within) / double(truth.size());
}

/// Phase-1 hypernetwork training against an arbitrary lambda source, spending
/// exactly `budget` elementary-gradient evaluations.
template <class SampleFn>
inline std::pair<HyperNetParams, std::uint64_t> train_hypernet_with_budget(const RunConfig& cfg, const Dataset& data,
                                                                           const Splits& splits, std::uint64_t budget,
                                                                           std::uint64_t seed_tag, SampleFn&& sample) {
    const auto layout = make_layout(cfg.model);
    const ElemParams theta0 = init_elem_params(cfg.model, derive_seed(cfg.seed, {seed_tag, 1}));
    HyperNetParams phi = init_hypernet(cfg.hypernet, theta0.flat, derive_seed(cfg.seed, {seed_tag, 2}));
    BatchStream stream(splits.train, effective_batch(cfg.data_batch, splits.train.size()),
                       derive_seed(cfg.seed, {seed_tag, 3}));
    auto rng = make_rng(cfg.seed, {seed_tag, 4});
    AdamState adam = make_adam(phi.flat.size(), cfg.step_phi, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    std::uint64_t spent = 0;
    while (spent < budget) {
        const std::size_t take = std::min<std::uint64_t>(cfg.lambda_batch, budget - spent);
        const Batch batch = next_batch(stream, data);
        const std::vector<HyperVector> lambdas = sample(rng, take);
        auto step = phi_gradient_over_samples(cfg, phi, lambdas, batch, layout);
        spent += take;
        auto [p, s] = adam_step(std::move(adam), std::move(phi.flat), step.grad);
        phi.flat = std::move(p);
        adam = std::move(s);
    }
    return {std::move(phi), spent};
}

} // namespace detail

/// Build the three surrogate predictors with matched compute and score their
/// validation-loss predictions on n_eval freshly optimized hyperparameters.
inline SurrogateComparison surrogate_comparison(const RunConfig& cfg, const Dataset& data, const Splits& splits,
                                                std::size_t n_fit, std::size_t n_eval, double delta = 0.05,
                                                const GpGrid& grid = {}) {
    if (n_fit < 2) throw ConfigError("surrogate_comparison: need n_fit >= 2");
    if (cfg.sampler.kind != SamplerKind::GlobalGaussian)
        throw ConfigError("surrogate_comparison: sampler.kind must be global-gaussian");
    SurrogateComparison res;
    res.delta = delta;
    const auto layout = make_layout(cfg.model);

    // Fit tuples: fully trained weights per sampled lambda.
    auto fit_rng = make_rng(cfg.seed, {0x5c1});
    res.fit_lambdas = detail::sample_global(cfg.sampler, n_fit, fit_rng);
    res.fit_losses.resize(n_fit);
    {
        std::vector<double> losses(n_fit);
        std::vector<std::uint64_t> evals(n_fit);
        parallel_for_indexed(n_fit, [&](std::size_t i) {
            TrainedModel t = train_elementary(cfg, data, splits, res.fit_lambdas[i],
                                              derive_seed(cfg.seed, {0x5c2, i}), derive_seed(cfg.seed, {0x5c3, i}));
            losses[i] = t.valid_loss;
            evals[i] = t.grad_evals;
        });
        for (std::size_t i = 0; i < n_fit; ++i) {
            res.fit_losses[i] = losses[i];
            res.fit_grad_evals += evals[i];
        }
    }

    // Arm a: GP on (lambda, loss), targets centered, kernel grid-searched.
    double target_mean = 0.0;
    for (double t : res.fit_losses) target_mean += t;
    target_mean /= double(n_fit);
    DenseVector centered = res.fit_losses;
    for (double& t : centered) t -= target_mean;
    const GpModel gp = gp_fit_auto(res.fit_lambdas, centered, grid);
    res.gp.name = "gp";
    res.gp.grad_evals = res.fit_grad_evals;

    // Arm b: hypernet trained on the same fixed lambda set, same budget.
    res.hypernet_fixed.name = "hypernet_fixed";
    auto [phi_fixed, spent_fixed] = detail::train_hypernet_with_budget(
        cfg, data, splits, res.fit_grad_evals, 0x5d0, [&](std::mt19937_64& rng, std::size_t count) {
            std::uniform_int_distribution<std::size_t> pick(0, n_fit - 1);
            std::vector<HyperVector> out(count);
            for (auto& l : out) l = res.fit_lambdas[pick(rng)];
            return out;
        });
    res.hypernet_fixed.grad_evals = spent_fixed;

    // Arm c: hypernet trained on stochastically sampled lambdas (two-phase
    // algorithm, phase 1), same budget.
    res.hypernet_trained.name = "hypernet_trained";
    auto [phi_trained, spent_trained] = detail::train_hypernet_with_budget(
        cfg, data, splits, res.fit_grad_evals, 0x5e0,
        [&](std::mt19937_64& rng, std::size_t count) { return detail::sample_global(cfg.sampler, count, rng); });
    res.hypernet_trained.grad_evals = spent_trained;

    // Evaluation tuples: freshly optimized weights on unseen lambdas.
    auto eval_rng = make_rng(cfg.seed, {0x5f1});
    res.eval_lambdas = detail::sample_global(cfg.sampler, n_eval, eval_rng);
    res.true_losses.resize(n_eval);
    res.gp.predictions.resize(n_eval);
    res.hypernet_fixed.predictions.resize(n_eval);
    res.hypernet_trained.predictions.resize(n_eval);
    const Batch full_valid = gather(data, splits.valid);
    parallel_for_indexed(n_eval, [&](std::size_t i) {
        TrainedModel t = train_elementary(cfg, data, splits, res.eval_lambdas[i], derive_seed(cfg.seed, {0x5f2, i}),
                                          derive_seed(cfg.seed, {0x5f3, i}));
        res.true_losses[i] = t.valid_loss;
        res.gp.predictions[i] = gp_predict(gp, res.eval_lambdas[i]).first + target_mean;
        ElemParams tb{predict_weights(cfg.hypernet, phi_fixed, res.eval_lambdas[i]), layout};
        res.hypernet_fixed.predictions[i] = pred_loss(cfg.model, tb, full_valid);
        ElemParams tc{predict_weights(cfg.hypernet, phi_trained, res.eval_lambdas[i]), layout};
        res.hypernet_trained.predictions[i] = pred_loss(cfg.model, tc, full_valid);
    });

    detail::finish_arm(res.gp, res.true_losses, delta);
    detail::finish_arm(res.hypernet_fixed, res.true_losses, delta);
    detail::finish_arm(res.hypernet_trained, res.true_losses, delta);
    return res;
}

} // namespace hypertrain

#endif
