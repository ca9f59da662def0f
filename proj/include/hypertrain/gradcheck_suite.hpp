#ifndef HYPERTRAIN_GRADCHECK_SUITE_HPP
#define HYPERTRAIN_GRADCHECK_SUITE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "hypertrain/data.hpp"
#include "hypertrain/diff.hpp"
#include "hypertrain/hypernets.hpp"
#include "hypertrain/models.hpp"
#include "hypertrain/rng.hpp"

namespace hypertrain {

/// One finite-difference probe over a battery of loss/model/route combos.
struct GradCheckProbe {
    std::string name;
    double max_rel_error = 0.0;
};

namespace gradcheckdetail {

enum class LossKind { Pred, TrainGlobal, TrainPerWeight };

inline Batch random_class_batch(std::size_t n, std::size_t dim, std::size_t classes, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Batch b;
    b.features = DenseMatrix(n, dim);
    for (double& v : b.features.data) v = normal(rng);
    b.class_labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) b.class_labels[i] = int(i % classes);
    return b;
}

inline Batch random_reg_batch(std::size_t n, std::size_t dim, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Batch b;
    b.features = DenseMatrix(n, dim);
    for (double& v : b.features.data) v = normal(rng);
    b.reg_targets.resize(n);
    for (double& v : b.reg_targets) v = normal(rng);
    return b;
}

/// Min |ReLU preactivation| across the elementary layers on a batch.
inline double min_kink_distance(const ModelSpec& spec, const ElemParams& theta, const DenseMatrix& X) {
    auto cache = detail::forward_cached(spec, theta, X);
    double m = 1e300;
    for (std::size_t l = 0; l + 1 < cache.preactivations.size(); ++l)
        for (double z : cache.preactivations[l].data) m = std::min(m, std::fabs(z));
    return m;
}

inline double min_kink_distance_hypernet(const HyperNetSpec& spec, const HyperNetParams& phi,
                                         const HyperVector& lambda) {
    if (spec.family != HyperNetFamily::Mlp) return 1e300;
    const auto lay = make_hypernet_layout(spec);
    double m = 1e300;
    for (std::size_t h = 0; h < spec.hidden; ++h) {
        double z = phi.flat[lay.b1 + h];
        for (std::size_t j = 0; j < spec.lambda_dim; ++j) z += phi.flat[lay.w1 + h * spec.lambda_dim + j] * lambda[j];
        m = std::min(m, std::fabs(z));
    }
    return m;
}

inline DiffScalarFn loss_in_theta(const ModelSpec& model, LossKind loss, const DenseVector& lambda, const Batch& batch) {
    const auto layout = make_layout(model);
    if (loss == LossKind::Pred) return pred_loss_fn(model, batch);
    const RegSpec reg = make_reg(loss == LossKind::TrainGlobal ? RegMode::Global : RegMode::PerWeight, layout);
    return train_loss_fn(model, lambda, reg, batch);
}

/// The same loss as a function of hypernetwork weights phi at fixed lambda.
inline DiffScalarFn loss_in_phi(const ModelSpec& model, LossKind loss, const HyperNetSpec& hn,
                                const HyperVector& lambda, const Batch& batch) {
    const auto layout = make_layout(model);
    const RegSpec reg = make_reg(loss == LossKind::TrainPerWeight ? RegMode::PerWeight : RegMode::Global, layout);
    DiffScalarFn f;
    f.name = "loss(theta_phi(lambda))";
    f.value = [=](const DenseVector& x) {
        HyperNetParams phi{x, 0};
        ElemParams theta{predict_weights(hn, phi, lambda), layout};
        return loss == LossKind::Pred ? pred_loss(model, theta, batch) : train_loss(model, theta, lambda, reg, batch);
    };
    f.value_grad = [=](const DenseVector& x) -> std::pair<double, DenseVector> {
        HyperNetParams phi{x, 0};
        ElemParams theta{predict_weights(hn, phi, lambda), layout};
        double v;
        DenseVector g_theta;
        if (loss == LossKind::Pred) {
            auto r = pred_loss_grad(model, theta, batch);
            v = r.first;
            g_theta = std::move(r.second);
        } else {
            auto r = train_loss_grad(model, theta, lambda, reg, batch);
            v = r.first;
            g_theta = std::move(r.second);
        }
        return {v, phi_vjp(hn, phi, lambda, g_theta)};
    };
    return f;
}

} // namespace gradcheckdetail

/// Finite-difference battery over every loss family (pred, train global,
/// train per-weight), linear and 2-layer MLP models, checked directly in
/// theta and through each hypernet family in phi. Points landing near a ReLU
/// kink are redrawn (threshold 1e-3, stricter than the 1e-6 contract, so the
/// probe radius eps cannot cross a kink). The step sizes balance truncation
/// against evaluation roundoff for each route's coordinate scale: phi spaces
/// are larger and carry near-zero-gradient coordinates, where a bigger step
/// keeps the difference quotient above the noise floor.
inline std::vector<GradCheckProbe> run_gradcheck_suite(std::uint64_t seed, std::size_t points = 20,
                                                       double eps_direct = 4e-5, double eps_hypernet = 2e-4) {
    using namespace gradcheckdetail;
    std::vector<GradCheckProbe> probes;
    auto rng = make_rng(seed, {0x6c5});
    std::normal_distribution<double> normal(0.0, 1.0);

    const ModelSpec linear{{8, 3}, LossTask::SoftmaxCrossEntropy, true};
    const ModelSpec mlp{{8, 6, 3}, LossTask::SoftmaxCrossEntropy, true};
    const ModelSpec ridge{{6, 1}, LossTask::MeanSquaredError, false};
    const char* loss_names[] = {"pred", "train_global", "train_perweight"};

    struct Route {
        const char* name;
        HyperNetFamily family;
        std::size_t bottleneck, hidden;
        bool direct;
    };
    const Route routes[] = {{"theta", HyperNetFamily::Linear, 0, 0, true},
                            {"hn_linear", HyperNetFamily::Linear, 0, 0, false},
                            {"hn_factorized", HyperNetFamily::Factorized, 2, 0, false},
                            {"hn_mlp", HyperNetFamily::Mlp, 0, 5, false}};

    std::vector<std::pair<const char*, ModelSpec>> model_list = {{"linear", linear}, {"mlp2", mlp}, {"ridge", ridge}};
    for (const auto& [model_name, model] : model_list) {
        const auto layout = make_layout(model);
        for (int li = 0; li < 3; ++li) {
            const auto loss = LossKind(li);
            for (const Route& route : routes) {
                GradCheckProbe probe;
                probe.name = std::string(model_name) + "/" + loss_names[li] + "/" + route.name;
                for (std::size_t p = 0; p < points; ++p) {
                    const Batch batch = model.task == LossTask::SoftmaxCrossEntropy
                                            ? random_class_batch(5, model.input_dim(), model.output_dim(), rng)
                                            : random_reg_batch(5, model.input_dim(), rng);
                    const std::size_t lam_dim = loss == LossKind::TrainPerWeight ? layout.total : 1;
                    HyperVector lambda(lam_dim);
                    for (double& v : lambda) v = 0.5 * normal(rng);
                    if (route.direct) {
                        DenseVector theta(layout.total);
                        do {
                            for (double& v : theta) v = normal(rng) / std::sqrt(double(model.input_dim()));
                        } while (min_kink_distance(model, ElemParams{theta, layout}, batch.features) < 1e-3);
                        probe.max_rel_error =
                            std::max(probe.max_rel_error, grad_check(loss_in_theta(model, loss, lambda, batch), theta, eps_direct));
                    } else {
                        HyperNetSpec hn{route.family, lam_dim, layout.total, std::min(route.bottleneck, lam_dim),
                                        route.hidden};
                        const auto hlay = make_hypernet_layout(hn);
                        DenseVector phi_flat(hlay.total);
                        // block scales keep theta_phi(lambda) near a standard
                        // weight init so no logit saturates
                        auto draw = [&](std::size_t lo, std::size_t hi, double s) {
                            for (std::size_t i = lo; i < hi; ++i) phi_flat[i] = s * normal(rng);
                        };
                        do {
                            const double s_lam = 0.3 / std::sqrt(double(lam_dim));
                            if (hn.family == HyperNetFamily::Linear) {
                                draw(hlay.w, hlay.b, s_lam);
                                draw(hlay.b, hlay.total, 0.3);
                            } else if (hn.family == HyperNetFamily::Factorized) {
                                draw(hlay.u, hlay.v, 0.3 / std::sqrt(double(hn.bottleneck)));
                                draw(hlay.v, hlay.b, s_lam);
                                draw(hlay.b, hlay.total, 0.3);
                            } else {
                                draw(hlay.w1, hlay.b1, s_lam);
                                draw(hlay.b1, hlay.w2, 0.3);
                                draw(hlay.w2, hlay.b2, 0.3 / std::sqrt(double(hn.hidden)));
                                draw(hlay.b2, hlay.total, 0.3);
                            }
                        } while (min_kink_distance_hypernet(hn, HyperNetParams{phi_flat, 0}, lambda) < 1e-3 ||
                                 min_kink_distance(model, ElemParams{predict_weights(hn, HyperNetParams{phi_flat, 0}, lambda), layout},
                                                   batch.features) < 1e-3);
                        probe.max_rel_error =
                            std::max(probe.max_rel_error, grad_check(loss_in_phi(model, loss, hn, lambda, batch), phi_flat, eps_hypernet));
                    }
                }
                probes.push_back(std::move(probe));
            }
        }
    }
    return probes;
}

} // namespace hypertrain

#endif
