#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hypertrain/baselines.hpp"

#include "test_util.hpp"

using namespace hypertrain;

namespace {

double spectral_norm(const DenseMatrix& H) {
    DenseVector v(H.rows, 1.0);
    double norm = 0.0;
    for (int it = 0; it < 200; ++it) {
        DenseVector w = matvec(H, v);
        norm = norm2(w);
        if (norm == 0.0) return 0.0;
        for (double& x : w) x /= norm;
        v = std::move(w);
    }
    return norm;
}

} // namespace

TEST_CASE("gp: near-noiseless single point is interpolated") {
    GpModel m = gp_fit({{0.3}}, {2.5}, 1.0, 1.0, 1e-8);
    auto [mean, var] = gp_predict(m, {0.3});
    CHECK(mean == Catch::Approx(2.5).epsilon(1e-9));
    CHECK(var == Catch::Approx(0.0).margin(1e-9));
}

TEST_CASE("gp: far from all data the posterior reverts to the prior") {
    GpModel m = gp_fit({{0.0}, {1.0}}, {1.0, -1.0}, 0.5, 1.7, 1e-3);
    auto [mean, var] = gp_predict(m, {250.0});
    CHECK(std::fabs(mean) < 1e-12);
    CHECK(var == Catch::Approx(1.7 * 1.7).epsilon(1e-12));
}

TEST_CASE("gp: 5-point fit matches a direct dense-solve reimplementation to 1e-8") {
    const std::vector<HyperVector> pts{{-2.0}, {-0.7}, {0.1}, {1.3}, {2.4}};
    const DenseVector y{0.4, -0.2, 0.9, 1.4, -0.6};
    const double l = 0.8, signal = 1.2, noise = 0.05;
    GpModel m = gp_fit(pts, y, l, signal, noise);

    // oracle: direct solve of (K + noise^2 I) alpha = y by Gaussian elimination
    DenseMatrix K(5, 5);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
            const double d = pts[i][0] - pts[j][0];
            K(i, j) = signal * signal * std::exp(-d * d / (2.0 * l * l));
        }
    for (std::size_t i = 0; i < 5; ++i) K(i, i) += noise * noise;
    const DenseVector alpha = ht_test::solve_dense(K, y);

    for (double q : {-2.5, -1.0, 0.0, 0.6, 1.9, 3.0}) {
        DenseVector kstar(5);
        for (std::size_t i = 0; i < 5; ++i) {
            const double d = pts[i][0] - q;
            kstar[i] = signal * signal * std::exp(-d * d / (2.0 * l * l));
        }
        const double want_mean = dot(kstar, alpha);
        // oracle variance: k** - k*^T (K + noise^2 I)^{-1} k*
        const DenseVector kinv = ht_test::solve_dense(K, kstar);
        const double want_var = signal * signal - dot(kstar, kinv);
        auto [mean, var] = gp_predict(m, {q});
        CHECK(mean == Catch::Approx(want_mean).margin(1e-8));
        CHECK(var == Catch::Approx(std::max(0.0, want_var)).margin(1e-8));
    }
}

TEST_CASE("gp: variance is zero at noiseless training inputs and never negative") {
    const std::vector<HyperVector> pts{{-1.0}, {0.2}, {0.9}};
    GpModel m = gp_fit(pts, {0.3, -0.4, 0.8}, 0.7, 1.1, 0.0);
    for (const auto& p : pts) CHECK(gp_predict(m, p).second == Catch::Approx(0.0).margin(1e-8));
    auto rng = make_rng(8);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int t = 0; t < 200; ++t) CHECK(gp_predict(m, {u(rng)}).second >= 0.0);
}

TEST_CASE("gp: failed factorization suggests a jitter increase") {
    // duplicated inputs with zero noise make the kernel singular
    CHECK_THROWS_MATCHES(gp_fit({{0.5}, {0.5}}, {1.0, 1.0}, 1.0, 1.0, 0.0), NumericError,
                         Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("jitter")));
}

TEST_CASE("gp_fit_auto picks kernel hyperparameters by log marginal likelihood") {
    // smooth curve; auto fit should track it closely mid-range
    std::vector<HyperVector> pts;
    DenseVector y;
    for (int i = 0; i <= 20; ++i) {
        const double x = -2.0 + 0.2 * double(i);
        pts.push_back({x});
        y.push_back(std::sin(x));
    }
    GpModel m = gp_fit_auto(pts, y);
    for (double q : {-1.7, -0.3, 0.8, 1.9}) {
        CHECK(gp_predict(m, {q}).first == Catch::Approx(std::sin(q)).margin(0.05));
    }
}

TEST_CASE("unrolled: K = 1 equals -a g_v(theta_1)^T M(theta_0)") {
    const ModelSpec model{{2, 1}, LossTask::MeanSquaredError, false};
    const auto layout = make_layout(model);
    const RegSpec reg = make_reg(RegMode::PerWeight, layout);
    const Batch train = ht_test::reg_batch({{1.0, 0.3}, {-0.4, 0.9}}, {0.7, -0.2});
    const Batch valid = ht_test::reg_batch({{0.6, -0.1}}, {0.4});
    const DenseVector lambda{0.2, -0.4};
    ElemParams theta0{{0.5, -0.8}, layout};

    UnrollSpec unroll{1, 0.07, UnrollStart::FixedInit, 200};
    const DenseVector got = unrolled_hypergradient(model, reg, lambda, theta0, unroll, train, valid);

    const DenseMatrix M = train_mixed_partials(model, theta0, lambda, reg, train);
    ElemParams theta1 = theta0;
    const DenseVector g0 = train_grad_theta(model, theta0, lambda, reg, train);
    for (std::size_t i = 0; i < 2; ++i) theta1.flat[i] -= 0.07 * g0[i];
    auto [loss, gv] = pred_loss_grad(model, theta1, valid);
    (void)loss;
    for (std::size_t j = 0; j < 2; ++j) {
        double want = 0.0;
        for (std::size_t i = 0; i < 2; ++i) want += gv[i] * (-0.07) * M(i, j);
        CHECK(got[j] == Catch::Approx(want).margin(1e-14));
    }
}

TEST_CASE("unrolled: 1-D closed-form geometric series in K at the best response") {
    // 1-D ridge: L = (theta x - y)^2 + e^lambda theta^2 with one example.
    // At theta* the iterates stay fixed, so H and M are constant and
    // J_K = -(1 - (1 - aH)^K) M / H exactly.
    const ModelSpec model{{1, 1}, LossTask::MeanSquaredError, false};
    const auto layout = make_layout(model);
    const RegSpec reg = make_reg(RegMode::Global, layout);
    const Batch train = ht_test::reg_batch({{1.2}}, {0.9});
    const Batch valid = ht_test::reg_batch({{1.0}}, {0.3});
    const DenseVector lambda{-0.3};

    const double x = 1.2, y = 0.9, e = std::exp(-0.3);
    const double theta_star = x * y / (x * x + e);
    ElemParams theta0{{theta_star}, layout};
    const double H = 2.0 * x * x + 2.0 * e;
    const double M = 2.0 * e * theta_star;
    const double gv = 2.0 * (theta_star - 0.3);
    const double a = 0.2 / H;

    for (std::size_t K : {1u, 2u, 5u, 20u, 200u}) {
        UnrollSpec unroll{K, a, UnrollStart::FixedInit, 200};
        const DenseVector got = unrolled_hypergradient(model, reg, lambda, theta0, unroll, train, valid);
        const double JK = -(1.0 - std::pow(1.0 - a * H, double(K))) * M / H;
        CHECK(got[0] == Catch::Approx(gv * JK).epsilon(1e-10));
    }
    // K -> infinity limit equals the implicit hypergradient -g_v M / H
    UnrollSpec unroll{4000, a, UnrollStart::FixedInit, 200};
    const DenseVector got = unrolled_hypergradient(model, reg, lambda, theta0, unroll, train, valid);
    CHECK(got[0] == Catch::Approx(-gv * M / H).epsilon(1e-9));
}

TEST_CASE("unrolled at theta*(lambda) with large K matches the dense-solve implicit hypergradient") {
    const Dataset data = make_ridge_synthetic(40, 8, 0.1, 33);
    SplitSpec split{30, 10, 0, 33};
    const Splits splits = make_splits(data, split);
    const ModelSpec model{{8, 1}, LossTask::MeanSquaredError, false};
    const auto layout = make_layout(model);
    const RegSpec reg = make_reg(RegMode::Global, layout);
    const Batch train = gather(data, splits.train);
    const Batch valid = gather(data, splits.valid);
    const DenseVector lambda{-1.2};

    ElemParams theta_star{ht_test::ridge_solution(train.features, train.reg_targets, lambda[0]), layout};
    const DenseMatrix H = train_hessian_theta(model, theta_star, lambda, reg, train);
    const double a = 0.5 / spectral_norm(H);

    UnrollSpec unroll{500, a, UnrollStart::FixedInit, 200};
    const DenseVector got = unrolled_hypergradient(model, reg, lambda, theta_star, unroll, train, valid);

    // oracle: -g_v^T H^{-1} M via an independent dense solve
    auto [loss, gv] = pred_loss_grad(model, theta_star, valid);
    (void)loss;
    const DenseVector u = ht_test::solve_dense(H, gv);
    const DenseMatrix M = train_mixed_partials(model, theta_star, lambda, reg, train);
    double want = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) want -= u[i] * M(i, 0);
    CHECK(std::fabs(got[0] - want) / std::max(std::fabs(want), 1e-12) < 1e-6);
}

TEST_CASE("unrolled: approximate-best-response start settles before differentiating") {
    const Dataset data = make_ridge_synthetic(20, 4, 0.05, 3);
    SplitSpec split{15, 5, 0, 3};
    const Splits splits = make_splits(data, split);
    const ModelSpec model{{4, 1}, LossTask::MeanSquaredError, false};
    const auto layout = make_layout(model);
    const RegSpec reg = make_reg(RegMode::Global, layout);
    const Batch train = gather(data, splits.train);
    const Batch valid = gather(data, splits.valid);
    const DenseVector lambda{-0.5};

    const DenseMatrix H = train_hessian_theta(model, zeros_like(model), lambda, reg, train);
    const double a = 0.5 / spectral_norm(H);
    UnrollSpec from_zero{400, a, UnrollStart::AtApproxBestResponse, 200};
    const DenseVector got = unrolled_hypergradient(model, reg, lambda, zeros_like(model), from_zero, train, valid);

    ElemParams theta_star{ht_test::ridge_solution(train.features, train.reg_targets, lambda[0]), layout};
    UnrollSpec from_star{400, a, UnrollStart::FixedInit, 200};
    const DenseVector want = unrolled_hypergradient(model, reg, lambda, theta_star, from_star, train, valid);
    CHECK(got[0] == Catch::Approx(want[0]).epsilon(1e-6));
}

TEST_CASE("unrolled enforces the hessian capability cap") {
    const ModelSpec model{{30, 10}, LossTask::SoftmaxCrossEntropy, true};
    ElemParams theta = zeros_like(model);
    Batch train;
    train.features = DenseMatrix(2, 30);
    train.class_labels = {0, 1};
    const RegSpec reg = make_reg(RegMode::Global, theta.layout);
    UnrollSpec unroll{3, 0.1, UnrollStart::FixedInit, 200};
    CHECK_THROWS_AS(unrolled_hypergradient(model, reg, {0.0}, theta, unroll, train, train), CapabilityError);
}

TEST_CASE("random_search: n = 1 degenerates to a single training run; seeded determinism") {
    const Dataset data = make_ridge_synthetic(40, 6, 0.1, 12);
    SplitSpec split{30, 10, 0, 12};
    const Splits splits = make_splits(data, split);
    RunConfig cfg;
    cfg.model = ModelSpec{{6, 1}, LossTask::MeanSquaredError, false};
    cfg.reg = make_reg(RegMode::Global, make_layout(cfg.model));
    cfg.steps_inner = 200;
    cfg.step_theta = 0.05;
    cfg.seed = 5;

    const auto one = random_search(cfg, data, splits, 1, {-6.0}, {2.0});
    CHECK(one.proposals.size() == 1);
    CHECK(one.cv.best_index == 0);
    const auto direct = cross_validate(cfg, data, splits, one.proposals);
    CHECK(one.cv.valid_losses[0] == direct.valid_losses[0]);

    const auto again = random_search(cfg, data, splits, 1, {-6.0}, {2.0});
    CHECK(again.proposals[0] == one.proposals[0]);
    CHECK(again.cv.valid_losses[0] == one.cv.valid_losses[0]);
}

TEST_CASE("surrogate_comparison: error bookkeeping and exact compute matching") {
    const Dataset data = make_ridge_synthetic(30, 4, 0.1, 21);
    SplitSpec split{20, 10, 0, 21};
    const Splits splits = make_splits(data, split);
    RunConfig cfg;
    cfg.model = ModelSpec{{4, 1}, LossTask::MeanSquaredError, false};
    cfg.reg = make_reg(RegMode::Global, make_layout(cfg.model));
    cfg.hypernet = HyperNetSpec{HyperNetFamily::Linear, 1, 4, 0, 0};
    cfg.sampler = SamplerSpec{SamplerKind::GlobalGaussian, {-2.0}, {1.0}, 0.0};
    cfg.steps_inner = 40;
    cfg.step_theta = 0.05;
    cfg.lambda_batch = 8;
    cfg.seed = 31;

    const auto res = surrogate_comparison(cfg, data, splits, 3, 5, 0.05);
    REQUIRE(res.true_losses.size() == 5);
    for (const SurrogateArm* arm : {&res.gp, &res.hypernet_fixed, &res.hypernet_trained}) {
        REQUIRE(arm->errors.size() == 5);
        for (std::size_t i = 0; i < 5; ++i)
            CHECK(arm->errors[i] == arm->predictions[i] - res.true_losses[i]);
        double mean = 0.0;
        for (double e : arm->errors) mean += e / 5.0;
        CHECK(arm->mean_error == Catch::Approx(mean).margin(1e-15));
    }
    // compute matching: the GP's training set cost equals both hypernet budgets
    CHECK(res.fit_grad_evals == 3 * 40);
    CHECK(res.gp.grad_evals == res.fit_grad_evals);
    CHECK(res.hypernet_fixed.grad_evals == res.fit_grad_evals);
    CHECK(res.hypernet_trained.grad_evals == res.fit_grad_evals);

    CHECK_THROWS_AS(surrogate_comparison(cfg, data, splits, 1, 5, 0.05), ConfigError);
}
