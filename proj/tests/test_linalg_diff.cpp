#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <limits>

#include "hypertrain/diff.hpp"
#include "hypertrain/linalg.hpp"
#include "hypertrain/models.hpp"
#include "hypertrain/rng.hpp"

#include "test_util.hpp"

using namespace hypertrain;

TEST_CASE("matvec basics") {
    DenseMatrix I = DenseMatrix::identity(2);
    CHECK(matvec(I, {3.0, 4.0}) == DenseVector{3.0, 4.0});

    DenseMatrix Z(3, 2);
    CHECK(matvec(Z, {1.0, -2.0}) == DenseVector{0.0, 0.0, 0.0});

    DenseMatrix A(2, 2);
    A(0, 0) = 1; A(0, 1) = 2; A(1, 0) = 3; A(1, 1) = 4;
    CHECK(matvec(A, {1.0, 1.0}) == DenseVector{3.0, 7.0});

    CHECK_THROWS_AS(matvec(A, {1.0, 2.0, 3.0}), ShapeError);
}

TEST_CASE("matvec identity property on random vectors") {
    auto rng = make_rng(7);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + std::size_t(rng() % 12);
        DenseMatrix I = DenseMatrix::identity(n);
        DenseVector v(n);
        for (double& x : v) x = normal(rng);
        CHECK(matvec(I, v) == v);
    }
}

TEST_CASE("value_and_grad on a quadratic and a constant") {
    DiffScalarFn quad{"sum of squares",
                      [](const DenseVector& x) { return dot(x, x); },
                      [](const DenseVector& x) {
                          DenseVector g = x;
                          scale(g, 2.0);
                          return std::make_pair(dot(x, x), g);
                      }};
    auto [v, g] = value_and_grad(quad, {1.0, 2.0});
    CHECK(v == 5.0);
    CHECK(g == DenseVector{2.0, 4.0});

    DiffScalarFn constant{"constant", [](const DenseVector&) { return 3.5; },
                          [](const DenseVector& x) { return std::make_pair(3.5, DenseVector(x.size(), 0.0)); }};
    auto [cv, cg] = value_and_grad(constant, {0.3, -0.7, 9.0});
    CHECK(cv == 3.5);
    CHECK(cg == DenseVector{0.0, 0.0, 0.0});
}

TEST_CASE("value_and_grad flags non-finite values with the operation name") {
    DiffScalarFn bad{"explodes", [](const DenseVector&) { return std::numeric_limits<double>::infinity(); },
                     [](const DenseVector& x) {
                         return std::make_pair(std::numeric_limits<double>::infinity(), DenseVector(x.size(), 0.0));
                     }};
    CHECK_THROWS_WITH(value_and_grad(bad, {1.0}), Catch::Matchers::ContainsSubstring("explodes"));
}

TEST_CASE("logistic-regression loss gradient matches finite differences") {
    const ModelSpec model{{3, 2}, LossTask::SoftmaxCrossEntropy, true};
    const Batch batch = ht_test::class_batch({{0.2, -1.1, 0.7}, {1.3, 0.4, -0.5}}, {0, 1});
    DiffScalarFn f = pred_loss_fn(model, batch);
    auto rng = make_rng(3);
    std::normal_distribution<double> normal(0.0, 1.0);
    DenseVector theta(make_layout(model).total);
    for (double& x : theta) x = normal(rng);
    CHECK(grad_check(f, theta, 1e-6) < 1e-6);
}

TEST_CASE("grad_check tolerances by function class") {
    DiffScalarFn quad{"quadratic", [](const DenseVector& x) { return 3.0 * dot(x, x); },
                      [](const DenseVector& x) {
                          DenseVector g = x;
                          scale(g, 6.0);
                          return std::make_pair(3.0 * dot(x, x), g);
                      }};
    CHECK(grad_check(quad, {0.4, -1.2, 2.0}, 1e-5) <= 1e-8);

    DiffScalarFn lin{"linear", [](const DenseVector& x) { return 2.0 * x[0] - 0.5 * x[1]; },
                     [](const DenseVector&) { return std::make_pair(0.0, DenseVector{2.0, -0.5}); }};
    // central differences are exact on linear functions
    DiffScalarFn lin_vg{"linear", lin.value, [&](const DenseVector& x) {
                            return std::make_pair(lin.value(x), DenseVector{2.0, -0.5});
                        }};
    CHECK(grad_check(lin_vg, {1.0, 1.0}, 1e-5) <= 1e-10);

    // ReLU MLP at a point away from activation kinks
    const ModelSpec mlp{{4, 5, 3}, LossTask::SoftmaxCrossEntropy, true};
    const Batch batch = ht_test::class_batch({{0.3, -0.2, 1.4, 0.8}, {-1.0, 0.6, 0.2, -0.4}}, {2, 0});
    DiffScalarFn f = pred_loss_fn(mlp, batch);
    auto rng = make_rng(11);
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto layout = make_layout(mlp);
    DenseVector theta(layout.total);
    double kink;
    do {
        for (double& x : theta) x = normal(rng);
        auto cache = hypertrain::detail::forward_cached(mlp, ElemParams{theta, layout}, batch.features);
        kink = 1e300;
        for (double z : cache.preactivations[0].data) kink = std::min(kink, std::fabs(z));
    } while (kink < 1e-6);
    CHECK(grad_check(f, theta, 1e-5) <= 1e-4);
}

TEST_CASE("grad_check over random losses and seeds stays within 1e-4") {
    auto rng = make_rng(23);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const ModelSpec mlp{{3, 4, 2}, LossTask::SoftmaxCrossEntropy, true};
        const auto layout = make_layout(mlp);
        Batch batch;
        batch.features = DenseMatrix(4, 3);
        for (double& v : batch.features.data) v = normal(rng);
        batch.class_labels = {0, 1, 0, 1};
        DenseVector lambda{normal(rng)};
        DiffScalarFn f = train_loss_fn(mlp, lambda, make_reg(RegMode::Global, layout), batch);
        DenseVector theta(layout.total);
        double kink;
        do {
            for (double& x : theta) x = normal(rng);
            auto cache = hypertrain::detail::forward_cached(mlp, ElemParams{theta, layout}, batch.features);
            kink = 1e300;
            for (double z : cache.preactivations[0].data) kink = std::min(kink, std::fabs(z));
        } while (kink < 1e-6);
        CHECK(grad_check(f, theta, 1e-5) <= 1e-4);
    }
}

TEST_CASE("value_and_grad is deterministic bit for bit") {
    const ModelSpec model{{3, 2}, LossTask::SoftmaxCrossEntropy, true};
    const Batch batch = ht_test::class_batch({{0.2, -1.1, 0.7}}, {1});
    DiffScalarFn f = pred_loss_fn(model, batch);
    const DenseVector theta{0.1, -0.4, 0.9, 0.2, -0.3, 0.5, 0.7, -0.8};
    auto [v1, g1] = value_and_grad(f, theta);
    auto [v2, g2] = value_and_grad(f, theta);
    CHECK(std::memcmp(&v1, &v2, sizeof v1) == 0);
    REQUIRE(g1.size() == g2.size());
    CHECK(std::memcmp(g1.data(), g2.data(), g1.size() * sizeof(double)) == 0);
}
