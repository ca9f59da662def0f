#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "hypertrain/optim.hpp"

using namespace hypertrain;

TEST_CASE("adam: zero gradient from a fresh state leaves params unchanged") {
    AdamState s = make_adam(3, 0.1);
    const DenseVector params{1.0, -2.0, 0.5};
    auto [p, s2] = adam_step(s, params, {0.0, 0.0, 0.0});
    CHECK(p == params);
    CHECK(s2.t == 1);
}

TEST_CASE("adam: first step is approximately -alpha * sign(g)") {
    // bias correction makes mhat = g and vhat = g^2 at t = 1
    AdamState s = make_adam(4, 0.01);
    const DenseVector g{3.0, -0.2, 1e-3, -40.0};
    auto [p, s2] = adam_step(s, {0.0, 0.0, 0.0, 0.0}, g);
    for (std::size_t i = 0; i < 4; ++i) {
        const double want = -0.01 * g[i] / (std::fabs(g[i]) + 1e-8);
        CHECK(p[i] == Catch::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("adam: identical runs give identical trajectories") {
    auto run = [] {
        AdamState s = make_adam(2, 0.05);
        DenseVector p{0.3, -0.4};
        for (int t = 0; t < 25; ++t) {
            const DenseVector g{2.0 * p[0], 2.0 * p[1] + 0.1};
            auto [np, ns] = adam_step(std::move(s), std::move(p), g);
            p = std::move(np);
            s = std::move(ns);
        }
        return p;
    };
    CHECK(run() == run());
}

TEST_CASE("adam with beta1 = beta2 = 0 reduces to sign-SGD scaled by alpha") {
    AdamState s = make_adam(3, 0.2, 0.0, 0.0);
    const DenseVector g{5.0, -0.01, 0.0};
    auto [p, s2] = adam_step(s, {1.0, 1.0, 1.0}, g);
    CHECK(p[0] == Catch::Approx(1.0 - 0.2).epsilon(1e-7));
    CHECK(p[1] == Catch::Approx(1.0 + 0.2).epsilon(1e-5));
    CHECK(p[2] == 1.0);

    auto [p2, s3] = adam_step(s2, p, g);
    CHECK(p2[0] == Catch::Approx(p[0] - 0.2).epsilon(1e-7));
}

TEST_CASE("adam rejects length mismatches") {
    AdamState s = make_adam(2, 0.1);
    CHECK_THROWS_AS(adam_step(s, {1.0, 2.0}, {1.0}), ShapeError);
    CHECK_THROWS_AS(adam_step(s, {1.0}, {1.0}), ShapeError);
}

TEST_CASE("sgd: alpha = 0 is a no-op; quadratic hand example; contraction") {
    CHECK(sgd_step({0.0}, {1.0, 2.0}, {5.0, -3.0}) == DenseVector{1.0, 2.0});

    // f(x) = x^2, grad = 2x, x = 1, alpha = 0.1 -> 0.8
    CHECK(sgd_step({0.1}, {1.0}, {2.0}) == DenseVector{0.8});

    // |x_{t+1}| < |x_t| on f(x) = x^2 whenever alpha < 2 / curvature = 1
    double x = 1.0;
    for (double alpha : {0.05, 0.3, 0.9}) {
        x = 1.0;
        for (int t = 0; t < 10; ++t) {
            const double next = sgd_step({alpha}, {x}, {2.0 * x})[0];
            CHECK(std::fabs(next) < std::fabs(x) + 1e-15);
            x = next;
        }
    }
    CHECK_THROWS_AS(sgd_step({0.1}, {1.0, 2.0}, {1.0}), ShapeError);
}

TEST_CASE("optimizer updates are pure functions of their inputs") {
    AdamState s = make_adam(2, 0.1);
    const DenseVector params{0.5, -0.5};
    const DenseVector grad{1.0, 2.0};
    auto [p1, s1] = adam_step(s, params, grad);
    auto [p2, s2] = adam_step(s, params, grad);
    CHECK(p1 == p2);
    CHECK(s1.m == s2.m);
    CHECK(s1.v == s2.v);
    CHECK(s1.t == s2.t);
}
