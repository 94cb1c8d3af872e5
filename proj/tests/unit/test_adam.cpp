// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "wtawp/adam.hpp"

using namespace wtawp;

namespace {

ModelParams scalar_params(double w) {
    ModelParams p;
    p.layers = {DenseMatrix(1, 1, w)};
    p.awp_mask = {0};
    return p;
}

GradientSet scalar_grad(double g) {
    GradientSet gs;
    gs.layers = {DenseMatrix(1, 1, g)};
    return gs;
}

}  // namespace

TEST_SUITE("adam") {

TEST_CASE("first step moves by about lr * sign(g)") {
    for (double g : {0.5, -2.0, 1e-3}) {
        AdamState st;
        auto p = scalar_params(1.0);
        adam_step(st, p, scalar_grad(g), 0.01, 0.0);
        const double moved = 1.0 - p.layers[0](0, 0);
        CHECK(moved == doctest::Approx(0.01 * (g > 0 ? 1.0 : -1.0)).epsilon(1e-4));
    }
}

TEST_CASE("zero gradient and zero weight decay leave parameters unchanged") {
    AdamState st;
    auto p = scalar_params(0.75);
    for (int i = 0; i < 5; ++i) adam_step(st, p, scalar_grad(0.0), 0.01, 0.0);
    CHECK(p.layers[0](0, 0) == 0.75);
}

TEST_CASE("two steps with constant gradient match the hand-rolled recurrence") {
    const double g = 0.3, lr = 0.1;
    AdamState st;
    auto p = scalar_params(2.0);
    adam_step(st, p, scalar_grad(g), lr, 0.0);
    adam_step(st, p, scalar_grad(g), lr, 0.0);

    // recurrence written out by hand
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    double w = 2.0, m = 0.0, v = 0.0;
    for (int t = 1; t <= 2; ++t) {
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mh = m / (1 - std::pow(b1, t));
        const double vh = v / (1 - std::pow(b2, t));
        w -= lr * mh / (std::sqrt(vh) + eps);
    }
    CHECK(p.layers[0](0, 0) == doctest::Approx(w).epsilon(1e-15));
}

TEST_CASE("coupled weight decay acts like an extra gradient term") {
    AdamState st1, st2;
    auto p1 = scalar_params(2.0);
    auto p2 = scalar_params(2.0);
    adam_step(st1, p1, scalar_grad(0.1), 0.01, 0.05);
    adam_step(st2, p2, scalar_grad(0.1 + 0.05 * 2.0), 0.01, 0.0);
    CHECK(p1.layers[0](0, 0) == p2.layers[0](0, 0));
}

TEST_CASE("shape mismatch throws") {
    AdamState st;
    auto p = scalar_params(1.0);
    GradientSet g;
    g.layers = {DenseMatrix(2, 1, 0.0)};
    CHECK_THROWS_AS(adam_step(st, p, g, 0.01, 0.0), std::invalid_argument);
}

}  // TEST_SUITE
