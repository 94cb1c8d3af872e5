// SPDX-License-Identifier: Apache-2.0

#include "wtawp/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace wtawp {

namespace {
constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEps = 1e-8;
}  // namespace

void adam_step(AdamState& state, ModelParams& params, const GradientSet& grads, double lr,
               double weight_decay) {
    if (grads.layers.size() != params.layers.size())
        throw std::invalid_argument("adam_step: gradient/parameter layer count mismatch");
    if (state.m.empty()) {
        for (const auto& w : params.layers) {
            state.m.emplace_back(w.rows, w.cols, 0.0);
            state.v.emplace_back(w.rows, w.cols, 0.0);
        }
    }
    if (state.m.size() != params.layers.size())
        throw std::invalid_argument("adam_step: state/parameter layer count mismatch");

    state.step += 1;
    const auto t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(kBeta1, t);
    const double bc2 = 1.0 - std::pow(kBeta2, t);

    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        auto& w = params.layers[l];
        const auto& g0 = grads.layers[l];
        if (!w.same_shape(g0))
            throw std::invalid_argument("adam_step: shape mismatch at layer " + std::to_string(l + 1));
        auto& m = state.m[l];
        auto& v = state.v[l];
        for (std::size_t i = 0; i < w.data.size(); ++i) {
            const double g = g0.data[i] + weight_decay * w.data[i];
            m.data[i] = kBeta1 * m.data[i] + (1.0 - kBeta1) * g;
            v.data[i] = kBeta2 * v.data[i] + (1.0 - kBeta2) * g * g;
            const double m_hat = m.data[i] / bc1;
            const double v_hat = v.data[i] / bc2;
            w.data[i] -= lr * m_hat / (std::sqrt(v_hat) + kEps);
        }
    }
}

}  // namespace wtawp
