// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "wtawp/matrix.hpp"
#include "wtawp/model.hpp"

namespace wtawp {

/// Adam moments; single-owner mutable state, shape-matched lazily on the
/// first step.
struct AdamState {
    std::size_t step = 0;
    std::vector<DenseMatrix> m;
    std::vector<DenseMatrix> v;
};

/// One Adam update with bias correction, beta = (0.9, 0.999), eps = 1e-8.
/// Weight decay is coupled L2: wd * w is added to the gradient before the
/// moment update.
void adam_step(AdamState& state, ModelParams& params, const GradientSet& grads, double lr,
               double weight_decay);

}  // namespace wtawp
