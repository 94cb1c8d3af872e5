// SPDX-License-Identifier: Apache-2.0
//
// Flatness and generalization diagnostics: random-direction loss-landscape
// slices, input-gradient smoothness, generalization gap with sampled
// sharpness, the computable terms of the PAC-Bayes bound, and Welch's
// t-test for paired comparisons.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wtawp/graph.hpp"
#include "wtawp/model.hpp"

namespace wtawp {

struct LandscapeProbe {
    std::vector<double> alphas;
    std::size_t n_directions = 10;
    std::uint64_t seed = 0;
};

struct LandscapeSlice {
    std::vector<double> alphas;
    DenseMatrix losses;             // |alphas| x n_directions
    std::vector<double> mean_loss;  // per alpha, averaged over directions
    double base_loss = 0.0;         // L(theta), for offset-aligned curves
};

/// Gaussian direction over all parameter entries, normalized to unit
/// 2-norm of the flattened vector.
std::vector<DenseMatrix> random_unit_direction(const ModelParams& params, std::uint64_t seed);

/// L_train(theta + alpha * u_j) for unit-norm Gaussian directions u_j over
/// the flattened parameter vector; direction j uses the probe seed's j-th
/// derived stream. Evaluation mode (no dropout).
LandscapeSlice landscape_slice(const ModelSpec& spec, const ModelParams& params,
                               const NormalizedAdjacency& adj, const CsrMatrix& features,
                               const std::vector<int>& labels,
                               std::span<const std::size_t> node_set, const LandscapeProbe& probe);

struct SmoothnessConfig {
    double noise_std = 0.0005;
    std::size_t n_samples = 100;
    enum class Target { Features, NormalizedAdjacencyEntries } target = Target::Features;
    std::uint64_t seed = 0;
};

/// Mean L2 norm, over n_samples Gaussian draws around the clean input, of
/// the loss gradient w.r.t. the chosen input. Adjacency gradients are taken
/// w.r.t. the stored entries of the normalized adjacency.
double input_gradient_smoothness(const ModelSpec& spec, const ModelParams& params,
                                 const NormalizedAdjacency& adj, const DenseMatrix& features,
                                 const std::vector<int>& labels,
                                 std::span<const std::size_t> node_set,
                                 const SmoothnessConfig& cfg);

struct GeneralizationGap {
    double train_loss = 0.0;
    double all_nodes_loss = 0.0;
    double gap = 0.0;        // all_nodes_loss - train_loss
    double sharpness = 0.0;  // sampled lower bound of max ||delta_i|| = rho ||W_i|| rise
};

GeneralizationGap generalization_gap(const ModelSpec& spec, const ModelParams& params,
                                     const NormalizedAdjacency& adj, const CsrMatrix& features,
                                     const std::vector<int>& labels, const Split& split,
                                     double rho, std::size_t n_samples = 20,
                                     std::uint64_t seed = 0);

struct BoundConfig {
    double m = 0.0;                 // must satisfy m >= sqrt(d)
    double confidence_delta = 0.05; // in (0, 1)
    double rho = 1.0;               // > 0
    std::size_t sharpness_samples = 20;
    std::uint64_t seed = 0;
};

struct BoundReport {
    double sharpness_estimate = 0.0;  // sampled lower bound
    double chi_tail_term = 0.0;       // (m^2/d * e^{1 - m^2/d})^{d/2}
    double kl_term = 0.0;             // 1/(2 sqrt(N0)) [1 + d log(1 + m^2 ||theta||^2 / (d rho^2))]
    double confidence_term = 0.0;     // 1/sqrt(N0) (ln(3/delta) + 1/4)
    bool omitted_constant_note = true;  // Theta(K * eps_all) is not computable
    std::size_t d = 0;
    std::size_t n0 = 0;
};

/// The computable right-hand-side terms of the generalization bound.
/// Throws std::invalid_argument when m < sqrt(d).
BoundReport bound_terms(const ModelSpec& spec, const ModelParams& params,
                        const NormalizedAdjacency& adj, const CsrMatrix& features,
                        const std::vector<int>& labels, const Split& split,
                        const BoundConfig& cfg);

struct WelchResult {
    double t = 0.0;
    double p_two_sided = 1.0;
    double dof = 0.0;
};

/// Welch's unequal-variance t-test with Welch-Satterthwaite degrees of
/// freedom. Requires both samples of size >= 2 and nonzero variance in at
/// least one.
WelchResult welch_t_test(std::span<const double> sample_a, std::span<const double> sample_b);

/// Regularized incomplete beta function I_x(a, b); exposed because the
/// t-distribution tail is computed through it.
double regularized_incomplete_beta(double a, double b, double x);

}  // namespace wtawp
