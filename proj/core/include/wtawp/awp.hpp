// SPDX-License-Identifier: Apache-2.0
//
// Adversarial weight perturbation: the projected one-step (and multi-step
// PGD) worst-case perturbation, the weighted/truncated training objectives,
// the full-batch training loop with validation-based model selection, and
// the exact-vs-approximate gradient diagnostic.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "wtawp/graph.hpp"
#include "wtawp/model.hpp"

namespace wtawp {

struct AwpConfig {
    double rho = 0.0;       // perturbation strength; layer radius is rho * ||W_i||
    double lambda = 0.0;    // weight of the perturbed-loss term, in [0, 1]
    std::size_t pgd_steps = 1;
    double pgd_lr = 0.2;    // ascent step size, used only when pgd_steps > 1
    std::vector<std::uint8_t> perturb_layers;  // empty = first layer only

    void validate() const;
};

/// Per-layer booleans from the config; empty selects the first layer only.
std::vector<std::uint8_t> resolve_awp_mask(const AwpConfig& cfg, std::size_t n_layers);

struct TrainConfig {
    std::size_t epochs = 200;
    double lr = 0.01;
    double weight_decay = 5e-4;
    std::size_t hidden_dim = 64;  // consumed when building the ModelSpec
    double dropout = 0.5;         // consumed when building the ModelSpec
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrainReport {
    std::vector<double> train_loss;     // vanilla loss at theta, per epoch
    std::vector<double> awp_loss;       // perturbed-term loss (NaN for vanilla runs)
    std::vector<double> rel_grad_norm;  // ||g||_2 / ||theta||_2 of the update gradient
    std::vector<double> val_acc;
    std::size_t best_epoch = 0;         // epoch with the highest validation accuracy
    double test_acc = 0.0;              // at the best-validation epoch
    double wall_seconds = 0.0;
};

/// r_i = rho * ||W_i||_2 (entrywise norm of the flattened layer), 0 for
/// layers outside params.awp_mask.
std::vector<double> layer_radii(const ModelParams& params, double rho);

/// Per layer: rescale onto the sphere of radius radii[i] when the layer's
/// norm exceeds it; a zero radius forces the layer to exact zero.
void project_to_ball(GradientSet& delta, std::span<const double> radii);

/// The approximate worst-case perturbation (one-step projected gradient,
/// or pgd_steps ascent iterations with a single final projection).
/// Unperturbed layers carry exactly zero.
GradientSet compute_perturbation(const ModelSpec& spec, const ModelParams& params,
                                 const NormalizedAdjacency& adj, const CsrMatrix& features,
                                 const std::vector<int>& labels,
                                 std::span<const std::size_t> node_set, const AwpConfig& cfg,
                                 std::optional<std::uint64_t> dropout_seed);

struct WtawpResult {
    double loss = 0.0;        // lambda * L(theta + [delta, 0]) + (1 - lambda) * L(theta)
    GradientSet grads;        // first-order gradient of that combination
    double base_loss = 0.0;       // L(theta)
    double perturbed_loss = 0.0;  // L(theta + [delta, 0])
};

/// The WT-AWP objective. lambda = 0 or rho = 0 short-circuits to the
/// vanilla loss/grad (bit-identical, same dropout stream). The base term
/// uses dropout_seed directly; the perturbation and the perturbed term use
/// independently derived streams.
WtawpResult wtawp_loss_and_grad(const ModelSpec& spec, const ModelParams& params,
                                const NormalizedAdjacency& adj, const CsrMatrix& features,
                                const std::vector<int>& labels,
                                std::span<const std::size_t> node_set, const AwpConfig& cfg,
                                std::optional<std::uint64_t> dropout_seed);

struct TrainResult {
    ModelParams params;  // parameters from the best-validation epoch
    TrainReport report;
};

/// Full-batch training with Adam; WT-AWP objective when awp_cfg is present,
/// plain cross-entropy otherwise. Deterministic given cfg.seed. Throws
/// std::runtime_error naming the epoch if the loss turns non-finite.
TrainResult train(const ModelSpec& spec, const Graph& graph, const Split& split,
                  const TrainConfig& cfg, const std::optional<AwpConfig>& awp_cfg);

struct GradientGap {
    GradientSet exact_grad;   // finite differences of theta -> L(theta + delta*(theta))
    GradientSet approx_grad;  // gradient of L at theta + delta*(theta)
    double gap_norm = 0.0;
};

/// Compares the exact gradient of the composite AWP objective (central
/// finite differences over every weight entry, step probe_eps) with the
/// first-order approximation that drops the perturbation Jacobian.
/// Dropout-free by construction; weight_decay, when nonzero, is part of the
/// objective. Instances above max_entries parameters are rejected.
GradientGap exact_vs_approx_gradient_gap(const ModelSpec& spec, const ModelParams& params,
                                         const NormalizedAdjacency& adj, const CsrMatrix& features,
                                         const std::vector<int>& labels,
                                         std::span<const std::size_t> node_set,
                                         const AwpConfig& cfg, double probe_eps,
                                         double weight_decay = 0.0,
                                         std::size_t max_entries = 4096);

}  // namespace wtawp
