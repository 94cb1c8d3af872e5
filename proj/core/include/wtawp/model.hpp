// SPDX-License-Identifier: Apache-2.0
//
// The three models (2-layer GCN, PPNP with personalized-PageRank
// propagation, 3-layer linear MLP), softmax cross-entropy over a node set,
// and exact reverse-mode gradients w.r.t. weights and inputs. Everything is
// double precision and bit-deterministic given the seeds.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "wtawp/graph.hpp"
#include "wtawp/matrix.hpp"

namespace wtawp {

enum class ModelKind { Gcn2, Ppnp, Mlp3 };

struct ModelSpec {
    ModelKind kind = ModelKind::Gcn2;
    std::size_t in_dim = 0;
    std::size_t hidden_dim = 0;
    std::size_t out_dim = 0;
    std::size_t ppnp_k = 10;     // propagation steps (PPNP only)
    double ppnp_alpha = 0.1;     // teleport weight, in (0, 1]
    double dropout_rate = 0.5;   // in [0, 1); hidden activation only

    std::size_t n_layers() const { return kind == ModelKind::Mlp3 ? 3 : 2; }
    void validate() const;
};

struct ModelParams {
    std::vector<DenseMatrix> layers;        // W_1 ... W_k
    std::vector<std::uint8_t> awp_mask;     // 1 = layer belongs to the perturbed subset

    std::size_t total_entries() const;
    /// Entrywise 2-norm of the flattened parameter vector.
    double flat_norm() const;
};

struct GradientSet {
    std::vector<DenseMatrix> layers;

    static GradientSet zeros_like(const ModelParams& p);
    double flat_norm() const;
};

/// Glorot-uniform initialization; layer i draws from its own derived
/// seed stream. awp_mask starts all-zero.
ModelParams init_params(const ModelSpec& spec, std::uint64_t seed);

/// Intermediate activations kept for the backward pass. Contents depend on
/// the model kind; treat as opaque.
struct ForwardCache {
    DenseMatrix q1;          // first linear output (pre-relu for GCN/PPNP)
    DenseMatrix p1;          // GCN2: A_hat * q1, pre-relu
    DenseMatrix hidden;      // post-relu, post-dropout hidden activation
    DenseMatrix drop_scale;  // empty when dropout is off
    DenseMatrix t;           // GCN2: hidden * W2 (pre-propagation)
    DenseMatrix q2;          // MLP3: q1 * W2
    std::vector<DenseMatrix> ppnp_zs;  // Z_0 ... Z_{K-1}
    bool training = false;
};

struct Forwarded {
    DenseMatrix logits;  // n_nodes x out_dim
    ForwardCache cache;
};

/// Z <- (1 - alpha) * A_hat * Z + alpha * H, iterated k times from Z = H.
DenseMatrix ppnp_propagate(const NormalizedAdjacency& adj, const DenseMatrix& h, std::size_t k,
                           double alpha);

/// Training mode iff dropout_seed is present.
Forwarded forward(const ModelSpec& spec, const ModelParams& params, const NormalizedAdjacency& adj,
                  const CsrMatrix& features, std::optional<std::uint64_t> dropout_seed);
Forwarded forward(const ModelSpec& spec, const ModelParams& params, const NormalizedAdjacency& adj,
                  const DenseMatrix& features, std::optional<std::uint64_t> dropout_seed);

struct LossGrad {
    double loss = 0.0;
    GradientSet grads;
};

/// Mean softmax cross-entropy over node_set, plus (weight_decay/2)*||W||^2
/// summed over all layers when weight_decay > 0. Gradients are the exact
/// analytic gradients of that total, through the cached dropout masks.
LossGrad loss_and_grad(const ModelSpec& spec, const ModelParams& params,
                       const NormalizedAdjacency& adj, const CsrMatrix& features,
                       const std::vector<int>& labels, std::span<const std::size_t> node_set,
                       std::optional<std::uint64_t> dropout_seed, double weight_decay = 0.0);
LossGrad loss_and_grad(const ModelSpec& spec, const ModelParams& params,
                       const NormalizedAdjacency& adj, const DenseMatrix& features,
                       const std::vector<int>& labels, std::span<const std::size_t> node_set,
                       std::optional<std::uint64_t> dropout_seed, double weight_decay = 0.0);

/// Same loss contract as loss_and_grad without the backward pass.
double loss_at(const ModelSpec& spec, const ModelParams& params, const NormalizedAdjacency& adj,
               const CsrMatrix& features, const std::vector<int>& labels,
               std::span<const std::size_t> node_set, std::optional<std::uint64_t> dropout_seed,
               double weight_decay = 0.0);
double loss_at(const ModelSpec& spec, const ModelParams& params, const NormalizedAdjacency& adj,
               const DenseMatrix& features, const std::vector<int>& labels,
               std::span<const std::size_t> node_set, std::optional<std::uint64_t> dropout_seed,
               double weight_decay = 0.0);

/// Mean cross-entropy from precomputed logits.
double ce_loss_from_logits(const DenseMatrix& logits, const std::vector<int>& labels,
                           std::span<const std::size_t> node_set);

/// Fraction of node_set whose argmax logit matches the label; argmax ties
/// resolve to the lowest class index.
double accuracy(const DenseMatrix& logits, const std::vector<int>& labels,
                std::span<const std::size_t> node_set);

struct InputGrads {
    double loss = 0.0;
    DenseMatrix d_features;   // filled when want_features
    CsrMatrix d_adjacency;    // pattern of adj.matrix, filled when want_adjacency
};

/// Evaluation-mode loss plus gradients w.r.t. the dense features and/or the
/// stored entries of the normalized adjacency.
InputGrads loss_and_input_grads(const ModelSpec& spec, const ModelParams& params,
                                const NormalizedAdjacency& adj, const CsrMatrix& features,
                                const std::vector<int>& labels,
                                std::span<const std::size_t> node_set, bool want_features,
                                bool want_adjacency);

}  // namespace wtawp
