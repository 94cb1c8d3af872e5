// SPDX-License-Identifier: Apache-2.0
//
// Input-perturbation adversaries for robustness evaluation: the DICE
// heuristic ("delete internally, connect externally"), a uniform random-flip
// baseline, and the evasion / poisoning protocols.

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "wtawp/awp.hpp"
#include "wtawp/graph.hpp"
#include "wtawp/model.hpp"

namespace wtawp {

enum class AttackKind { Dice, RandomFlip };

struct AttackSpec {
    AttackKind kind = AttackKind::Dice;
    double budget_fraction = 0.05;  // fraction of existing undirected edges, in (0, 1)
    std::uint64_t seed = 0;

    void validate() const;
};

struct PerturbedGraph {
    Graph graph;
    std::vector<Edge> added_edges;    // disjoint from the original edge set
    std::vector<Edge> removed_edges;  // subset of the original edge set
};

/// floor(budget_fraction * |E|) flips. Each flip tosses a fair coin between
/// removing a uniformly chosen intra-class edge and inserting a uniformly
/// chosen absent inter-class pair; an exhausted pool falls back to the
/// other flip type.
PerturbedGraph dice_attack(const Graph& g, const AttackSpec& spec);

/// floor(budget_fraction * |E|) flips over distinct unordered pairs chosen
/// uniformly at random; flipping toggles edge presence.
PerturbedGraph random_flip(const Graph& g, const AttackSpec& spec);

struct EvasionResult {
    double clean_acc = 0.0;
    double attacked_acc = 0.0;
};

/// Test-set accuracy of a fixed trained model on the clean and the attacked
/// graph (evaluation mode).
EvasionResult evaluate_evasion(const ModelSpec& spec, const ModelParams& trained,
                               const Graph& clean, const Graph& attacked, const Split& split);

struct PoisoningResult {
    double attacked_acc = 0.0;
};

/// Trains a fresh model on the attacked graph and reports test accuracy.
PoisoningResult evaluate_poisoning(const ModelSpec& spec, const Graph& clean,
                                   const Graph& attacked, const Split& split,
                                   const TrainConfig& train_cfg,
                                   const std::optional<AwpConfig>& awp_cfg);

}  // namespace wtawp
