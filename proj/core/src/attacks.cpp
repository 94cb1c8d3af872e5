// SPDX-License-Identifier: Apache-2.0

#include "wtawp/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wtawp/rng.hpp"

namespace wtawp {

void AttackSpec::validate() const {
    if (!(budget_fraction > 0.0 && budget_fraction < 1.0))
        throw std::invalid_argument("attack spec: budget_fraction must be in (0, 1)");
}

namespace {

Graph rebuild_with_edges(const Graph& g, const std::vector<Edge>& edges) {
    return make_graph(g.n_nodes, edges, g.features, g.labels);
}

std::size_t flip_budget(const Graph& g, const AttackSpec& spec) {
    return static_cast<std::size_t>(
        std::floor(spec.budget_fraction * static_cast<double>(g.n_edges())));
}

/// Uniform swap-pop draw from a candidate pool.
Edge draw(std::vector<Edge>& pool, Rng& rng) {
    const std::size_t i = rng.uniform_index(pool.size());
    std::swap(pool[i], pool.back());
    const Edge e = pool.back();
    pool.pop_back();
    return e;
}

}  // namespace

PerturbedGraph dice_attack(const Graph& g, const AttackSpec& spec) {
    spec.validate();
    g.validate();
    const std::size_t budget = flip_budget(g, spec);

    // Removal pool: existing intra-class edges. Insertion pool: absent
    // inter-class pairs. The two pools are disjoint under the DICE
    // constraints, so flips never interact.
    std::vector<Edge> removable;
    for (const auto& e : g.edge_list()) {
        if (g.labels[e.first] == g.labels[e.second]) removable.push_back(e);
    }
    std::vector<Edge> insertable;
    for (std::size_t i = 0; i < g.n_nodes; ++i) {
        for (std::size_t j = i + 1; j < g.n_nodes; ++j) {
            if (g.labels[i] != g.labels[j] && !g.adjacency.has_entry(i, j)) {
                insertable.emplace_back(i, j);
            }
        }
    }
    if (removable.empty() && insertable.empty())
        throw std::runtime_error("dice attack: no intra-class edge and no absent inter-class pair");

    PerturbedGraph out;
    Rng rng(derive_seed(spec.seed, /*stream=*/21));
    for (std::size_t f = 0; f < budget; ++f) {
        bool remove = rng.bernoulli(0.5);
        if (remove && removable.empty()) remove = false;
        if (!remove && insertable.empty()) {
            if (removable.empty())
                throw std::runtime_error("dice attack: both candidate pools exhausted");
            remove = true;
        }
        if (remove) {
            out.removed_edges.push_back(draw(removable, rng));
        } else {
            out.added_edges.push_back(draw(insertable, rng));
        }
    }

    auto edges = g.edge_list();
    for (const auto& r : out.removed_edges) {
        edges.erase(std::find(edges.begin(), edges.end(), r));
    }
    edges.insert(edges.end(), out.added_edges.begin(), out.added_edges.end());
    out.graph = rebuild_with_edges(g, edges);
    return out;
}

PerturbedGraph random_flip(const Graph& g, const AttackSpec& spec) {
    spec.validate();
    g.validate();
    const std::size_t budget = flip_budget(g, spec);
    const std::size_t n = g.n_nodes;
    const std::size_t n_pairs = n * (n - 1) / 2;
    if (budget > n_pairs) throw std::runtime_error("random flip: budget exceeds pair count");

    PerturbedGraph out;
    Rng rng(derive_seed(spec.seed, /*stream=*/22));
    std::vector<Edge> chosen;
    while (chosen.size() < budget) {
        std::size_t i = rng.uniform_index(n);
        std::size_t j = rng.uniform_index(n);
        if (i == j) continue;
        const Edge e{std::min(i, j), std::max(i, j)};
        if (std::find(chosen.begin(), chosen.end(), e) != chosen.end()) continue;
        chosen.push_back(e);
    }
    auto edges = g.edge_list();
    for (const auto& e : chosen) {
        const auto it = std::find(edges.begin(), edges.end(), e);
        if (it != edges.end()) {
            edges.erase(it);
            out.removed_edges.push_back(e);
        } else {
            edges.push_back(e);
            out.added_edges.push_back(e);
        }
    }
    out.graph = rebuild_with_edges(g, edges);
    return out;
}

EvasionResult evaluate_evasion(const ModelSpec& spec, const ModelParams& trained,
                               const Graph& clean, const Graph& attacked, const Split& split) {
    if (clean.n_nodes != attacked.n_nodes)
        throw std::invalid_argument("evaluate_evasion: node count mismatch");
    EvasionResult r;
    {
        const auto adj = normalize_adjacency(clean);
        const auto fwd = forward(spec, trained, adj, clean.features, std::nullopt);
        r.clean_acc = accuracy(fwd.logits, clean.labels, split.test_ids);
    }
    {
        const auto adj = normalize_adjacency(attacked);
        const auto fwd = forward(spec, trained, adj, attacked.features, std::nullopt);
        r.attacked_acc = accuracy(fwd.logits, attacked.labels, split.test_ids);
    }
    return r;
}

PoisoningResult evaluate_poisoning(const ModelSpec& spec, const Graph& clean,
                                   const Graph& attacked, const Split& split,
                                   const TrainConfig& train_cfg,
                                   const std::optional<AwpConfig>& awp_cfg) {
    if (clean.n_nodes != attacked.n_nodes)
        throw std::invalid_argument("evaluate_poisoning: node count mismatch");
    const auto result = train(spec, attacked, split, train_cfg, awp_cfg);
    return PoisoningResult{result.report.test_acc};
}

}  // namespace wtawp
