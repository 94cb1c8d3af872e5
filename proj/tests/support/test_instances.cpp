// SPDX-License-Identifier: Apache-2.0

#include "test_instances.hpp"

#include <algorithm>
#include <cmath>

#include "wtawp/rng.hpp"

namespace wtawp::testing {

SmallInstance make_small_instance(ModelKind kind, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0x51));
    SmallInstance inst;
    const std::size_t n = 5 + rng.uniform_index(4);        // 5..8 nodes
    const std::size_t in_dim = 2 + rng.uniform_index(3);   // 2..4
    const std::size_t hidden = 3 + rng.uniform_index(3);   // 3..5
    const std::size_t classes = 2 + rng.uniform_index(2);  // 2..3

    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (rng.uniform() < 0.45) edges.emplace_back(i, j);
        }
    }
    DenseMatrix feats(n, in_dim);
    for (double& v : feats.data) v = rng.normal();
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % classes);

    inst.graph = make_graph(n, edges, std::move(feats), std::move(labels));
    inst.adj = normalize_adjacency(inst.graph);
    inst.xc = CsrMatrix::from_dense(inst.graph.features);
    inst.spec.kind = kind;
    inst.spec.in_dim = in_dim;
    inst.spec.hidden_dim = hidden;
    inst.spec.out_dim = classes;
    inst.spec.ppnp_k = 3;
    inst.spec.ppnp_alpha = 0.2;
    inst.spec.dropout_rate = 0.5;
    inst.params = init_params(inst.spec, derive_seed(seed, 0x52));
    for (std::size_t i = 0; i < n; ++i) {
        if (rng.uniform() < 0.7) inst.node_set.push_back(i);
    }
    if (inst.node_set.empty()) inst.node_set.push_back(0);
    return inst;
}

namespace {

bool within_tol(double analytic, double fd, double rel_tol, double abs_floor, FdCheck& chk) {
    const double diff = std::abs(analytic - fd);
    const double allowed = std::max(abs_floor, rel_tol * std::max(std::abs(analytic), std::abs(fd)));
    ++chk.checked;
    if (diff > chk.worst_abs_diff) {
        chk.worst_abs_diff = diff;
        chk.worst_allowed = allowed;
    }
    return diff <= allowed;
}

}  // namespace

FdCheck fd_gradient_check(const ModelSpec& spec, const ModelParams& params,
                          const NormalizedAdjacency& adj, const CsrMatrix& features,
                          const std::vector<int>& labels, std::span<const std::size_t> node_set,
                          std::optional<std::uint64_t> dropout_seed, double weight_decay,
                          double h, double rel_tol, double abs_floor) {
    const auto lg =
        loss_and_grad(spec, params, adj, features, labels, node_set, dropout_seed, weight_decay);
    FdCheck chk;
    ModelParams probe = params;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        for (std::size_t i = 0; i < params.layers[l].data.size(); ++i) {
            const double saved = probe.layers[l].data[i];
            probe.layers[l].data[i] = saved + h;
            const double up = loss_at(spec, probe, adj, features, labels, node_set, dropout_seed,
                                      weight_decay);
            probe.layers[l].data[i] = saved - h;
            const double down = loss_at(spec, probe, adj, features, labels, node_set, dropout_seed,
                                        weight_decay);
            probe.layers[l].data[i] = saved;
            const double fd = (up - down) / (2.0 * h);
            if (!within_tol(lg.grads.layers[l].data[i], fd, rel_tol, abs_floor, chk)) chk.ok = false;
        }
    }
    return chk;
}

FdCheck fd_feature_gradient_check(const ModelSpec& spec, const ModelParams& params,
                                  const NormalizedAdjacency& adj, const DenseMatrix& features,
                                  const std::vector<int>& labels,
                                  std::span<const std::size_t> node_set, double h, double rel_tol,
                                  double abs_floor) {
    const auto g = loss_and_input_grads(spec, params, adj, CsrMatrix::from_dense(features), labels,
                                        node_set, /*want_features=*/true, /*want_adjacency=*/false);
    FdCheck chk;
    DenseMatrix probe = features;
    for (std::size_t i = 0; i < probe.data.size(); ++i) {
        const double saved = probe.data[i];
        probe.data[i] = saved + h;
        const double up = loss_at(spec, params, adj, CsrMatrix::from_dense(probe), labels, node_set,
                                  std::nullopt, 0.0);
        probe.data[i] = saved - h;
        const double down = loss_at(spec, params, adj, CsrMatrix::from_dense(probe), labels,
                                    node_set, std::nullopt, 0.0);
        probe.data[i] = saved;
        const double fd = (up - down) / (2.0 * h);
        if (!within_tol(g.d_features.data[i], fd, rel_tol, abs_floor, chk)) chk.ok = false;
    }
    return chk;
}

Graph make_sbm_graph(const SbmConfig& cfg) {
    Rng rng(derive_seed(cfg.seed, 0x53));
    std::vector<int> labels(cfg.n_nodes);
    for (std::size_t i = 0; i < cfg.n_nodes; ++i)
        labels[i] = static_cast<int>(i % cfg.n_classes);

    std::vector<Edge> edges;
    for (std::size_t i = 0; i < cfg.n_nodes; ++i) {
        for (std::size_t j = i + 1; j < cfg.n_nodes; ++j) {
            const double p = labels[i] == labels[j] ? cfg.p_in : cfg.p_out;
            if (rng.uniform() < p) edges.emplace_back(i, j);
        }
    }

    // class c owns a block of features that fire more often for its nodes
    DenseMatrix feats(cfg.n_nodes, cfg.n_features);
    const std::size_t block = cfg.n_features / cfg.n_classes;
    for (std::size_t i = 0; i < cfg.n_nodes; ++i) {
        const auto c = static_cast<std::size_t>(labels[i]);
        double row_sum = 0.0;
        for (std::size_t f = 0; f < cfg.n_features; ++f) {
            const bool in_block = block > 0 && f / block == c;
            const double p = in_block ? 5.0 * cfg.feature_density : cfg.feature_density;
            feats(i, f) = rng.uniform() < p ? 1.0 : 0.0;
            row_sum += feats(i, f);
        }
        if (row_sum > 0.0) {
            for (std::size_t f = 0; f < cfg.n_features; ++f) feats(i, f) /= row_sum;
        }
    }
    return make_graph(cfg.n_nodes, edges, std::move(feats), std::move(labels));
}

}  // namespace wtawp::testing
