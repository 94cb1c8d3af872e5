// SPDX-License-Identifier: Apache-2.0

#include "wtawp/awp.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "wtawp/adam.hpp"
#include "wtawp/rng.hpp"

namespace wtawp {

void AwpConfig::validate() const {
    if (rho < 0.0) throw std::invalid_argument("awp config: rho must be >= 0");
    if (lambda < 0.0 || lambda > 1.0)
        throw std::invalid_argument("awp config: lambda must be in [0, 1]");
    if (pgd_steps < 1) throw std::invalid_argument("awp config: pgd_steps must be >= 1");
    if (pgd_steps > 1 && pgd_lr <= 0.0)
        throw std::invalid_argument("awp config: pgd_lr must be > 0 for multi-step PGD");
}

void TrainConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
    if (lr <= 0.0) throw std::invalid_argument("train config: lr must be > 0");
    if (weight_decay < 0.0) throw std::invalid_argument("train config: weight_decay must be >= 0");
    if (dropout < 0.0 || dropout >= 1.0)
        throw std::invalid_argument("train config: dropout must be in [0, 1)");
}

std::vector<std::uint8_t> resolve_awp_mask(const AwpConfig& cfg, std::size_t n_layers) {
    if (cfg.perturb_layers.empty()) {
        std::vector<std::uint8_t> mask(n_layers, 0);
        mask[0] = 1;
        return mask;
    }
    if (cfg.perturb_layers.size() != n_layers)
        throw std::invalid_argument("awp config: perturb_layers length must equal layer count");
    return cfg.perturb_layers;
}

std::vector<double> layer_radii(const ModelParams& params, double rho) {
    if (rho < 0.0) throw std::invalid_argument("layer_radii: rho must be >= 0");
    if (params.awp_mask.size() != params.layers.size())
        throw std::invalid_argument("layer_radii: awp_mask length mismatch");
    std::vector<double> radii(params.layers.size(), 0.0);
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
        if (params.awp_mask[i]) radii[i] = rho * frobenius_norm(params.layers[i]);
    }
    return radii;
}

void project_to_ball(GradientSet& delta, std::span<const double> radii) {
    if (radii.size() != delta.layers.size())
        throw std::invalid_argument("project_to_ball: radii length mismatch");
    for (std::size_t i = 0; i < delta.layers.size(); ++i) {
        auto& d = delta.layers[i];
        const double r = radii[i];
        if (r <= 0.0) {
            d.fill(0.0);
            continue;
        }
        const double norm = frobenius_norm(d);
        if (norm > r) scale(d, r / norm);
    }
}

namespace {

ModelParams add_perturbation(const ModelParams& params, const GradientSet& delta) {
    ModelParams out = params;
    for (std::size_t i = 0; i < out.layers.size(); ++i) axpy(1.0, delta.layers[i], out.layers[i]);
    return out;
}

std::optional<std::uint64_t> child_seed(std::optional<std::uint64_t> seed, std::uint64_t stream) {
    if (!seed) return std::nullopt;
    return derive_seed(*seed, stream);
}

}  // namespace

GradientSet compute_perturbation(const ModelSpec& spec, const ModelParams& params,
                                 const NormalizedAdjacency& adj, const CsrMatrix& features,
                                 const std::vector<int>& labels,
                                 std::span<const std::size_t> node_set, const AwpConfig& cfg,
                                 std::optional<std::uint64_t> dropout_seed) {
    cfg.validate();
    const auto radii = layer_radii(params, cfg.rho);
    if (cfg.pgd_steps == 1) {
        auto lg = loss_and_grad(spec, params, adj, features, labels, node_set,
                                child_seed(dropout_seed, 0xA0), 0.0);
        project_to_ball(lg.grads, radii);
        return std::move(lg.grads);
    }
    // multi-step ascent; the projection happens once, after the last step
    GradientSet delta = GradientSet::zeros_like(params);
    for (std::size_t s = 0; s < cfg.pgd_steps; ++s) {
        const ModelParams probe = add_perturbation(params, delta);
        auto lg = loss_and_grad(spec, probe, adj, features, labels, node_set,
                                child_seed(dropout_seed, 0xA0 + s), 0.0);
        for (std::size_t i = 0; i < delta.layers.size(); ++i) {
            if (params.awp_mask[i]) axpy(cfg.pgd_lr, lg.grads.layers[i], delta.layers[i]);
        }
    }
    project_to_ball(delta, radii);
    return delta;
}

WtawpResult wtawp_loss_and_grad(const ModelSpec& spec, const ModelParams& params,
                                const NormalizedAdjacency& adj, const CsrMatrix& features,
                                const std::vector<int>& labels,
                                std::span<const std::size_t> node_set, const AwpConfig& cfg,
                                std::optional<std::uint64_t> dropout_seed) {
    cfg.validate();
    WtawpResult out;
    if (cfg.lambda == 0.0 || cfg.rho == 0.0) {
        auto lg = loss_and_grad(spec, params, adj, features, labels, node_set, dropout_seed, 0.0);
        out.loss = lg.loss;
        out.base_loss = lg.loss;
        out.perturbed_loss = lg.loss;
        out.grads = std::move(lg.grads);
        return out;
    }

    const GradientSet delta = compute_perturbation(spec, params, adj, features, labels, node_set,
                                                   cfg, child_seed(dropout_seed, 1));
    const ModelParams perturbed = add_perturbation(params, delta);
    auto pert = loss_and_grad(spec, perturbed, adj, features, labels, node_set,
                              child_seed(dropout_seed, 2), 0.0);
    out.perturbed_loss = pert.loss;

    if (cfg.lambda == 1.0) {
        out.base_loss =
            loss_at(spec, params, adj, features, labels, node_set, dropout_seed, 0.0);
        out.loss = pert.loss;
        out.grads = std::move(pert.grads);
        return out;
    }

    auto base = loss_and_grad(spec, params, adj, features, labels, node_set, dropout_seed, 0.0);
    out.base_loss = base.loss;
    out.loss = cfg.lambda * pert.loss + (1.0 - cfg.lambda) * base.loss;
    out.grads = std::move(base.grads);
    for (std::size_t i = 0; i < out.grads.layers.size(); ++i) {
        scale(out.grads.layers[i], 1.0 - cfg.lambda);
        axpy(cfg.lambda, pert.grads.layers[i], out.grads.layers[i]);
    }
    return out;
}

TrainResult train(const ModelSpec& spec, const Graph& graph, const Split& split,
                  const TrainConfig& cfg, const std::optional<AwpConfig>& awp_cfg) {
    const auto t_start = std::chrono::steady_clock::now();
    cfg.validate();
    spec.validate();
    if (split.train_ids.empty() || split.val_ids.empty() || split.test_ids.empty())
        throw std::invalid_argument("train: split has an empty part");

    const NormalizedAdjacency adj = normalize_adjacency(graph);
    const CsrMatrix xc = CsrMatrix::from_dense(graph.features);

    ModelParams params = init_params(spec, derive_seed(cfg.seed, /*stream=*/11));
    if (awp_cfg) {
        awp_cfg->validate();
        params.awp_mask = resolve_awp_mask(*awp_cfg, params.layers.size());
    }

    AdamState opt;
    TrainResult result;
    TrainReport& rep = result.report;
    rep.train_loss.reserve(cfg.epochs);
    rep.awp_loss.reserve(cfg.epochs);
    rep.rel_grad_norm.reserve(cfg.epochs);
    rep.val_acc.reserve(cfg.epochs);

    double best_val = -1.0;
    const std::uint64_t dropout_root = derive_seed(cfg.seed, /*stream=*/12);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        try {
            const std::uint64_t epoch_seed = derive_seed(dropout_root, epoch);
            double loss = 0.0;
            double base_loss = 0.0;
            double pert_loss = std::numeric_limits<double>::quiet_NaN();
            GradientSet grads;
            if (awp_cfg) {
                auto r = wtawp_loss_and_grad(spec, params, adj, xc, graph.labels, split.train_ids,
                                             *awp_cfg, epoch_seed);
                loss = r.loss;
                base_loss = r.base_loss;
                pert_loss = r.perturbed_loss;
                grads = std::move(r.grads);
            } else {
                auto r = loss_and_grad(spec, params, adj, xc, graph.labels, split.train_ids,
                                       epoch_seed, 0.0);
                loss = r.loss;
                base_loss = r.loss;
                grads = std::move(r.grads);
            }
            if (!std::isfinite(loss)) throw std::runtime_error("non-finite training loss");

            const double theta_norm = params.flat_norm();
            rep.rel_grad_norm.push_back(theta_norm > 0.0 ? grads.flat_norm() / theta_norm : 0.0);
            rep.train_loss.push_back(base_loss);
            rep.awp_loss.push_back(pert_loss);

            adam_step(opt, params, grads, cfg.lr, cfg.weight_decay);

            const Forwarded eval = forward(spec, params, adj, xc, std::nullopt);
            const double va = accuracy(eval.logits, graph.labels, split.val_ids);
            rep.val_acc.push_back(va);
            if (va > best_val) {
                best_val = va;
                rep.best_epoch = epoch;
                result.params = params;
            }
        } catch (const std::runtime_error& e) {
            throw std::runtime_error("epoch " + std::to_string(epoch) + ": " + e.what());
        }
    }

    const Forwarded final_eval = forward(spec, result.params, adj, xc, std::nullopt);
    rep.test_acc = accuracy(final_eval.logits, graph.labels, split.test_ids);
    rep.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return result;
}

GradientGap exact_vs_approx_gradient_gap(const ModelSpec& spec, const ModelParams& params,
                                         const NormalizedAdjacency& adj, const CsrMatrix& features,
                                         const std::vector<int>& labels,
                                         std::span<const std::size_t> node_set,
                                         const AwpConfig& cfg, double probe_eps,
                                         double weight_decay, std::size_t max_entries) {
    cfg.validate();
    if (probe_eps <= 0.0) throw std::invalid_argument("gradient gap: probe_eps must be > 0");
    if (params.total_entries() > max_entries)
        throw std::invalid_argument("gradient gap: instance has " +
                                    std::to_string(params.total_entries()) +
                                    " entries, cap is " + std::to_string(max_entries));

    const auto composite_loss = [&](const ModelParams& p) {
        const GradientSet delta =
            compute_perturbation(spec, p, adj, features, labels, node_set, cfg, std::nullopt);
        return loss_at(spec, add_perturbation(p, delta), adj, features, labels, node_set,
                       std::nullopt, weight_decay);
    };

    GradientGap out;
    {
        const GradientSet delta =
            compute_perturbation(spec, params, adj, features, labels, node_set, cfg, std::nullopt);
        auto lg = loss_and_grad(spec, add_perturbation(params, delta), adj, features, labels,
                                node_set, std::nullopt, weight_decay);
        out.approx_grad = std::move(lg.grads);
    }

    out.exact_grad = GradientSet::zeros_like(params);
    ModelParams probe = params;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        for (std::size_t i = 0; i < params.layers[l].data.size(); ++i) {
            const double saved = probe.layers[l].data[i];
            probe.layers[l].data[i] = saved + probe_eps;
            const double up = composite_loss(probe);
            probe.layers[l].data[i] = saved - probe_eps;
            const double down = composite_loss(probe);
            probe.layers[l].data[i] = saved;
            out.exact_grad.layers[l].data[i] = (up - down) / (2.0 * probe_eps);
        }
    }

    double acc = 0.0;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        for (std::size_t i = 0; i < params.layers[l].data.size(); ++i) {
            const double diff = out.exact_grad.layers[l].data[i] - out.approx_grad.layers[l].data[i];
            acc += diff * diff;
        }
    }
    out.gap_norm = std::sqrt(acc);
    return out;
}

}  // namespace wtawp
