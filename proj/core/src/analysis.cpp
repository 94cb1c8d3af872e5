// SPDX-License-Identifier: Apache-2.0

#include "wtawp/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "wtawp/rng.hpp"

namespace wtawp {

namespace {

ModelParams offset_params(const ModelParams& params, const std::vector<DenseMatrix>& direction,
                          double alpha) {
    ModelParams out = params;
    for (std::size_t l = 0; l < out.layers.size(); ++l) {
        for (std::size_t i = 0; i < out.layers[l].data.size(); ++i) {
            out.layers[l].data[i] += alpha * direction[l].data[i];
        }
    }
    return out;
}

}  // namespace

std::vector<DenseMatrix> random_unit_direction(const ModelParams& params, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<DenseMatrix> dir;
    dir.reserve(params.layers.size());
    double sq = 0.0;
    for (const auto& w : params.layers) {
        DenseMatrix d(w.rows, w.cols);
        for (double& v : d.data) {
            v = rng.normal();
            sq += v * v;
        }
        dir.push_back(std::move(d));
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (auto& d : dir) scale(d, inv);
    return dir;
}

LandscapeSlice landscape_slice(const ModelSpec& spec, const ModelParams& params,
                               const NormalizedAdjacency& adj, const CsrMatrix& features,
                               const std::vector<int>& labels,
                               std::span<const std::size_t> node_set,
                               const LandscapeProbe& probe) {
    if (probe.n_directions < 1)
        throw std::invalid_argument("landscape: n_directions must be >= 1");
    for (double a : probe.alphas) {
        if (!std::isfinite(a)) throw std::invalid_argument("landscape: non-finite alpha");
    }
    LandscapeSlice out;
    out.alphas = probe.alphas;
    out.losses = DenseMatrix(probe.alphas.size(), probe.n_directions);
    out.base_loss =
        loss_at(spec, params, adj, features, labels, node_set, std::nullopt, 0.0);
    for (std::size_t j = 0; j < probe.n_directions; ++j) {
        const auto dir = random_unit_direction(params, derive_seed(probe.seed, j));
        for (std::size_t ai = 0; ai < probe.alphas.size(); ++ai) {
            const ModelParams p = offset_params(params, dir, probe.alphas[ai]);
            out.losses(ai, j) =
                loss_at(spec, p, adj, features, labels, node_set, std::nullopt, 0.0);
        }
    }
    out.mean_loss.resize(probe.alphas.size());
    for (std::size_t ai = 0; ai < probe.alphas.size(); ++ai) {
        double s = 0.0;
        for (std::size_t j = 0; j < probe.n_directions; ++j) s += out.losses(ai, j);
        out.mean_loss[ai] = s / static_cast<double>(probe.n_directions);
    }
    return out;
}

double input_gradient_smoothness(const ModelSpec& spec, const ModelParams& params,
                                 const NormalizedAdjacency& adj, const DenseMatrix& features,
                                 const std::vector<int>& labels,
                                 std::span<const std::size_t> node_set,
                                 const SmoothnessConfig& cfg) {
    if (cfg.n_samples < 1) throw std::invalid_argument("smoothness: n_samples must be >= 1");
    if (cfg.noise_std < 0.0) throw std::invalid_argument("smoothness: noise_std must be >= 0");
    double acc = 0.0;
    for (std::size_t s = 0; s < cfg.n_samples; ++s) {
        Rng rng(derive_seed(cfg.seed, s));
        if (cfg.target == SmoothnessConfig::Target::Features) {
            DenseMatrix noisy = features;
            for (double& v : noisy.data) v += cfg.noise_std * rng.normal();
            const auto g = loss_and_input_grads(spec, params, adj, CsrMatrix::from_dense(noisy),
                                                labels, node_set, /*want_features=*/true,
                                                /*want_adjacency=*/false);
            acc += frobenius_norm(g.d_features);
        } else {
            NormalizedAdjacency noisy{adj.matrix};
            for (double& v : noisy.matrix.values) v += cfg.noise_std * rng.normal();
            const auto g = loss_and_input_grads(spec, params, noisy,
                                                CsrMatrix::from_dense(features), labels, node_set,
                                                /*want_features=*/false, /*want_adjacency=*/true);
            double sq = 0.0;
            for (double v : g.d_adjacency.values) sq += v * v;
            acc += std::sqrt(sq);
        }
    }
    return acc / static_cast<double>(cfg.n_samples);
}

namespace {

/// Per-layer Gaussian perturbation scaled onto the sphere ||delta_i|| =
/// rho * ||W_i||. Layers with zero norm stay zero.
ModelParams surface_perturbed(const ModelParams& params, double rho, Rng& rng) {
    ModelParams out = params;
    for (std::size_t l = 0; l < out.layers.size(); ++l) {
        DenseMatrix d(out.layers[l].rows, out.layers[l].cols);
        double sq = 0.0;
        for (double& v : d.data) {
            v = rng.normal();
            sq += v * v;
        }
        const double target = rho * frobenius_norm(params.layers[l]);
        if (sq > 0.0 && target > 0.0) {
            const double f = target / std::sqrt(sq);
            for (std::size_t i = 0; i < d.data.size(); ++i) out.layers[l].data[i] += f * d.data[i];
        }
    }
    return out;
}

}  // namespace

GeneralizationGap generalization_gap(const ModelSpec& spec, const ModelParams& params,
                                     const NormalizedAdjacency& adj, const CsrMatrix& features,
                                     const std::vector<int>& labels, const Split& split,
                                     double rho, std::size_t n_samples, std::uint64_t seed) {
    GeneralizationGap out;
    out.train_loss =
        loss_at(spec, params, adj, features, labels, split.train_ids, std::nullopt, 0.0);
    std::vector<std::size_t> all(labels.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    out.all_nodes_loss = loss_at(spec, params, adj, features, labels, all, std::nullopt, 0.0);
    out.gap = out.all_nodes_loss - out.train_loss;

    out.sharpness = 0.0;
    if (rho > 0.0) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < n_samples; ++s) {
            Rng rng(derive_seed(seed, s));
            const ModelParams p = surface_perturbed(params, rho, rng);
            const double rise =
                loss_at(spec, p, adj, features, labels, split.train_ids, std::nullopt, 0.0) -
                out.train_loss;
            best = std::max(best, rise);
        }
        out.sharpness = best;
    }
    return out;
}

BoundReport bound_terms(const ModelSpec& spec, const ModelParams& params,
                        const NormalizedAdjacency& adj, const CsrMatrix& features,
                        const std::vector<int>& labels, const Split& split,
                        const BoundConfig& cfg) {
    const auto d = static_cast<double>(params.total_entries());
    if (cfg.m < std::sqrt(d))
        throw std::invalid_argument("bound_terms: m must be >= sqrt(d) (theorem regime)");
    if (!(cfg.confidence_delta > 0.0 && cfg.confidence_delta < 1.0))
        throw std::invalid_argument("bound_terms: confidence_delta must be in (0, 1)");
    if (!(cfg.rho > 0.0)) throw std::invalid_argument("bound_terms: rho must be > 0");
    if (split.train_ids.empty()) throw std::invalid_argument("bound_terms: empty training set");

    BoundReport rep;
    rep.d = params.total_entries();
    rep.n0 = split.train_ids.size();
    const double n0 = static_cast<double>(rep.n0);

    const double u = cfg.m * cfg.m / d;
    rep.chi_tail_term = std::exp(0.5 * d * (std::log(u) + 1.0 - u));

    const double theta_sq = params.flat_norm() * params.flat_norm();
    rep.kl_term = (1.0 + d * std::log1p(cfg.m * cfg.m * theta_sq / (d * cfg.rho * cfg.rho))) /
                  (2.0 * std::sqrt(n0));

    rep.confidence_term = (std::log(3.0 / cfg.confidence_delta) + 0.25) / std::sqrt(n0);

    rep.sharpness_estimate = generalization_gap(spec, params, adj, features, labels, split,
                                                cfg.rho, cfg.sharpness_samples, cfg.seed)
                                 .sharpness;
    rep.omitted_constant_note = true;
    return rep;
}

namespace {

// Continued fraction for the regularized incomplete beta (Lentz).
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-16;
    constexpr double kTiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0 && b > 0.0)) throw std::invalid_argument("ibeta: a, b must be > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * betacf(a, b, x) / a;
    }
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

WelchResult welch_t_test(std::span<const double> sample_a, std::span<const double> sample_b) {
    const auto na = static_cast<double>(sample_a.size());
    const auto nb = static_cast<double>(sample_b.size());
    if (sample_a.size() < 2 || sample_b.size() < 2)
        throw std::invalid_argument("welch_t_test: each sample needs size >= 2");
    const double ma = std::accumulate(sample_a.begin(), sample_a.end(), 0.0) / na;
    const double mb = std::accumulate(sample_b.begin(), sample_b.end(), 0.0) / nb;
    double va = 0.0, vb = 0.0;
    for (double v : sample_a) va += (v - ma) * (v - ma);
    for (double v : sample_b) vb += (v - mb) * (v - mb);
    va /= na - 1.0;
    vb /= nb - 1.0;
    if (va == 0.0 && vb == 0.0)
        throw std::invalid_argument("welch_t_test: degenerate samples (both variances zero)");

    const double se_a = va / na;
    const double se_b = vb / nb;
    const double denom = std::sqrt(se_a + se_b);
    WelchResult r;
    r.t = (ma - mb) / denom;
    r.dof = (se_a + se_b) * (se_a + se_b) /
            (se_a * se_a / (na - 1.0) + se_b * se_b / (nb - 1.0));
    // two-sided tail of Student's t: P(|T| > t) = I_{nu/(nu+t^2)}(nu/2, 1/2)
    const double x = r.dof / (r.dof + r.t * r.t);
    r.p_two_sided = regularized_incomplete_beta(0.5 * r.dof, 0.5, x);
    return r;
}

}  // namespace wtawp
