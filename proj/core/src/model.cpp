// SPDX-License-Identifier: Apache-2.0

#include "wtawp/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "wtawp/rng.hpp"

namespace wtawp {

void ModelSpec::validate() const {
    if (in_dim == 0 || hidden_dim == 0 || out_dim == 0)
        throw std::invalid_argument("model spec: dims must be positive");
    if (!(ppnp_alpha > 0.0 && ppnp_alpha <= 1.0))
        throw std::invalid_argument("model spec: ppnp_alpha must be in (0, 1]");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
        throw std::invalid_argument("model spec: dropout_rate must be in [0, 1)");
}

std::size_t ModelParams::total_entries() const {
    std::size_t n = 0;
    for (const auto& w : layers) n += w.size();
    return n;
}

double ModelParams::flat_norm() const {
    double acc = 0.0;
    for (const auto& w : layers) {
        for (double v : w.data) acc += v * v;
    }
    return std::sqrt(acc);
}

GradientSet GradientSet::zeros_like(const ModelParams& p) {
    GradientSet g;
    g.layers.reserve(p.layers.size());
    for (const auto& w : p.layers) g.layers.emplace_back(w.rows, w.cols, 0.0);
    return g;
}

double GradientSet::flat_norm() const {
    double acc = 0.0;
    for (const auto& g : layers) {
        for (double v : g.data) acc += v * v;
    }
    return std::sqrt(acc);
}

namespace {

std::vector<std::pair<std::size_t, std::size_t>> layer_shapes(const ModelSpec& s) {
    switch (s.kind) {
        case ModelKind::Mlp3:
            return {{s.in_dim, s.hidden_dim}, {s.hidden_dim, s.hidden_dim}, {s.hidden_dim, s.out_dim}};
        case ModelKind::Gcn2:
        case ModelKind::Ppnp:
            return {{s.in_dim, s.hidden_dim}, {s.hidden_dim, s.out_dim}};
    }
    throw std::logic_error("unknown model kind");
}

void check_params(const ModelSpec& spec, const ModelParams& params) {
    const auto shapes = layer_shapes(spec);
    if (params.layers.size() != shapes.size()) {
        throw std::invalid_argument("params: expected " + std::to_string(shapes.size()) +
                                    " layers, got " + std::to_string(params.layers.size()));
    }
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        const auto& w = params.layers[i];
        if (w.rows != shapes[i].first || w.cols != shapes[i].second) {
            throw std::invalid_argument(
                "layer " + std::to_string(i + 1) + " (W_" + std::to_string(i + 1) + "): expected " +
                std::to_string(shapes[i].first) + " x " + std::to_string(shapes[i].second) +
                ", got " + std::to_string(w.rows) + " x " + std::to_string(w.cols));
        }
    }
}

DenseMatrix make_drop_scale(std::size_t rows, std::size_t cols, double rate, std::uint64_t seed) {
    DenseMatrix s(rows, cols);
    Rng rng(derive_seed(seed, /*stream=*/0xD0));
    const double keep_scale = 1.0 / (1.0 - rate);
    for (double& v : s.data) v = rng.uniform() >= rate ? keep_scale : 0.0;
    return s;
}

void relu_inplace(DenseMatrix& m) {
    for (double& v : m.data) v = v > 0.0 ? v : 0.0;
}

void hadamard_inplace(DenseMatrix& m, const DenseMatrix& s) {
    for (std::size_t i = 0; i < m.data.size(); ++i) m.data[i] *= s.data[i];
}

// d <- d .* drop_scale .* 1[pre > 0]
void backprop_relu_dropout(DenseMatrix& d, const DenseMatrix& pre, const DenseMatrix& drop_scale) {
    const bool has_drop = drop_scale.size() > 0;
    for (std::size_t i = 0; i < d.data.size(); ++i) {
        double v = pre.data[i] > 0.0 ? d.data[i] : 0.0;
        if (has_drop) v *= drop_scale.data[i];
        d.data[i] = v;
    }
}

// acc_ij += factor * <dout_i, input_j> over the stored pattern
void accumulate_pattern_grad(const CsrMatrix& pattern, const DenseMatrix& dout,
                             const DenseMatrix& input, double factor, CsrMatrix& acc) {
    for (std::size_t i = 0; i < pattern.rows; ++i) {
        const double* drow = dout.row(i);
        for (std::size_t k = pattern.row_ptr[i]; k < pattern.row_ptr[i + 1]; ++k) {
            const double* irow = input.row(pattern.col_idx[k]);
            double s = 0.0;
            for (std::size_t c = 0; c < dout.cols; ++c) s += drow[c] * irow[c];
            acc.values[k] += factor * s;
        }
    }
}

void check_node_set(std::span<const std::size_t> node_set, std::size_t n_nodes) {
    if (node_set.empty()) throw std::invalid_argument("node set is empty");
    for (std::size_t v : node_set) {
        if (v >= n_nodes) throw std::invalid_argument("node id out of range");
    }
}

}  // namespace

ModelParams init_params(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    ModelParams p;
    const auto shapes = layer_shapes(spec);
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        const auto [fan_in, fan_out] = shapes[i];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        DenseMatrix w(fan_in, fan_out);
        Rng rng(derive_seed(seed, 0x100 + i));
        for (double& v : w.data) v = rng.uniform(-bound, bound);
        p.layers.push_back(std::move(w));
    }
    p.awp_mask.assign(shapes.size(), 0);
    return p;
}

DenseMatrix ppnp_propagate(const NormalizedAdjacency& adj, const DenseMatrix& h, std::size_t k,
                           double alpha) {
    DenseMatrix z = h;
    for (std::size_t step = 0; step < k; ++step) {
        DenseMatrix az = spmm(adj.matrix, z);
        scale(az, 1.0 - alpha);
        axpy(alpha, h, az);
        z = std::move(az);
    }
    return z;
}

Forwarded forward(const ModelSpec& spec, const ModelParams& params, const NormalizedAdjacency& adj,
                  const CsrMatrix& features, std::optional<std::uint64_t> dropout_seed) {
    spec.validate();
    check_params(spec, params);
    if (features.cols != spec.in_dim)
        throw std::invalid_argument("features: expected " + std::to_string(spec.in_dim) +
                                    " columns, got " + std::to_string(features.cols));
    if (spec.kind != ModelKind::Mlp3 && adj.matrix.rows != features.rows)
        throw std::invalid_argument("adjacency/feature row mismatch");

    Forwarded out;
    ForwardCache& c = out.cache;
    c.training = dropout_seed.has_value();
    const bool use_dropout =
        c.training && spec.dropout_rate > 0.0 && spec.kind != ModelKind::Mlp3;

    switch (spec.kind) {
        case ModelKind::Gcn2: {
            c.q1 = spmm(features, params.layers[0]);
            c.p1 = spmm(adj.matrix, c.q1);
            c.hidden = c.p1;
            relu_inplace(c.hidden);
            if (use_dropout) {
                c.drop_scale = make_drop_scale(c.hidden.rows, c.hidden.cols, spec.dropout_rate,
                                               *dropout_seed);
                hadamard_inplace(c.hidden, c.drop_scale);
            }
            c.t = matmul(c.hidden, params.layers[1]);
            out.logits = spmm(adj.matrix, c.t);
            break;
        }
        case ModelKind::Ppnp: {
            c.q1 = spmm(features, params.layers[0]);
            c.hidden = c.q1;
            relu_inplace(c.hidden);
            if (use_dropout) {
                c.drop_scale = make_drop_scale(c.hidden.rows, c.hidden.cols, spec.dropout_rate,
                                               *dropout_seed);
                hadamard_inplace(c.hidden, c.drop_scale);
            }
            DenseMatrix h0 = matmul(c.hidden, params.layers[1]);
            DenseMatrix z = h0;
            c.ppnp_zs.clear();
            c.ppnp_zs.reserve(spec.ppnp_k);
            for (std::size_t step = 0; step < spec.ppnp_k; ++step) {
                c.ppnp_zs.push_back(z);
                DenseMatrix az = spmm(adj.matrix, z);
                scale(az, 1.0 - spec.ppnp_alpha);
                axpy(spec.ppnp_alpha, h0, az);
                z = std::move(az);
            }
            c.t = std::move(h0);  // reuse slot: pre-propagation predictions
            out.logits = std::move(z);
            break;
        }
        case ModelKind::Mlp3: {
            c.q1 = spmm(features, params.layers[0]);
            c.q2 = matmul(c.q1, params.layers[1]);
            out.logits = matmul(c.q2, params.layers[2]);
            break;
        }
    }
    if (!out.logits.all_finite()) throw std::runtime_error("forward produced non-finite logits");
    return out;
}

Forwarded forward(const ModelSpec& spec, const ModelParams& params, const NormalizedAdjacency& adj,
                  const DenseMatrix& features, std::optional<std::uint64_t> dropout_seed) {
    return forward(spec, params, adj, CsrMatrix::from_dense(features), dropout_seed);
}

double ce_loss_from_logits(const DenseMatrix& logits, const std::vector<int>& labels,
                           std::span<const std::size_t> node_set) {
    check_node_set(node_set, logits.rows);
    double loss = 0.0;
    for (std::size_t v : node_set) {
        const double* row = logits.row(v);
        double m = row[0];
        for (std::size_t j = 1; j < logits.cols; ++j) m = std::max(m, row[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < logits.cols; ++j) sum += std::exp(row[j] - m);
        const auto y = static_cast<std::size_t>(labels[v]);
        loss += std::log(sum) - (row[y] - m);
    }
    return loss / static_cast<double>(node_set.size());
}

namespace {

// Mean cross-entropy over node_set; writes (softmax - onehot)/|set| into
// dlogits rows when given.
double ce_and_dlogits(const DenseMatrix& logits, const std::vector<int>& labels,
                      std::span<const std::size_t> node_set, DenseMatrix* dlogits) {
    check_node_set(node_set, logits.rows);
    const double inv = 1.0 / static_cast<double>(node_set.size());
    double loss = 0.0;
    std::vector<double> p(logits.cols);
    for (std::size_t v : node_set) {
        const double* row = logits.row(v);
        double m = row[0];
        for (std::size_t j = 1; j < logits.cols; ++j) m = std::max(m, row[j]);
        double sum = 0.0;
        for (std::size_t j = 0; j < logits.cols; ++j) {
            p[j] = std::exp(row[j] - m);
            sum += p[j];
        }
        const auto y = static_cast<std::size_t>(labels[v]);
        loss += std::log(sum) - (row[y] - m);
        if (dlogits != nullptr) {
            double* drow = dlogits->row(v);
            for (std::size_t j = 0; j < logits.cols; ++j) drow[j] = p[j] / sum * inv;
            drow[y] -= inv;
        }
    }
    return loss * inv;
}

double weight_decay_loss(const ModelParams& params, double wd) {
    if (wd == 0.0) return 0.0;
    double acc = 0.0;
    for (const auto& w : params.layers) {
        for (double v : w.data) acc += v * v;
    }
    return 0.5 * wd * acc;
}

struct BackwardOutputs {
    GradientSet grads;
    DenseMatrix d_features;
    CsrMatrix d_adjacency;
};

BackwardOutputs backward(const ModelSpec& spec, const ModelParams& params,
                         const NormalizedAdjacency& adj, const CsrMatrix& features,
                         const ForwardCache& c, const DenseMatrix& dlogits, bool want_params,
                         bool want_features, bool want_adjacency) {
    BackwardOutputs out;
    if (want_params) {
        out.grads.layers.reserve(params.layers.size());
    }
    if (want_adjacency) {
        out.d_adjacency = adj.matrix;
        std::fill(out.d_adjacency.values.begin(), out.d_adjacency.values.end(), 0.0);
    }

    switch (spec.kind) {
        case ModelKind::Gcn2: {
            DenseMatrix dt = spmm_t(adj.matrix, dlogits);
            if (want_adjacency) accumulate_pattern_grad(adj.matrix, dlogits, c.t, 1.0, out.d_adjacency);
            DenseMatrix dh = matmul_tb(dt, params.layers[1]);
            backprop_relu_dropout(dh, c.p1, c.drop_scale);  // now dh == dp1
            DenseMatrix dq1 = spmm_t(adj.matrix, dh);
            if (want_adjacency) accumulate_pattern_grad(adj.matrix, dh, c.q1, 1.0, out.d_adjacency);
            if (want_params) {
                out.grads.layers.push_back(spmm_t(features, dq1));
                out.grads.layers.push_back(matmul_ta(c.hidden, dt));
            }
            if (want_features) out.d_features = matmul_tb(dq1, params.layers[0]);
            break;
        }
        case ModelKind::Ppnp: {
            const double a = spec.ppnp_alpha;
            DenseMatrix dz = dlogits;
            DenseMatrix dh0(dlogits.rows, dlogits.cols, 0.0);
            for (std::size_t k = spec.ppnp_k; k >= 1; --k) {
                axpy(a, dz, dh0);
                if (want_adjacency)
                    accumulate_pattern_grad(adj.matrix, dz, c.ppnp_zs[k - 1], 1.0 - a,
                                            out.d_adjacency);
                DenseMatrix next = spmm_t(adj.matrix, dz);
                scale(next, 1.0 - a);
                dz = std::move(next);
            }
            axpy(1.0, dz, dh0);
            DenseMatrix dd = matmul_tb(dh0, params.layers[1]);
            backprop_relu_dropout(dd, c.q1, c.drop_scale);  // now dd == dq1
            if (want_params) {
                out.grads.layers.push_back(spmm_t(features, dd));
                out.grads.layers.push_back(matmul_ta(c.hidden, dh0));
            }
            if (want_features) out.d_features = matmul_tb(dd, params.layers[0]);
            break;
        }
        case ModelKind::Mlp3: {
            DenseMatrix dq2 = matmul_tb(dlogits, params.layers[2]);
            DenseMatrix dq1 = matmul_tb(dq2, params.layers[1]);
            if (want_params) {
                out.grads.layers.push_back(spmm_t(features, dq1));
                out.grads.layers.push_back(matmul_ta(c.q1, dq2));
                out.grads.layers.push_back(matmul_ta(c.q2, dlogits));
            }
            if (want_features) out.d_features = matmul_tb(dq1, params.layers[0]);
            break;
        }
    }
    return out;
}

}  // namespace

LossGrad loss_and_grad(const ModelSpec& spec, const ModelParams& params,
                       const NormalizedAdjacency& adj, const CsrMatrix& features,
                       const std::vector<int>& labels, std::span<const std::size_t> node_set,
                       std::optional<std::uint64_t> dropout_seed, double weight_decay) {
    Forwarded fwd = forward(spec, params, adj, features, dropout_seed);
    DenseMatrix dlogits(fwd.logits.rows, fwd.logits.cols, 0.0);
    LossGrad out;
    out.loss = ce_and_dlogits(fwd.logits, labels, node_set, &dlogits);
    auto back = backward(spec, params, adj, features, fwd.cache, dlogits, /*want_params=*/true,
                         /*want_features=*/false, /*want_adjacency=*/false);
    out.grads = std::move(back.grads);
    if (weight_decay != 0.0) {
        out.loss += weight_decay_loss(params, weight_decay);
        for (std::size_t i = 0; i < params.layers.size(); ++i) {
            axpy(weight_decay, params.layers[i], out.grads.layers[i]);
        }
    }
    return out;
}

LossGrad loss_and_grad(const ModelSpec& spec, const ModelParams& params,
                       const NormalizedAdjacency& adj, const DenseMatrix& features,
                       const std::vector<int>& labels, std::span<const std::size_t> node_set,
                       std::optional<std::uint64_t> dropout_seed, double weight_decay) {
    return loss_and_grad(spec, params, adj, CsrMatrix::from_dense(features), labels, node_set,
                         dropout_seed, weight_decay);
}

double loss_at(const ModelSpec& spec, const ModelParams& params, const NormalizedAdjacency& adj,
               const CsrMatrix& features, const std::vector<int>& labels,
               std::span<const std::size_t> node_set, std::optional<std::uint64_t> dropout_seed,
               double weight_decay) {
    Forwarded fwd = forward(spec, params, adj, features, dropout_seed);
    return ce_loss_from_logits(fwd.logits, labels, node_set) +
           weight_decay_loss(params, weight_decay);
}

double loss_at(const ModelSpec& spec, const ModelParams& params, const NormalizedAdjacency& adj,
               const DenseMatrix& features, const std::vector<int>& labels,
               std::span<const std::size_t> node_set, std::optional<std::uint64_t> dropout_seed,
               double weight_decay) {
    return loss_at(spec, params, adj, CsrMatrix::from_dense(features), labels, node_set,
                   dropout_seed, weight_decay);
}

double accuracy(const DenseMatrix& logits, const std::vector<int>& labels,
                std::span<const std::size_t> node_set) {
    check_node_set(node_set, logits.rows);
    std::size_t correct = 0;
    for (std::size_t v : node_set) {
        const double* row = logits.row(v);
        std::size_t best = 0;
        for (std::size_t j = 1; j < logits.cols; ++j) {
            if (row[j] > row[best]) best = j;
        }
        if (static_cast<int>(best) == labels[v]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(node_set.size());
}

InputGrads loss_and_input_grads(const ModelSpec& spec, const ModelParams& params,
                                const NormalizedAdjacency& adj, const CsrMatrix& features,
                                const std::vector<int>& labels,
                                std::span<const std::size_t> node_set, bool want_features,
                                bool want_adjacency) {
    Forwarded fwd = forward(spec, params, adj, features, std::nullopt);
    DenseMatrix dlogits(fwd.logits.rows, fwd.logits.cols, 0.0);
    InputGrads out;
    out.loss = ce_and_dlogits(fwd.logits, labels, node_set, &dlogits);
    auto back = backward(spec, params, adj, features, fwd.cache, dlogits, /*want_params=*/false,
                         want_features, want_adjacency);
    out.d_features = std::move(back.d_features);
    out.d_adjacency = std::move(back.d_adjacency);
    return out;
}

}  // namespace wtawp
