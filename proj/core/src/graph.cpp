// SPDX-License-Identifier: Apache-2.0

#include "wtawp/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "wtawp/rng.hpp"

namespace wtawp {

namespace {

CsrMatrix adjacency_from_edges(std::size_t n, const std::vector<Edge>& edges) {
    std::vector<std::vector<std::size_t>> adj(n);
    for (const auto& [u, v] : edges) {
        if (u >= n || v >= n) throw std::invalid_argument("edge endpoint out of range");
        if (u == v) throw std::invalid_argument("self-loop in edge list");
        adj[u].push_back(v);
        adj[v].push_back(u);
    }
    CsrMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& nb = adj[i];
        std::sort(nb.begin(), nb.end());
        nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
        for (std::size_t j : nb) {
            m.col_idx.push_back(j);
            m.values.push_back(1.0);
        }
        m.row_ptr[i + 1] = m.col_idx.size();
    }
    return m;
}

}  // namespace

std::vector<Edge> Graph::edge_list() const {
    std::vector<Edge> out;
    out.reserve(adjacency.nnz() / 2);
    for (std::size_t i = 0; i < n_nodes; ++i) {
        for (std::size_t k = adjacency.row_ptr[i]; k < adjacency.row_ptr[i + 1]; ++k) {
            const std::size_t j = adjacency.col_idx[k];
            if (i < j) out.emplace_back(i, j);
        }
    }
    return out;
}

void Graph::validate() const {
    if (n_nodes == 0) throw std::invalid_argument("graph: empty");
    if (labels.size() != n_nodes) throw std::invalid_argument("graph: labels size mismatch");
    if (features.rows != n_nodes || features.cols != n_features)
        throw std::invalid_argument("graph: feature shape mismatch");
    if (!features.all_finite()) throw std::invalid_argument("graph: non-finite feature entry");
    if (n_classes == 0) throw std::invalid_argument("graph: no classes");
    std::vector<bool> seen(n_classes, false);
    for (int y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= n_classes)
            throw std::invalid_argument("graph: label out of range");
        seen[static_cast<std::size_t>(y)] = true;
    }
    for (std::size_t c = 0; c < n_classes; ++c) {
        if (!seen[c]) throw std::invalid_argument("graph: class " + std::to_string(c) + " empty");
    }
    if (adjacency.rows != n_nodes || adjacency.cols != n_nodes)
        throw std::invalid_argument("graph: adjacency shape mismatch");
    for (std::size_t i = 0; i < n_nodes; ++i) {
        for (std::size_t k = adjacency.row_ptr[i]; k < adjacency.row_ptr[i + 1]; ++k) {
            const std::size_t j = adjacency.col_idx[k];
            if (i == j) throw std::invalid_argument("graph: self-loop stored");
            if (adjacency.values[k] != 1.0) throw std::invalid_argument("graph: non-0/1 adjacency");
            if (!adjacency.has_entry(j, i)) throw std::invalid_argument("graph: asymmetric adjacency");
        }
    }
}

Graph make_graph(std::size_t n_nodes, const std::vector<Edge>& edges, DenseMatrix features,
                 std::vector<int> labels) {
    Graph g;
    g.n_nodes = n_nodes;
    g.adjacency = adjacency_from_edges(n_nodes, edges);
    g.features = std::move(features);
    g.n_features = g.features.cols;
    g.labels = std::move(labels);
    int max_label = -1;
    for (int y : g.labels) max_label = std::max(max_label, y);
    g.n_classes = static_cast<std::size_t>(max_label + 1);
    g.validate();
    return g;
}

NormalizedAdjacency normalize_adjacency(const Graph& g) {
    const std::size_t n = g.n_nodes;
    std::vector<double> degree(n, 1.0);  // self-loop contributes 1
    for (std::size_t i = 0; i < n; ++i) {
        degree[i] += static_cast<double>(g.adjacency.row_ptr[i + 1] - g.adjacency.row_ptr[i]);
    }
    CsrMatrix m(n, n);
    m.col_idx.reserve(g.adjacency.nnz() + n);
    m.values.reserve(g.adjacency.nnz() + n);
    for (std::size_t i = 0; i < n; ++i) {
        bool self_emitted = false;
        auto emit = [&](std::size_t j) {
            m.col_idx.push_back(j);
            m.values.push_back(1.0 / std::sqrt(degree[i] * degree[j]));
        };
        for (std::size_t k = g.adjacency.row_ptr[i]; k < g.adjacency.row_ptr[i + 1]; ++k) {
            const std::size_t j = g.adjacency.col_idx[k];
            if (!self_emitted && j > i) {
                emit(i);
                self_emitted = true;
            }
            emit(j);
        }
        if (!self_emitted) emit(i);
        m.row_ptr[i + 1] = m.col_idx.size();
    }
    return NormalizedAdjacency{std::move(m)};
}

std::vector<Edge> knn_edges(const DenseMatrix& points, std::size_t k) {
    const std::size_t n = points.rows;
    if (k == 0) throw std::invalid_argument("knn_edges: k must be >= 1");
    if (n < 2) throw std::invalid_argument("knn_edges: need at least 2 points");
    if (k > n - 1) throw std::invalid_argument("knn_edges: k exceeds n-1");
    std::set<Edge> edges;
    std::vector<std::pair<double, std::size_t>> cand(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t m = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double d2 = 0.0;
            for (std::size_t c = 0; c < points.cols; ++c) {
                const double diff = points(i, c) - points(j, c);
                d2 += diff * diff;
            }
            cand[m++] = {d2, j};
        }
        // ties at equal distance break toward the lower node id
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
        for (std::size_t t = 0; t < k; ++t) {
            const std::size_t j = cand[t].second;
            edges.insert({std::min(i, j), std::max(i, j)});
        }
    }
    return {edges.begin(), edges.end()};
}

Graph generate_linear_toy(const ToyConfig& cfg) {
    if (cfg.k_neighbors < 1) throw std::invalid_argument("linear toy: k_neighbors must be >= 1");
    if (cfg.nodes_per_class < cfg.k_neighbors + 1)
        throw std::invalid_argument("linear toy: nodes_per_class must be >= k_neighbors + 1");
    const std::size_t n = 2 * cfg.nodes_per_class;
    DenseMatrix pts(n, 2);
    std::vector<int> labels(n);
    Rng rng(derive_seed(cfg.seed, /*stream=*/1));
    const double means[2][2] = {{-1.5, -1.5}, {1.5, 1.5}};
    for (std::size_t c = 0; c < 2; ++c) {
        for (std::size_t p = 0; p < cfg.nodes_per_class; ++p) {
            const std::size_t i = c * cfg.nodes_per_class + p;
            pts(i, 0) = rng.normal(means[c][0], cfg.noise_std);
            pts(i, 1) = rng.normal(means[c][1], cfg.noise_std);
            labels[i] = static_cast<int>(c);
        }
    }
    const auto edges = knn_edges(pts, cfg.k_neighbors);
    return make_graph(n, edges, std::move(pts), std::move(labels));
}

Graph generate_two_moons(std::size_t n_per_class, double noise_std, std::uint64_t seed) {
    if (n_per_class < 1) throw std::invalid_argument("two moons: n_per_class must be >= 1");
    const std::size_t n = 2 * n_per_class;
    DenseMatrix pts(n, 2);
    std::vector<int> labels(n);
    Rng rng(derive_seed(seed, /*stream=*/2));
    constexpr double pi = 3.14159265358979323846;
    for (std::size_t c = 0; c < 2; ++c) {
        for (std::size_t p = 0; p < n_per_class; ++p) {
            const std::size_t i = c * n_per_class + p;
            const double t = rng.uniform(0.0, pi);
            double x, y;
            if (c == 0) {
                x = std::cos(t);
                y = std::sin(t);
            } else {
                x = 1.0 - std::cos(t);
                y = 0.5 - std::sin(t);
            }
            pts(i, 0) = x + rng.normal(0.0, noise_std);
            pts(i, 1) = y + rng.normal(0.0, noise_std);
            labels[i] = static_cast<int>(c);
        }
    }
    Graph g;
    g.n_nodes = n;
    g.adjacency = CsrMatrix(n, n);
    g.features = std::move(pts);
    g.n_features = 2;
    g.labels = std::move(labels);
    g.n_classes = 2;
    g.validate();
    return g;
}

std::vector<std::size_t> largest_connected_component(std::size_t n_nodes,
                                                     const std::vector<Edge>& edges) {
    std::vector<std::vector<std::size_t>> adj(n_nodes);
    for (const auto& [u, v] : edges) {
        adj[u].push_back(v);
        adj[v].push_back(u);
    }
    std::vector<int> comp(n_nodes, -1);
    std::vector<std::size_t> stack;
    std::vector<std::size_t> comp_size;
    for (std::size_t s = 0; s < n_nodes; ++s) {
        if (comp[s] >= 0) continue;
        const int c = static_cast<int>(comp_size.size());
        comp_size.push_back(0);
        stack.push_back(s);
        comp[s] = c;
        while (!stack.empty()) {
            const std::size_t u = stack.back();
            stack.pop_back();
            ++comp_size[static_cast<std::size_t>(c)];
            for (std::size_t v : adj[u]) {
                if (comp[v] < 0) {
                    comp[v] = c;
                    stack.push_back(v);
                }
            }
        }
    }
    // first component of maximal size; components are discovered in order
    // of their smallest node id
    std::size_t best = 0;
    for (std::size_t c = 1; c < comp_size.size(); ++c) {
        if (comp_size[c] > comp_size[best]) best = c;
    }
    std::vector<std::size_t> ids;
    ids.reserve(comp_size[best]);
    for (std::size_t i = 0; i < n_nodes; ++i) {
        if (comp[i] == static_cast<int>(best)) ids.push_back(i);
    }
    return ids;
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == '\t' || ch == ' ' || ch == '\r') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

[[noreturn]] void parse_fail(const std::string& path, std::size_t line_no, const std::string& why) {
    throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + why);
}

}  // namespace

Graph load_citation_dataset(const std::string& content_path, const std::string& cites_path) {
    std::ifstream content(content_path);
    if (!content) throw std::runtime_error("cannot open " + content_path);

    std::vector<std::string> node_ids;
    std::vector<std::string> node_labels;
    std::vector<std::vector<double>> node_feats;
    std::unordered_map<std::string, std::size_t> id_of;
    std::size_t n_feats = 0;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(content, line)) {
        ++line_no;
        const auto fields = split_fields(line);
        if (fields.empty()) continue;
        if (fields.size() < 3) parse_fail(content_path, line_no, "expected id, features, label");
        if (node_ids.empty()) {
            n_feats = fields.size() - 2;
        } else if (fields.size() != n_feats + 2) {
            parse_fail(content_path, line_no,
                       "expected " + std::to_string(n_feats + 2) + " fields, got " +
                           std::to_string(fields.size()));
        }
        if (id_of.count(fields[0])) parse_fail(content_path, line_no, "duplicate node id " + fields[0]);
        std::vector<double> feats(n_feats);
        for (std::size_t f = 0; f < n_feats; ++f) {
            try {
                std::size_t used = 0;
                feats[f] = std::stod(fields[f + 1], &used);
                if (used != fields[f + 1].size()) throw std::invalid_argument("trailing chars");
            } catch (const std::exception&) {
                parse_fail(content_path, line_no, "bad feature value '" + fields[f + 1] + "'");
            }
        }
        id_of.emplace(fields[0], node_ids.size());
        node_ids.push_back(fields[0]);
        node_labels.push_back(fields.back());
        node_feats.push_back(std::move(feats));
    }
    if (node_ids.empty()) throw std::runtime_error(content_path + ": no nodes");

    std::ifstream cites(cites_path);
    if (!cites) throw std::runtime_error("cannot open " + cites_path);
    std::set<Edge> raw_edges;
    line_no = 0;
    while (std::getline(cites, line)) {
        ++line_no;
        const auto fields = split_fields(line);
        if (fields.empty()) continue;
        if (fields.size() != 2) parse_fail(cites_path, line_no, "expected two node ids");
        const auto a = id_of.find(fields[0]);
        const auto b = id_of.find(fields[1]);
        if (a == id_of.end() || b == id_of.end()) continue;  // unknown id: drop edge
        if (a->second == b->second) continue;                 // self-citation: drop
        raw_edges.insert({std::min(a->second, b->second), std::max(a->second, b->second)});
    }

    const std::vector<Edge> all_edges(raw_edges.begin(), raw_edges.end());
    const auto lcc = largest_connected_component(node_ids.size(), all_edges);
    if (lcc.empty()) throw std::runtime_error("citation graph: empty largest component");

    std::vector<std::size_t> new_id(node_ids.size(), static_cast<std::size_t>(-1));
    for (std::size_t i = 0; i < lcc.size(); ++i) new_id[lcc[i]] = i;

    std::vector<Edge> edges;
    for (const auto& [u, v] : all_edges) {
        if (new_id[u] != static_cast<std::size_t>(-1) && new_id[v] != static_cast<std::size_t>(-1)) {
            edges.emplace_back(new_id[u], new_id[v]);
        }
    }

    // label remap by sorted label string, restricted to the kept component
    std::set<std::string> label_set;
    for (std::size_t old : lcc) label_set.insert(node_labels[old]);
    std::unordered_map<std::string, int> label_of;
    for (const auto& s : label_set) {
        const int next = static_cast<int>(label_of.size());
        label_of.emplace(s, next);
    }

    DenseMatrix feats(lcc.size(), n_feats);
    std::vector<int> labels(lcc.size());
    for (std::size_t i = 0; i < lcc.size(); ++i) {
        const auto& src = node_feats[lcc[i]];
        double row_sum = 0.0;
        for (double v : src) row_sum += v;
        for (std::size_t f = 0; f < n_feats; ++f) {
            feats(i, f) = row_sum > 0.0 ? src[f] / row_sum : 0.0;
        }
        labels[i] = label_of.at(node_labels[lcc[i]]);
    }
    return make_graph(lcc.size(), edges, std::move(feats), std::move(labels));
}

Split make_split(const Graph& g, std::uint64_t seed) {
    const std::size_t n = g.n_nodes;
    if (n == 0) throw std::invalid_argument("make_split: empty graph");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(derive_seed(seed, /*stream=*/3));
    for (std::size_t i = n; i > 1; --i) {  // Fisher-Yates
        const std::size_t j = rng.uniform_index(i);
        std::swap(perm[i - 1], perm[j]);
    }
    const auto n_train = static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(n)));
    const auto n_val = static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(n)));
    Split s;
    s.seed = seed;
    s.train_ids.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.val_ids.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train),
                     perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    s.test_ids.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), perm.end());
    std::sort(s.train_ids.begin(), s.train_ids.end());
    std::sort(s.val_ids.begin(), s.val_ids.end());
    std::sort(s.test_ids.begin(), s.test_ids.end());
    return s;
}

}  // namespace wtawp
