// SPDX-License-Identifier: Apache-2.0

#include "wtawp/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace wtawp {

using nlohmann::json;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string graph_to_json(const Graph& g) {
    json j;
    j["n_nodes"] = g.n_nodes;
    json edges = json::array();
    for (const auto& [u, v] : g.edge_list()) edges.push_back({u, v});
    j["edges"] = std::move(edges);
    json feats = json::array();
    for (std::size_t i = 0; i < g.n_nodes; ++i) {
        json row = json::array();
        for (std::size_t f = 0; f < g.n_features; ++f) row.push_back(g.features(i, f));
        feats.push_back(std::move(row));
    }
    j["features"] = std::move(feats);
    j["labels"] = g.labels;
    return j.dump(2);
}

Graph graph_from_json(const std::string& text) {
    const json j = json::parse(text);
    const std::size_t n = j.at("n_nodes").get<std::size_t>();
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges")) {
        edges.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
    }
    const auto& feats = j.at("features");
    if (feats.size() != n) throw std::runtime_error("graph json: feature row count mismatch");
    const std::size_t nf = n > 0 ? feats.at(0).size() : 0;
    DenseMatrix features(n, nf);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = feats.at(i);
        if (row.size() != nf) throw std::runtime_error("graph json: ragged feature rows");
        for (std::size_t f = 0; f < nf; ++f) features(i, f) = row.at(f).get<double>();
    }
    std::vector<int> labels = j.at("labels").get<std::vector<int>>();
    return make_graph(n, edges, std::move(features), std::move(labels));
}

std::string params_to_json(const ModelParams& p) {
    json j;
    json layers = json::array();
    for (const auto& w : p.layers) {
        json l;
        l["rows"] = w.rows;
        l["cols"] = w.cols;
        l["data"] = w.data;
        layers.push_back(std::move(l));
    }
    j["layers"] = std::move(layers);
    json mask = json::array();
    for (auto b : p.awp_mask) mask.push_back(b != 0);
    j["awp_mask"] = std::move(mask);
    return j.dump();
}

ModelParams params_from_json(const std::string& text) {
    const json j = json::parse(text);
    ModelParams p;
    for (const auto& l : j.at("layers")) {
        DenseMatrix w(l.at("rows").get<std::size_t>(), l.at("cols").get<std::size_t>());
        const auto data = l.at("data").get<std::vector<double>>();
        if (data.size() != w.size()) throw std::runtime_error("params json: data length mismatch");
        w.data = data;
        p.layers.push_back(std::move(w));
    }
    for (const auto& b : j.at("awp_mask")) p.awp_mask.push_back(b.get<bool>() ? 1 : 0);
    if (p.awp_mask.size() != p.layers.size())
        throw std::runtime_error("params json: awp_mask length mismatch");
    return p;
}

std::string edge_flips_to_json(const PerturbedGraph& p) {
    json j;
    json added = json::array();
    for (const auto& [u, v] : p.added_edges) added.push_back({u, v});
    json removed = json::array();
    for (const auto& [u, v] : p.removed_edges) removed.push_back({u, v});
    j["added"] = std::move(added);
    j["removed"] = std::move(removed);
    return j.dump();
}

std::string train_report_to_csv(const TrainReport& r) {
    std::ostringstream out;
    out << "epoch,train_loss,awp_loss,rel_grad_norm,val_acc\n";
    for (std::size_t e = 0; e < r.train_loss.size(); ++e) {
        out << e << ',' << format_double(r.train_loss[e]) << ',' << format_double(r.awp_loss[e])
            << ',' << format_double(r.rel_grad_norm[e]) << ',' << format_double(r.val_acc[e])
            << '\n';
    }
    return out.str();
}

std::string landscape_to_csv(const LandscapeSlice& s) {
    std::ostringstream out;
    out << "alpha,mean_loss";
    for (std::size_t j = 0; j < s.losses.cols; ++j) out << ",dir_" << j;
    out << '\n';
    for (std::size_t ai = 0; ai < s.alphas.size(); ++ai) {
        out << format_double(s.alphas[ai]) << ',' << format_double(s.mean_loss[ai]);
        for (std::size_t j = 0; j < s.losses.cols; ++j) out << ',' << format_double(s.losses(ai, j));
        out << '\n';
    }
    return out.str();
}

std::string bound_report_to_csv(const BoundReport& r, double m, double confidence_delta,
                                double rho) {
    std::ostringstream out;
    out << "d,n0,m,confidence_delta,rho,sharpness_estimate,chi_tail_term,kl_term,confidence_term,"
           "omitted_theta_k_eps_all\n";
    out << r.d << ',' << r.n0 << ',' << format_double(m) << ',' << format_double(confidence_delta)
        << ',' << format_double(rho) << ',' << format_double(r.sharpness_estimate) << ','
        << format_double(r.chi_tail_term) << ',' << format_double(r.kl_term) << ','
        << format_double(r.confidence_term) << ',' << (r.omitted_constant_note ? "1" : "0") << '\n';
    return out.str();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

}  // namespace wtawp
