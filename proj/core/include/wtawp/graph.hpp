// SPDX-License-Identifier: Apache-2.0
//
// Graph data model: sparse symmetric adjacency, dense node features, labels,
// plus the dataset generators, the raw citation-file loader, symmetric
// normalization and train/val/test splitting.

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "wtawp/matrix.hpp"

namespace wtawp {

using Edge = std::pair<std::size_t, std::size_t>;

struct Graph {
    std::size_t n_nodes = 0;
    std::size_t n_features = 0;
    std::size_t n_classes = 0;
    CsrMatrix adjacency;     // 0/1, symmetric, zero diagonal
    DenseMatrix features;    // n_nodes x n_features
    std::vector<int> labels; // each in [0, n_classes)

    /// Undirected edge list with u < v, sorted.
    std::vector<Edge> edge_list() const;
    std::size_t n_edges() const { return adjacency.nnz() / 2; }

    /// Throws std::invalid_argument on any violated invariant (asymmetry,
    /// self-loops, label range, empty classes, non-finite features).
    void validate() const;
};

/// Builds a Graph from an undirected edge list; duplicate edges collapse,
/// self-loops are rejected.
Graph make_graph(std::size_t n_nodes, const std::vector<Edge>& edges, DenseMatrix features,
                 std::vector<int> labels);

struct NormalizedAdjacency {
    CsrMatrix matrix;  // sparsity pattern of A + I, entries in (0, 1]
};

struct Split {
    std::vector<std::size_t> train_ids;
    std::vector<std::size_t> val_ids;
    std::vector<std::size_t> test_ids;
    std::uint64_t seed = 0;
};

struct ToyConfig {
    std::size_t nodes_per_class = 100;
    std::size_t k_neighbors = 3;
    double noise_std = 0.6;
    std::uint64_t seed = 0;
};

/// A_hat = D^{-1/2} (A + I) D^{-1/2} with D_ii = sum_j (A + I)_ij.
/// Each unordered pair is computed once, so the output is exactly symmetric.
NormalizedAdjacency normalize_adjacency(const Graph& g);

/// Symmetrized k-nearest-neighbour edges over 2-D (or any-D) points:
/// (i, j) is an edge iff i is among j's k nearest or vice versa. Distance
/// ties break toward the lower node id.
std::vector<Edge> knn_edges(const DenseMatrix& points, std::size_t k);

/// Two isotropic Gaussian blobs (means (-1.5,-1.5) and (1.5,1.5)) with a
/// symmetrized k-NN graph; features are the 2-D positions.
Graph generate_linear_toy(const ToyConfig& cfg);

/// Interleaved half-circles: class 0 at (cos t, sin t), class 1 at
/// (1 - cos t, 0.5 - sin t), t uniform in [0, pi], plus Gaussian noise.
/// The adjacency is empty.
Graph generate_two_moons(std::size_t n_per_class, double noise_std, std::uint64_t seed);

/// Loads the raw tab-separated citation format ("id f_1 ... f_F label" /
/// "id_a id_b"), keeps the largest connected component, row-normalizes
/// features and remaps labels to [0, K) by sorted label string.
Graph load_citation_dataset(const std::string& content_path, const std::string& cites_path);

/// round(0.1 n) train / round(0.1 n) val / rest test, from a seeded
/// permutation. Rounding is half-away-from-zero.
Split make_split(const Graph& g, std::uint64_t seed);

/// Node ids of the largest connected component (ties: the component with
/// the smallest contained id).
std::vector<std::size_t> largest_connected_component(std::size_t n_nodes,
                                                     const std::vector<Edge>& edges);

}  // namespace wtawp
