// Copyright (c) 2026, The gbfa-sim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Graph data model, on-disk dataset format, and aggregation operators.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gbfa {

/// Raised for malformed or inconsistent dataset/checkpoint payloads.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using NodeId = std::uint32_t;

struct Edge {
    NodeId src = 0;
    NodeId dst = 0;
    friend bool operator==(const Edge&, const Edge&) = default;
};

enum class Split : std::uint8_t { Train = 0, Val = 1, Test = 2 };

struct NodeMasks {
    std::vector<std::uint8_t> train;
    std::vector<std::uint8_t> val;
    std::vector<std::uint8_t> test;

    const std::vector<std::uint8_t>& operator[](Split s) const;
    std::size_t count(Split s) const;
    bool empty() const { return train.empty(); }
};

/// Node-classification graph. Undirected edges are stored once; reversed
/// duplicates are tolerated and merged when operators are built.
struct Graph {
    std::string name;
    std::size_t num_nodes = 0;
    std::size_t feature_dim = 0;
    std::size_t num_classes = 0;
    std::vector<float> features;  // row-major [num_nodes x feature_dim]
    std::vector<std::uint32_t> labels;
    std::vector<Edge> edges;
    NodeMasks masks;

    std::size_t num_edges() const { return edges.size(); }
    std::span<const float> feature_row(std::size_t node) const {
        return {features.data() + node * feature_dim, feature_dim};
    }

    /// Throws DataError when any structural invariant is violated.
    void validate() const;
};

/// Compressed sparse row matrix. Column indices are sorted within a row.
struct CsrMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> row_ptr{0};
    std::vector<std::uint32_t> col_idx;
    std::vector<float> values;

    std::size_t nnz() const { return values.size(); }
    /// Zero when (r, c) is not stored.
    float at(std::size_t r, std::size_t c) const;
    CsrMatrix transposed() const;
};

/// D^-1/2 (A + I) D^-1/2 with symmetrized, deduplicated edges.
struct NormalizedAdjacency {
    CsrMatrix matrix;
};

NormalizedAdjacency normalize_adjacency(const Graph& g);

/// Row-normalized neighbor mean (no self loops); isolated rows are empty.
CsrMatrix mean_neighbor_operator(const Graph& g);
/// Plain neighbor sum (no self loops), symmetric.
CsrMatrix sum_neighbor_operator(const Graph& g);
/// Sparse view of the dense feature matrix (zeros dropped).
CsrMatrix feature_matrix(const Graph& g);

/// Everything a forward pass needs from the graph, built once and shared
/// read-only across runs.
struct GraphContext {
    const Graph* graph = nullptr;
    NormalizedAdjacency adjacency;
    CsrMatrix mean_neighbors;
    CsrMatrix sum_neighbors;
    CsrMatrix features;
    CsrMatrix features_by_column;  // transpose of `features`

    static GraphContext build(const Graph& g);
    const Graph& g() const { return *graph; }
};

struct SplitPolicy {
    std::size_t train_per_class = 20;
    std::size_t num_val = 500;
    std::size_t num_test = 1000;
    std::uint64_t seed = 0;
};

/// Planetoid-style split: a fixed number of labelled nodes per class, then
/// validation and test nodes drawn from the remainder. Deterministic per seed.
Graph split_masks(Graph g, const SplitPolicy& policy);

/// Dataset directory: manifest.json, features.f32, edges.u32, labels.u32 and
/// (optionally) masks.u8. All payloads little-endian.
Graph load_graph(const std::filesystem::path& dir);
void save_graph(const Graph& g, const std::filesystem::path& dir);

/// Parameters for the synthetic citation-graph generator used in place of the
/// public datasets (see README).
struct CitationProfile {
    std::string name;
    std::size_t num_nodes = 0;
    std::size_t num_edges = 0;
    std::size_t feature_dim = 0;
    std::vector<std::size_t> class_sizes;
    double homophily = 0.8;        // fraction of intra-class edges
    double degree_exponent = 2.5;  // Pareto tail of node attachment weights
    double words_per_node = 18.0;  // mean non-zero features per node
    double topic_fraction = 0.3;   // share of words drawn from the class topic
    double topic_width = 0.15;     // share of the vocabulary owned by each class
    bool tfidf = false;            // binary bag-of-words when false

    static CitationProfile cora();
    static CitationProfile pubmed();
    static CitationProfile by_name(const std::string& name);
};

/// Deterministic contextual block-model graph with exactly the profile's
/// node, edge, feature and class counts; default split masks applied.
Graph synthesize_citation_graph(const CitationProfile& profile, std::uint64_t seed);

}  // namespace gbfa
