// Copyright (c) 2026, The gbfa-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "gbfa/graph.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <set>

#include "gbfa/binary_io.hpp"
#include "gbfa/rng.hpp"

namespace gbfa {

using json = nlohmann::json;

const std::vector<std::uint8_t>& NodeMasks::operator[](Split s) const {
    switch (s) {
        case Split::Train: return train;
        case Split::Val: return val;
        case Split::Test: return test;
    }
    throw std::invalid_argument("unknown split");
}

std::size_t NodeMasks::count(Split s) const {
    const auto& m = (*this)[s];
    return static_cast<std::size_t>(std::count(m.begin(), m.end(), std::uint8_t{1}));
}

void Graph::validate() const {
    if (feature_dim == 0) throw DataError(name + ": feature_dim must be positive");
    if (num_classes == 0) throw DataError(name + ": num_classes must be positive");
    if (features.size() != num_nodes * feature_dim) throw DataError(name + ": feature size mismatch");
    if (labels.size() != num_nodes) throw DataError(name + ": label count mismatch");
    for (std::size_t v = 0; v < num_nodes; ++v) {
        if (labels[v] >= num_classes) {
            throw DataError(name + ": label " + std::to_string(labels[v]) + " of node " +
                            std::to_string(v) + " out of range");
        }
    }
    std::set<std::pair<NodeId, NodeId>> seen;
    for (const auto& e : edges) {
        if (e.src >= num_nodes || e.dst >= num_nodes) {
            throw DataError(name + ": edge endpoint out of range");
        }
        if (e.src == e.dst) throw DataError(name + ": self-loop on node " + std::to_string(e.src));
        if (!seen.emplace(e.src, e.dst).second) {
            throw DataError(name + ": duplicate edge " + std::to_string(e.src) + "-" +
                            std::to_string(e.dst));
        }
    }
    if (!masks.empty()) {
        for (const auto* m : {&masks.train, &masks.val, &masks.test}) {
            if (m->size() != num_nodes) throw DataError(name + ": mask length mismatch");
        }
        for (std::size_t v = 0; v < num_nodes; ++v) {
            if (masks.train[v] + masks.val[v] + masks.test[v] > 1) {
                throw DataError(name + ": masks overlap at node " + std::to_string(v));
            }
        }
    }
}

float CsrMatrix::at(std::size_t r, std::size_t c) const {
    const auto first = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[r]);
    const auto last = col_idx.begin() + static_cast<std::ptrdiff_t>(row_ptr[r + 1]);
    const auto it = std::lower_bound(first, last, static_cast<std::uint32_t>(c));
    if (it == last || *it != c) return 0.0f;
    return values[static_cast<std::size_t>(it - col_idx.begin())];
}

CsrMatrix CsrMatrix::transposed() const {
    CsrMatrix t;
    t.rows = cols;
    t.cols = rows;
    t.row_ptr.assign(cols + 1, 0);
    for (auto c : col_idx) ++t.row_ptr[c + 1];
    for (std::size_t i = 0; i < cols; ++i) t.row_ptr[i + 1] += t.row_ptr[i];
    t.col_idx.resize(nnz());
    t.values.resize(nnz());
    std::vector<std::size_t> cursor(t.row_ptr.begin(), t.row_ptr.end() - 1);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
            const auto dst = cursor[col_idx[k]]++;
            t.col_idx[dst] = static_cast<std::uint32_t>(r);
            t.values[dst] = values[k];
        }
    }
    return t;
}

namespace {

/// Sorted, deduplicated neighbor lists of the symmetrized edge set.
std::vector<std::vector<NodeId>> neighbor_lists(const Graph& g) {
    std::vector<std::vector<NodeId>> nbrs(g.num_nodes);
    for (const auto& e : g.edges) {
        nbrs[e.src].push_back(e.dst);
        nbrs[e.dst].push_back(e.src);
    }
    for (auto& list : nbrs) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
    }
    return nbrs;
}

template <typename ValueFn>
CsrMatrix build_csr(const std::vector<std::vector<NodeId>>& nbrs, bool self_loops, ValueFn value) {
    CsrMatrix m;
    m.rows = m.cols = nbrs.size();
    m.row_ptr.assign(1, 0);
    for (std::size_t i = 0; i < nbrs.size(); ++i) {
        bool self_done = !self_loops;
        for (NodeId j : nbrs[i]) {
            if (!self_done && j > i) {
                m.col_idx.push_back(static_cast<std::uint32_t>(i));
                m.values.push_back(value(i, i));
                self_done = true;
            }
            m.col_idx.push_back(j);
            m.values.push_back(value(i, j));
        }
        if (!self_done) {
            m.col_idx.push_back(static_cast<std::uint32_t>(i));
            m.values.push_back(value(i, i));
        }
        m.row_ptr.push_back(m.col_idx.size());
    }
    return m;
}

}  // namespace

NormalizedAdjacency normalize_adjacency(const Graph& g) {
    const auto nbrs = neighbor_lists(g);
    std::vector<double> inv_sqrt(g.num_nodes);
    for (std::size_t i = 0; i < g.num_nodes; ++i) {
        inv_sqrt[i] = 1.0 / std::sqrt(static_cast<double>(nbrs[i].size()) + 1.0);
    }
    return {build_csr(nbrs, true, [&](std::size_t i, std::size_t j) {
        return static_cast<float>(inv_sqrt[i] * inv_sqrt[j]);
    })};
}

CsrMatrix mean_neighbor_operator(const Graph& g) {
    const auto nbrs = neighbor_lists(g);
    return build_csr(nbrs, false, [&](std::size_t i, std::size_t) {
        return static_cast<float>(1.0 / static_cast<double>(nbrs[i].size()));
    });
}

CsrMatrix sum_neighbor_operator(const Graph& g) {
    return build_csr(neighbor_lists(g), false, [](std::size_t, std::size_t) { return 1.0f; });
}

CsrMatrix feature_matrix(const Graph& g) {
    CsrMatrix m;
    m.rows = g.num_nodes;
    m.cols = g.feature_dim;
    for (std::size_t v = 0; v < g.num_nodes; ++v) {
        const auto row = g.feature_row(v);
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (row[j] != 0.0f) {
                m.col_idx.push_back(static_cast<std::uint32_t>(j));
                m.values.push_back(row[j]);
            }
        }
        m.row_ptr.push_back(m.col_idx.size());
    }
    return m;
}

GraphContext GraphContext::build(const Graph& g) {
    GraphContext ctx;
    ctx.graph = &g;
    ctx.adjacency = normalize_adjacency(g);
    ctx.mean_neighbors = mean_neighbor_operator(g);
    ctx.sum_neighbors = sum_neighbor_operator(g);
    ctx.features = feature_matrix(g);
    ctx.features_by_column = ctx.features.transposed();
    return ctx;
}

Graph split_masks(Graph g, const SplitPolicy& policy) {
    const std::size_t n = g.num_nodes;
    Rng rng(policy.seed);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(std::span<std::size_t>(order));

    g.masks.train.assign(n, 0);
    g.masks.val.assign(n, 0);
    g.masks.test.assign(n, 0);
    std::vector<std::size_t> taken(g.num_classes, 0);
    for (std::size_t v : order) {
        auto& count = taken[g.labels[v]];
        if (count < policy.train_per_class) {
            g.masks.train[v] = 1;
            ++count;
        }
    }
    for (std::size_t c = 0; c < g.num_classes; ++c) {
        if (taken[c] < policy.train_per_class) {
            throw std::invalid_argument("class " + std::to_string(c) + " has only " +
                                        std::to_string(taken[c]) + " nodes, " +
                                        std::to_string(policy.train_per_class) + " requested");
        }
    }
    std::size_t val = 0;
    std::size_t test = 0;
    for (std::size_t v : order) {
        if (g.masks.train[v]) continue;
        if (val < policy.num_val) {
            g.masks.val[v] = 1;
            ++val;
        } else if (test < policy.num_test) {
            g.masks.test[v] = 1;
            ++test;
        }
    }
    if (val < policy.num_val || test < policy.num_test) {
        throw std::invalid_argument("graph too small for the requested validation/test sizes");
    }
    return g;
}

Graph load_graph(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    if (!std::filesystem::exists(manifest_path)) {
        throw DataError("missing " + manifest_path.string());
    }
    json manifest;
    try {
        manifest = json::parse(io::read_text(manifest_path));
    } catch (const json::exception& e) {
        throw DataError("bad manifest " + manifest_path.string() + ": " + e.what());
    }

    Graph g;
    std::size_t num_edges = 0;
    bool masks_present = false;
    try {
        g.name = manifest.at("name").get<std::string>();
        g.num_nodes = manifest.at("num_nodes").get<std::size_t>();
        num_edges = manifest.at("num_edges").get<std::size_t>();
        g.feature_dim = manifest.at("feature_dim").get<std::size_t>();
        g.num_classes = manifest.at("num_classes").get<std::size_t>();
        masks_present = manifest.at("masks_present").get<bool>();
    } catch (const json::exception& e) {
        throw DataError("bad manifest " + manifest_path.string() + ": " + e.what());
    }

    g.features = io::read_array<float>(dir / "features.f32", g.num_nodes * g.feature_dim);
    g.labels = io::read_array<std::uint32_t>(dir / "labels.u32", g.num_nodes);
    const auto raw_edges = io::read_array<std::uint32_t>(dir / "edges.u32", 2 * num_edges);
    g.edges.resize(num_edges);
    for (std::size_t e = 0; e < num_edges; ++e) g.edges[e] = {raw_edges[2 * e], raw_edges[2 * e + 1]};
    if (masks_present) {
        const auto raw = io::read_array<std::uint8_t>(dir / "masks.u8", 3 * g.num_nodes);
        const auto n = static_cast<std::ptrdiff_t>(g.num_nodes);
        g.masks.train.assign(raw.begin(), raw.begin() + n);
        g.masks.val.assign(raw.begin() + n, raw.begin() + 2 * n);
        g.masks.test.assign(raw.begin() + 2 * n, raw.end());
        for (auto b : raw) {
            if (b > 1) throw DataError(g.name + ": mask byte not 0/1");
        }
    }
    g.validate();
    return g;
}

void save_graph(const Graph& g, const std::filesystem::path& dir) {
    g.validate();
    std::filesystem::create_directories(dir);
    const json manifest = {
        {"name", g.name},
        {"num_nodes", g.num_nodes},
        {"num_edges", g.num_edges()},
        {"feature_dim", g.feature_dim},
        {"num_classes", g.num_classes},
        {"masks_present", !g.masks.empty()},
    };
    io::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
    io::write_array<float>(dir / "features.f32", g.features);
    io::write_array<std::uint32_t>(dir / "labels.u32", g.labels);
    std::vector<std::uint32_t> raw_edges;
    raw_edges.reserve(2 * g.num_edges());
    for (const auto& e : g.edges) {
        raw_edges.push_back(e.src);
        raw_edges.push_back(e.dst);
    }
    io::write_array<std::uint32_t>(dir / "edges.u32", raw_edges);
    if (!g.masks.empty()) {
        std::vector<std::uint8_t> raw;
        raw.reserve(3 * g.num_nodes);
        for (const auto* m : {&g.masks.train, &g.masks.val, &g.masks.test}) {
            raw.insert(raw.end(), m->begin(), m->end());
        }
        io::write_array<std::uint8_t>(dir / "masks.u8", raw);
    } else {
        std::filesystem::remove(dir / "masks.u8");
    }
}

}  // namespace gbfa
