// Copyright (c) 2026, The gbfa-sim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Contextual block-model citation graphs. Class sizes, edge homophily and
// words-per-document follow the published statistics of the public citation
// benchmarks; topic_fraction is set so a feature-only MLP lands near its
// published accuracy on the real data (Cora ~0.57, PubMed ~0.71).

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "gbfa/graph.hpp"
#include "gbfa/rng.hpp"

namespace gbfa {

CitationProfile CitationProfile::cora() {
    CitationProfile p;
    p.name = "cora";
    p.num_nodes = 2708;
    p.num_edges = 5429;
    p.feature_dim = 1433;
    p.class_sizes = {351, 217, 418, 818, 426, 298, 180};
    p.homophily = 0.81;
    p.words_per_node = 18.2;
    p.topic_fraction = 0.375;
    p.topic_width = 0.15;
    p.tfidf = false;
    return p;
}

CitationProfile CitationProfile::pubmed() {
    CitationProfile p;
    p.name = "pubmed";
    p.num_nodes = 19717;
    p.num_edges = 44338;
    p.feature_dim = 500;
    p.class_sizes = {4103, 7739, 7875};
    p.homophily = 0.80;
    p.words_per_node = 50.1;
    p.topic_fraction = 0.21;
    p.topic_width = 0.3;
    p.tfidf = true;
    return p;
}

CitationProfile CitationProfile::by_name(const std::string& name) {
    if (name == "cora") return cora();
    if (name == "pubmed") return pubmed();
    throw std::invalid_argument("unknown dataset profile '" + name + "'");
}

namespace {

/// Inverse-CDF sampler over non-negative weights.
class WeightedSampler {
public:
    explicit WeightedSampler(std::span<const double> weights) : cdf_(weights.size()) {
        std::partial_sum(weights.begin(), weights.end(), cdf_.begin());
    }
    std::size_t draw(Rng& rng) const {
        const double x = rng.uniform() * cdf_.back();
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), x);
        return std::min(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
    }

private:
    std::vector<double> cdf_;
};

std::uint64_t pair_key(NodeId a, NodeId b) {
    if (a > b) std::swap(a, b);
    return (static_cast<std::uint64_t>(a) << 32) | b;
}

}  // namespace

Graph synthesize_citation_graph(const CitationProfile& profile, std::uint64_t seed) {
    const std::size_t n = profile.num_nodes;
    const std::size_t num_classes = profile.class_sizes.size();
    if (std::accumulate(profile.class_sizes.begin(), profile.class_sizes.end(), std::size_t{0}) != n) {
        throw std::invalid_argument("class sizes do not sum to num_nodes");
    }
    Rng rng(seed);

    Graph g;
    g.name = profile.name;
    g.num_nodes = n;
    g.feature_dim = profile.feature_dim;
    g.num_classes = num_classes;
    g.labels.reserve(n);
    for (std::size_t c = 0; c < num_classes; ++c) {
        g.labels.insert(g.labels.end(), profile.class_sizes[c], static_cast<std::uint32_t>(c));
    }
    rng.shuffle(std::span<std::uint32_t>(g.labels));

    // Heavy-tailed attachment weights give a citation-like degree profile.
    std::vector<double> attach(n);
    for (auto& a : attach) {
        const double u = rng.uniform();
        a = std::min(60.0, std::pow(1.0 - u, -1.0 / (profile.degree_exponent - 1.0)));
    }
    std::vector<std::vector<NodeId>> members(num_classes);
    std::vector<std::vector<double>> member_attach(num_classes);
    for (std::size_t v = 0; v < n; ++v) {
        members[g.labels[v]].push_back(static_cast<NodeId>(v));
        member_attach[g.labels[v]].push_back(attach[v]);
    }
    const WeightedSampler any_node(attach);
    std::vector<WeightedSampler> class_node;
    for (const auto& w : member_attach) class_node.emplace_back(w);

    std::unordered_set<std::uint64_t> present;
    g.edges.reserve(profile.num_edges);
    while (g.edges.size() < profile.num_edges) {
        const auto u = static_cast<NodeId>(any_node.draw(rng));
        NodeId v = 0;
        if (rng.uniform() < profile.homophily) {
            const auto c = g.labels[u];
            v = members[c][class_node[c].draw(rng)];
        } else {
            do {
                v = static_cast<NodeId>(any_node.draw(rng));
            } while (g.labels[v] == g.labels[u]);
        }
        if (u == v || !present.insert(pair_key(u, v)).second) continue;
        g.edges.push_back({std::min(u, v), std::max(u, v)});
    }

    // Background vocabulary follows a Zipf law; each class owns a topic slice.
    const std::size_t vocab = profile.feature_dim;
    std::vector<std::size_t> rank(vocab);
    std::iota(rank.begin(), rank.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(rank));
    std::vector<double> background(vocab);
    for (std::size_t j = 0; j < vocab; ++j) {
        background[j] = 1.0 / std::pow(static_cast<double>(rank[j]) + 10.0, 0.8);
    }
    const WeightedSampler background_words(background);
    const auto topic_size = std::max<std::size_t>(
        1, static_cast<std::size_t>(profile.topic_width * static_cast<double>(vocab)));
    std::vector<std::vector<std::size_t>> topic_words(num_classes);
    std::vector<WeightedSampler> topic_sampler;
    for (std::size_t c = 0; c < num_classes; ++c) {
        topic_words[c] = rng.sample_without_replacement(vocab, topic_size);
        std::vector<double> w(topic_size);
        for (auto& x : w) x = 0.2 + rng.uniform();
        topic_sampler.emplace_back(w);
    }

    std::vector<std::vector<std::pair<std::size_t, double>>> docs(n);
    std::vector<std::size_t> doc_freq(vocab, 0);
    for (std::size_t v = 0; v < n; ++v) {
        const double len = profile.words_per_node * std::exp(0.45 * rng.normal() - 0.1);
        const auto length = std::clamp<std::size_t>(static_cast<std::size_t>(std::lround(len)), 1,
                                                    vocab / 2);
        std::vector<double> counts(vocab, 0.0);
        std::size_t distinct = 0;
        for (std::size_t draws = 0; distinct < length && draws < 20 * length; ++draws) {
            const auto c = g.labels[v];
            const std::size_t word = rng.uniform() < profile.topic_fraction
                                         ? topic_words[c][topic_sampler[c].draw(rng)]
                                         : background_words.draw(rng);
            if (counts[word] == 0.0) ++distinct;
            counts[word] += 1.0;
        }
        double total = 0.0;
        for (std::size_t j = 0; j < vocab; ++j) {
            if (counts[j] > 0.0) {
                docs[v].emplace_back(j, counts[j]);
                ++doc_freq[j];
                total += counts[j];
            }
        }
        for (auto& [j, c] : docs[v]) c /= total;
    }

    g.features.assign(n * vocab, 0.0f);
    for (std::size_t v = 0; v < n; ++v) {
        for (const auto& [j, tf] : docs[v]) {
            float value = 1.0f;
            if (profile.tfidf) {
                const double idf = std::log(static_cast<double>(n) / static_cast<double>(doc_freq[j]));
                value = static_cast<float>(tf * idf);
            }
            g.features[v * vocab + j] = value;
        }
    }

    SplitPolicy policy;
    policy.seed = seed;
    return split_masks(std::move(g), policy);
}

}  // namespace gbfa
