// Copyright (c) 2026, The gbfa-sim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Run-time layer-sequence prediction from kernel execution features.
//
// An accelerator runs a GNN as a stream of kernels. Each layer is lowered to
// kernels according to this table (with TraceOptions::max_tiles > 1, ops on
// more than 4096 rows are split into consecutive kernels with the same label):
//
//   layer kind   kernels (in order)
//   ----------   -----------------------------------------------
//   GCNConv      [EdgeUpdate] Aggregate  Transform
//   SAGEMean     [EdgeUpdate] Aggregate  Transform (also reads layer input)
//   GINMLP       [EdgeUpdate] Aggregate  Transform
//   Linear       Transform
//
// A memory-copy kernel (label BLANK) separates consecutive layers. With
// TraceOptions::readout a Readout kernel follows the last graph layer, and
// every trace ends with one Output kernel (softmax + argmax). EdgeUpdate
// kernels appear only with TraceOptions::edge_update.
//
// The label sequence of a trace is the CTC collapse of its kernel labels, so
// a 2-layer GCN reads [Aggregate, Transform, Aggregate, Transform, Output].

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "gbfa/model.hpp"

namespace gbfa::sniff {

enum class LayerLabel : std::uint8_t { Blank = 0, Aggregate, Transform, EdgeUpdate, Readout, Output };
inline constexpr std::size_t kNumLabels = 6;

std::string to_string(LayerLabel l);
LayerLabel label_from_string(const std::string& s);
std::string to_string(const std::vector<LayerLabel>& seq);

struct KernelFeature {
    double exe_lat = 0.0;   // cycles
    double r_v = 0.0;       // bytes read
    double w_v = 0.0;       // bytes written
    double io_ratio = 0.0;  // previous kernel's w_v / this kernel's w_v
    double kdd = 0.0;       // max read-after-write distance, integral

    static constexpr std::size_t kDim = 5;
    std::array<double, kDim> as_array() const { return {exe_lat, r_v, w_v, io_ratio, kdd}; }
};

struct KernelTrace {
    std::vector<KernelFeature> kernels;
    std::vector<LayerLabel> kernel_labels;  // one per kernel; may be empty when unlabeled

    /// Collapsed ground-truth layer sequence.
    std::vector<LayerLabel> sequence() const;
};

/// Workload a kernel stream is synthesized for.
struct TraceOptions {
    double noise = 0.05;  // relative stddev of multiplicative Gaussian noise
    std::uint64_t seed = 0;
    std::size_t num_nodes = 2708;
    std::size_t num_edges = 5429;
    bool edge_update = false;
    bool readout = false;
    std::size_t max_tiles = 1;
};

/// Raw kernel event before noise: per-kernel work and the kernels whose
/// outputs it reads.
struct KernelEvent {
    LayerLabel label = LayerLabel::Blank;
    double flops = 0.0;
    double read_bytes = 0.0;
    double write_bytes = 0.0;
    std::vector<std::size_t> reads_from;  // earlier kernel indices
};

/// Deterministic lowering of an architecture to kernel events (see table).
std::vector<KernelEvent> lower_architecture(const std::vector<LayerSpec>& arch, const TraceOptions& opts);

/// Features from events: latency from a roofline model, io_ratio from the
/// previous kernel's writes, kdd = max(t - t_dep) over read dependencies.
/// Multiplicative noise is applied to latency, volumes and kdd.
std::vector<KernelFeature> derive_features(const std::vector<KernelEvent>& events, double noise,
                                           std::uint64_t seed, double input_bytes);

/// Throws std::invalid_argument on an empty architecture or negative noise.
KernelTrace synthesize_trace(const std::vector<LayerSpec>& arch, const TraceOptions& opts);

/// Random architecture/workload for building trace corpora: 2-4 graph
/// layers of one family (GIN adds a Linear classifier; MLP is all Linear),
/// hidden widths 16-256, 500-30499 nodes. Without a fixed family, 15% of
/// traces add edge updates and 15% a readout.
struct RandomTraceSpec {
    std::vector<LayerSpec> arch;
    TraceOptions opts;
};
RandomTraceSpec random_trace_spec(std::uint64_t seed, double noise,
                                  std::optional<ModelKind> family = std::nullopt);

struct HmmParams {
    std::vector<LayerLabel> states;
    std::vector<double> initial;
    std::vector<std::vector<double>> transition;  // row-stochastic
    std::vector<std::array<double, KernelFeature::kDim>> mean;
    std::vector<std::array<double, KernelFeature::kDim>> var;
    // z-score parameters of log1p(feature)
    std::array<double, KernelFeature::kDim> feature_mean{};
    std::array<double, KernelFeature::kDim> feature_std{};

    std::size_t num_states() const { return states.size(); }
    /// Index of the BLANK state, or npos.
    std::size_t blank_index() const;
};

inline constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

/// Features after log1p and z-scoring with the fitted parameters.
std::array<double, KernelFeature::kDim> standardize(const HmmParams& hmm, const KernelFeature& f);

/// Supervised maximum-likelihood fit over labeled traces: transition counts
/// with add-alpha smoothing, Gaussian moments per state. `states` defaults to
/// the full alphabet; every state must occur in the data. A state never left
/// (alpha = 0) gets a self-loop row.
HmmParams fit_hmm(const std::vector<KernelTrace>& traces, std::vector<LayerLabel> states = {},
                  double alpha = 1.0);

struct Posteriors {
    std::vector<LayerLabel> labels;         // column meaning
    std::vector<std::vector<double>> rows;  // T x labels.size()
};

/// Forward-algorithm filtering, normalized per step.
Posteriors posteriors(const HmmParams& hmm, const KernelTrace& trace);

inline constexpr std::size_t kUnboundedBeam = std::numeric_limits<std::size_t>::max();

struct CtcResult {
    std::vector<std::size_t> symbols;  // column indices, blank removed
    double log_prob = 0.0;             // log P(symbols | posteriors)
};

/// CTC prefix beam search over a T x K probability matrix.
CtcResult ctc_beam_search(const std::vector<std::vector<double>>& probs, std::size_t blank,
                          std::size_t beam_width);

struct PredictedSequence {
    std::vector<LayerLabel> labels;
    double log_prob = 0.0;
    Posteriors posteriors;
};

PredictedSequence ctc_beam_decode(const Posteriors& post, std::size_t beam_width);

/// Levenshtein distance.
template <class Seq>
std::size_t edit_distance(const Seq& a, const Seq& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

/// edit_distance(predicted, truth) / |truth|. Throws on empty truth.
double ler(const std::vector<LayerLabel>& predicted, const std::vector<LayerLabel>& truth);
double mean_ler(const std::vector<std::vector<LayerLabel>>& predicted,
                const std::vector<std::vector<LayerLabel>>& truth);

// JSON-lines trace files: one kernel per line {t, exe_lat, r_v, w_v,
// io_ratio, kdd, label?}.
void write_trace(const KernelTrace& trace, const std::filesystem::path& path);
KernelTrace read_trace(const std::filesystem::path& path);

nlohmann::json to_json(const HmmParams& hmm);
HmmParams hmm_from_json(const nlohmann::json& j);

}  // namespace gbfa::sniff
