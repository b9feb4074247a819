// Copyright (c) 2026, The gbfa-sim Authors
// SPDX-License-Identifier: Apache-2.0
//
// Layer-aware gradual bit-flip attack, the random-flip baseline, and sweeps
// over (model, layer, BER, seed) grids.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "gbfa/bitflip.hpp"
#include "gbfa/model.hpp"

namespace gbfa {

struct WeightAddress {
    std::size_t layer = 0;  // 0-based
    std::size_t offset = 0;
    friend bool operator==(const WeightAddress&, const WeightAddress&) = default;
};

enum class Cadence {
    /// Gradients recomputed after every applied flip.
    Progressive,
    /// One gradient evaluation for all sampled weights.
    Batch,
};

inline const std::vector<double> kDefaultBerSchedule{1e-4, 1e-3, 1e-2, 1e-1};

struct AttackConfig {
    std::size_t target_layer = 0;  // 0-based
    double ber = 1e-2;
    std::uint64_t seed = 0;
    std::vector<double> ber_schedule = kDefaultBerSchedule;
    double success_threshold = 0.05;  // accuracy drop, as a fraction
    bool escalate = false;            // walk up the schedule until success
    Cadence cadence = Cadence::Progressive;
    BitPolicy bit_policy;

    /// Throws std::invalid_argument on out-of-range values.
    void validate() const;
};

/// Number of weights a BER selects out of n: floor(ber * n).
std::size_t sample_count(double ber, std::size_t n);

struct FlipRecord {
    WeightAddress address;
    BitIndex bit;
    float old_value = 0.0f;
    float new_value = 0.0f;
    double weight_gradient = 0.0;  // dL/dw when the flip was chosen
    double bit_gradient = 0.0;     // dL/db_i
};

struct AttemptSummary {
    double ber = 0.0;
    std::size_t sampled = 0;
    std::size_t n_bit = 0;
    double pac = 0.0;
    double asr = 0.0;
    bool success = false;
};

struct AttackReport {
    std::string attack = "gbfa";  // or "random"
    AttackConfig config;
    std::size_t layer_weight_count = 0;
    std::size_t sampled = 0;
    std::size_t ignored = 0;
    std::size_t n_bit = 0;
    double baseline_accuracy = 0.0;
    double baseline_loss = 0.0;
    double pac = 0.0;
    double asr = 0.0;
    double final_loss = 0.0;
    bool success = false;
    /// "ok", "no_eligible_weights" or "failed" (threshold not reached).
    std::string status = "ok";
    std::vector<double> loss_trace;
    std::vector<FlipRecord> flip_log;
    std::vector<AttemptSummary> attempts;
};

/// |{v in mask : pre[v] != post[v]}| / |mask|
double compute_asr(std::span<const std::uint32_t> pre, std::span<const std::uint32_t> post,
                   std::span<const std::uint8_t> mask);

/// Gradual bit-flip attack on one layer. Weights are sampled uniformly
/// without replacement; each gets at most one flip of its most vulnerable
/// eligible bit. Loss and gradients use the test mask.
AttackReport run_gbfa(ModelParams model, const GraphContext& ctx, const AttackConfig& config);

/// Flips one uniformly random bit in each of floor(ber * total) weights drawn
/// across all layers.
AttackReport run_random_baseline(ModelParams model, const GraphContext& ctx, double ber,
                                 std::uint64_t seed);

nlohmann::json to_json(const AttackConfig& config);
nlohmann::json to_json(const AttackReport& report);

enum class AttackKind { GBFA, Random };

struct SweepTarget {
    std::string model_name;
    std::string dataset_name;
    const ModelParams* model = nullptr;
    const GraphContext* ctx = nullptr;
};

struct SweepSpec {
    AttackKind kind = AttackKind::GBFA;
    /// 0-based; nullopt = every layer of each target, empty = no cells.
    /// Ignored for the random baseline.
    std::optional<std::vector<std::size_t>> layers;
    std::vector<double> bers;
    std::vector<std::uint64_t> seeds;
    AttackConfig base;  // cadence, policy, threshold
};

struct SweepRow {
    std::string model;
    std::string dataset;
    std::string attack;
    std::size_t layer = 0;  // 1-based; 0 = whole model (random baseline)
    double ber = 0.0;
    std::uint64_t seed = 0;
    double pac = 0.0;
    double asr = 0.0;
    std::size_t n_bit = 0;
    std::size_t sampled = 0;
    double baseline_acc = 0.0;
    std::string status = "ok";  // report status, or "error" when the run threw
    std::string error;          // message for status "error"; not part of the CSV
};

/// Receives (row index, full report) for each finished cell. Called from
/// worker threads.
using SweepReportSink = std::function<void(std::size_t, const AttackReport&)>;

/// Runs every (target, layer, ber, seed) cell, up to `jobs` concurrently.
/// Row order follows the grid order regardless of scheduling. A cell that
/// throws is recorded with status "error" and the sweep continues.
std::vector<SweepRow> run_sweep(const std::vector<SweepTarget>& targets, const SweepSpec& spec,
                                std::size_t jobs = 1, const SweepReportSink& sink = {});

std::string sweep_csv(const std::vector<SweepRow>& rows);
std::vector<SweepRow> parse_sweep_csv(const std::string& text);

struct CellStats {
    std::string model;
    std::string dataset;
    std::string attack;
    std::size_t layer = 0;
    double ber = 0.0;
    std::size_t runs = 0;
    double mean_pac = 0.0;
    double std_pac = 0.0;
    double mean_asr = 0.0;
    double mean_n_bit = 0.0;
    double baseline_acc = 0.0;
};

/// Groups rows by (model, dataset, attack, layer, ber) in first-seen order.
std::vector<CellStats> aggregate(const std::vector<SweepRow>& rows);

}  // namespace gbfa
