// Copyright (c) 2026, The gbfa-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "gbfa/attack.hpp"

#include <algorithm>
#include <cmath>

#include "gbfa/rng.hpp"

namespace gbfa {

using json = nlohmann::json;

void AttackConfig::validate() const {
    if (!(ber > 0.0 && ber <= 1.0)) throw std::invalid_argument("BER must be in (0, 1]");
    for (std::size_t i = 1; i < ber_schedule.size(); ++i) {
        if (!(ber_schedule[i] > ber_schedule[i - 1])) {
            throw std::invalid_argument("BER schedule must be strictly increasing");
        }
    }
    for (double b : ber_schedule) {
        if (!(b > 0.0 && b <= 1.0)) throw std::invalid_argument("BER schedule entries must be in (0, 1]");
    }
    if (success_threshold < 0.0 || success_threshold > 1.0) {
        throw std::invalid_argument("success threshold must be in [0, 1]");
    }
}

std::size_t sample_count(double ber, std::size_t n) {
    // The epsilon absorbs decimal BERs that are not exact in binary
    // (0.001 * 32000 = 31.999...).
    const double x = ber * static_cast<double>(n) * (1.0 + 1e-12);
    return std::min(n, static_cast<std::size_t>(std::floor(x)));
}

double compute_asr(std::span<const std::uint32_t> pre, std::span<const std::uint32_t> post,
                   std::span<const std::uint8_t> mask) {
    if (pre.size() != post.size() || pre.size() != mask.size()) {
        throw std::invalid_argument("label vectors and mask differ in length");
    }
    std::size_t total = 0;
    std::size_t changed = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        ++total;
        if (pre[i] != post[i]) ++changed;
    }
    return total == 0 ? 0.0 : static_cast<double>(changed) / static_cast<double>(total);
}

namespace {

struct Attempt {
    AttemptSummary summary;
    std::size_t ignored = 0;
    double final_loss = 0.0;
    std::vector<double> loss_trace;
    std::vector<FlipRecord> flips;
};

Attempt attack_once(const ModelParams& clean, const ForwardCache& clean_cache, const GraphContext& ctx,
                    const AttackConfig& cfg, double ber, std::span<const std::uint32_t> clean_labels,
                    double baseline_acc) {
    const Graph& g = ctx.g();
    const auto& test = g.masks.test;
    const std::size_t layer = cfg.target_layer;

    ModelParams model = clean;
    ForwardCache cache = clean_cache;
    auto& weights = model.layers[layer].weight;

    Attempt a;
    a.summary.ber = ber;
    Rng rng(cfg.seed);
    const auto offsets = rng.sample_without_replacement(weights.size(), sample_count(ber, weights.size()));
    a.summary.sampled = offsets.size();

    // Under the batch cadence every gradient entry is read from the clean
    // cache, which is kept aside for that purpose.
    const ForwardCache* grad_cache = &clean_cache;
    auto grad = transform_gradient(model, ctx, cache, test, layer);
    a.final_loss = grad.loss;
    for (std::size_t offset : offsets) {
        const double dl_dw = weight_gradient_at(model, ctx, *grad_cache, grad, offset);
        const float w = weights[offset];
        if (!std::isfinite(dl_dw) || !std::isfinite(w)) {
            ++a.ignored;
            continue;
        }
        const auto bit = select_vulnerable_bit(dl_dw, w, cfg.bit_policy);
        if (!bit) {
            ++a.ignored;
            continue;
        }
        FlipRecord rec;
        rec.address = {layer, offset};
        rec.bit = *bit;
        rec.old_value = w;
        rec.new_value = flip_bit(w, *bit);
        rec.weight_gradient = dl_dw;
        rec.bit_gradient = bit_gradients(dl_dw, w).gradient[bit->value()];
        weights[offset] = rec.new_value;
        a.flips.push_back(rec);

        update_after_weight_change(model, ctx, cache, layer, offset);
        if (cfg.cadence == Cadence::Progressive) {
            grad = transform_gradient(model, ctx, cache, test, layer);
            grad_cache = &cache;
            a.final_loss = grad.loss;
        } else {
            a.final_loss = masked_cross_entropy(cache.logits(), g.labels, test, nullptr);
        }
        a.loss_trace.push_back(a.final_loss);
    }

    const auto post = argmax_labels(cache.logits());
    a.summary.n_bit = a.flips.size();
    a.summary.pac = accuracy(post, g.labels, test);
    a.summary.asr = compute_asr(clean_labels, post, test);
    a.summary.success = baseline_acc - a.summary.pac >= cfg.success_threshold;
    return a;
}

}  // namespace

AttackReport run_gbfa(ModelParams model, const GraphContext& ctx, const AttackConfig& config) {
    config.validate();
    model.check_compatible(ctx.g());
    if (config.target_layer >= model.num_layers()) {
        throw std::invalid_argument("target layer " + std::to_string(config.target_layer + 1) +
                                    " out of range (model has " + std::to_string(model.num_layers()) +
                                    " layers)");
    }
    const Graph& g = ctx.g();

    const auto clean_cache = forward(model, ctx);
    const auto clean_labels = argmax_labels(clean_cache.logits());

    AttackReport report;
    report.attack = "gbfa";
    report.config = config;
    report.layer_weight_count = model.layers[config.target_layer].weight_count();
    report.baseline_accuracy = accuracy(clean_labels, g.labels, g.masks.test);
    report.baseline_loss = masked_cross_entropy(clean_cache.logits(), g.labels, g.masks.test, nullptr);

    std::vector<double> bers{config.ber};
    if (config.escalate) {
        for (double b : config.ber_schedule) if (b > config.ber) bers.push_back(b);
    }

    Attempt last;
    for (double ber : bers) {
        last = attack_once(model, clean_cache, ctx, config, ber, clean_labels, report.baseline_accuracy);
        report.attempts.push_back(last.summary);
        if (last.summary.success) break;
    }

    report.config.ber = last.summary.ber;
    report.sampled = last.summary.sampled;
    report.ignored = last.ignored;
    report.n_bit = last.summary.n_bit;
    report.pac = last.summary.pac;
    report.asr = last.summary.asr;
    report.success = last.summary.success;
    report.final_loss = last.final_loss;
    report.loss_trace = std::move(last.loss_trace);
    report.flip_log = std::move(last.flips);
    if (report.sampled > 0 && report.n_bit == 0) {
        report.status = "no_eligible_weights";
    } else if (config.escalate && !report.success) {
        report.status = "failed";
    }
    return report;
}

AttackReport run_random_baseline(ModelParams model, const GraphContext& ctx, double ber,
                                 std::uint64_t seed) {
    if (!(ber > 0.0 && ber <= 1.0)) throw std::invalid_argument("BER must be in (0, 1]");
    model.check_compatible(ctx.g());
    const Graph& g = ctx.g();

    const auto clean_cache = forward(model, ctx);
    const auto clean_labels = argmax_labels(clean_cache.logits());

    AttackReport report;
    report.attack = "random";
    report.config.ber = ber;
    report.config.seed = seed;
    report.config.ber_schedule.clear();
    report.layer_weight_count = model.total_weights();
    report.baseline_accuracy = accuracy(clean_labels, g.labels, g.masks.test);
    report.baseline_loss = masked_cross_entropy(clean_cache.logits(), g.labels, g.masks.test, nullptr);

    std::vector<std::size_t> layer_start;
    std::size_t total = 0;
    for (const auto& l : model.layers) {
        layer_start.push_back(total);
        total += l.weight_count();
    }
    Rng rng(seed);
    const auto picks = rng.sample_without_replacement(total, sample_count(ber, total));
    report.sampled = picks.size();
    for (std::size_t flat : picks) {
        const auto layer = static_cast<std::size_t>(
            std::upper_bound(layer_start.begin(), layer_start.end(), flat) - layer_start.begin() - 1);
        const std::size_t offset = flat - layer_start[layer];
        const BitIndex bit(static_cast<unsigned>(rng.below(32)));
        auto& w = model.layers[layer].weight[offset];
        FlipRecord rec;
        rec.address = {layer, offset};
        rec.bit = bit;
        rec.old_value = w;
        rec.new_value = flip_bit(w, bit);
        w = rec.new_value;
        report.flip_log.push_back(rec);
    }

    const auto cache = forward(model, ctx);
    const auto post = argmax_labels(cache.logits());
    report.n_bit = report.flip_log.size();
    report.pac = accuracy(post, g.labels, g.masks.test);
    report.asr = compute_asr(clean_labels, post, g.masks.test);
    report.final_loss = masked_cross_entropy(cache.logits(), g.labels, g.masks.test, nullptr);
    report.success = report.baseline_accuracy - report.pac >= report.config.success_threshold;
    return report;
}

namespace {

/// JSON has no NaN/Inf; non-finite doubles are written as strings.
json number(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

}  // namespace

json to_json(const AttackConfig& c) {
    return {
        {"target_layer", c.target_layer + 1},
        {"ber", c.ber},
        {"seed", c.seed},
        {"ber_schedule", c.ber_schedule},
        {"success_threshold", c.success_threshold},
        {"escalate", c.escalate},
        {"cadence", c.cadence == Cadence::Progressive ? "progressive" : "batch"},
        {"flip_rule", c.bit_policy.rule == FlipRule::Indicator ? "indicator" : "sign-step"},
        {"allow_nan", c.bit_policy.allow_nan},
        {"allow_inf", c.bit_policy.allow_inf},
    };
}

json to_json(const AttackReport& r) {
    json flips = json::array();
    for (const auto& f : r.flip_log) {
        flips.push_back({
            {"layer", f.address.layer + 1},
            {"offset", f.address.offset},
            {"bit", f.bit.value()},
            {"old_value", number(f.old_value)},
            {"new_value", number(f.new_value)},
            {"old_bits", bits_of(f.old_value)},
            {"new_bits", bits_of(f.new_value)},
            {"weight_gradient", number(f.weight_gradient)},
            {"bit_gradient", number(f.bit_gradient)},
        });
    }
    json trace = json::array();
    for (double l : r.loss_trace) trace.push_back(number(l));
    json attempts = json::array();
    for (const auto& a : r.attempts) {
        attempts.push_back({{"ber", a.ber}, {"sampled", a.sampled}, {"n_bit", a.n_bit},
                            {"pac", a.pac}, {"asr", a.asr}, {"success", a.success}});
    }
    json out = {
        {"attack", r.attack},
        {"config", to_json(r.config)},
        {"layer_weight_count", r.layer_weight_count},
        {"sampled", r.sampled},
        {"ignored", r.ignored},
        {"n_bit", r.n_bit},
        {"baseline_accuracy", r.baseline_accuracy},
        {"baseline_loss", number(r.baseline_loss)},
        {"pac", r.pac},
        {"asr", r.asr},
        {"final_loss", number(r.final_loss)},
        {"success", r.success},
        {"status", r.status},
        {"loss_trace", trace},
        {"flip_log", flips},
        {"attempts", attempts},
    };
    if (r.attack == "random") out["config"].erase("target_layer");
    return out;
}

}  // namespace gbfa
