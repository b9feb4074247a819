// Copyright (c) 2026, The gbfa-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "gbfa/model.hpp"
#include "model_internal.hpp"

namespace gbfa {

namespace {

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
};

class Adam {
public:
    Adam(const TrainConfig& cfg) : cfg_(cfg) {}

    template <typename T>
    void step(std::vector<T>& params, const std::vector<double>& grads, AdamState& state) {
        if (state.m.empty()) {
            state.m.assign(params.size(), 0.0);
            state.v.assign(params.size(), 0.0);
        }
        const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double g = grads[i] + cfg_.weight_decay * static_cast<double>(params[i]);
            state.m[i] = kBeta1 * state.m[i] + (1.0 - kBeta1) * g;
            state.v[i] = kBeta2 * state.v[i] + (1.0 - kBeta2) * g * g;
            const double update = cfg_.learning_rate * (state.m[i] / bc1) / (std::sqrt(state.v[i] / bc2) + kEps);
            params[i] = static_cast<T>(static_cast<double>(params[i]) - update);
        }
    }

    void tick() { ++t_; }

private:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;
    TrainConfig cfg_;
    std::size_t t_ = 0;
};

CsrMatrix drop_features(const CsrMatrix& x, double rate, Rng& rng) {
    CsrMatrix out = x;
    const double keep = 1.0 / (1.0 - rate);
    for (auto& v : out.values) v = rng.uniform() < rate ? 0.0f : static_cast<float>(v * keep);
    return out;
}

}  // namespace

TrainConfig default_train_config(ModelKind kind) {
    TrainConfig cfg;
    if (kind == ModelKind::GIN) {
        cfg.learning_rate = 0.001;
        cfg.dropout = 0.0;
    }
    return cfg;
}

TrainResult train(ModelKind kind, const std::vector<LayerSpec>& specs, const GraphContext& ctx,
                  const TrainConfig& config) {
    const Graph& g = ctx.g();
    if (g.masks.empty()) throw std::invalid_argument("graph has no split masks");
    if (config.dropout < 0.0 || config.dropout >= 1.0) throw std::invalid_argument("dropout must be in [0, 1)");

    TrainResult result;
    result.model = ModelParams::initialize(kind, specs, config.seed);
    result.model.check_compatible(g);
    Rng dropout_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

    ModelParams& model = result.model;
    const std::size_t num_layers = model.layers.size();
    std::vector<AdamState> w_state(num_layers), b_state(num_layers), e_state(num_layers);
    Adam adam(config);

    ModelParams best = model;
    double best_val_acc = -1.0;
    double best_val_loss = 0.0;
    std::size_t since_best = 0;

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        ForwardCache cache;
        CsrMatrix dropped;
        detail::DropoutPlan plan;
        if (config.dropout > 0.0) {
            dropped = drop_features(ctx.features, config.dropout, dropout_rng);
            plan = {config.dropout, &dropout_rng, &dropped};
        }
        detail::forward_impl(model, ctx, cache, 0, config.dropout > 0.0 ? &plan : nullptr);
        auto lg = backward(model, ctx, cache, g.masks.train, 0);
        if (!std::isfinite(lg.loss)) {
            throw TrainingDiverged("training loss became non-finite at epoch " + std::to_string(epoch));
        }
        adam.tick();
        for (std::size_t l = 0; l < num_layers; ++l) {
            auto& p = model.layers[l];
            adam.step(p.weight, lg.grads.weight[l], w_state[l]);
            adam.step(p.bias, lg.grads.bias[l], b_state[l]);
            if (p.spec.kind == LayerKind::GINMLP) {
                std::vector<float> eps{p.eps};
                adam.step(eps, {lg.grads.eps[l]}, e_state[l]);
                p.eps = eps[0];
            }
        }

        const auto eval = forward(model, ctx);
        const auto predicted = argmax_labels(eval.logits());
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = lg.loss;
        rec.train_accuracy = accuracy(predicted, g.labels, g.masks.train);
        rec.val_loss = masked_cross_entropy(eval.logits(), g.labels, g.masks.val, nullptr);
        rec.val_accuracy = accuracy(predicted, g.labels, g.masks.val);
        result.log.push_back(rec);

        if (rec.val_accuracy > best_val_acc ||
            (rec.val_accuracy == best_val_acc && rec.val_loss < best_val_loss)) {
            best_val_acc = rec.val_accuracy;
            best_val_loss = rec.val_loss;
            best = model;
            result.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= config.patience) {
            break;
        }
    }

    result.model = std::move(best);
    result.val_accuracy = best_val_acc;
    result.test_accuracy = evaluate(result.model, ctx, g.masks.test);
    return result;
}

}  // namespace gbfa
