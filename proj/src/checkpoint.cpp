// Copyright (c) 2026, The gbfa-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include <nlohmann/json.hpp>

#include "gbfa/binary_io.hpp"
#include "gbfa/model.hpp"

namespace gbfa {

using json = nlohmann::json;

namespace {

std::string activation_name(Activation a) { return a == Activation::ReLU ? "relu" : "none"; }

Activation activation_from(const std::string& s) {
    if (s == "relu") return Activation::ReLU;
    if (s == "none") return Activation::None;
    throw DataError("unknown activation '" + s + "'");
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    json layers = json::array();
    std::vector<float> payload;
    for (const auto& l : ckpt.model.layers) {
        layers.push_back({
            {"kind", to_string(l.spec.kind)},
            {"in_dim", l.spec.in_dim},
            {"out_dim", l.spec.out_dim},
            {"activation", activation_name(l.spec.activation)},
            {"weight_count", l.weight_count()},
            {"bias_count", l.bias.size()},
            {"has_eps", l.spec.kind == LayerKind::GINMLP},
        });
        payload.insert(payload.end(), l.weight.begin(), l.weight.end());
        payload.insert(payload.end(), l.bias.begin(), l.bias.end());
        if (l.spec.kind == LayerKind::GINMLP) payload.push_back(l.eps);
    }
    const json manifest = {
        {"format", "gbfa-checkpoint-v1"},
        {"model", to_string(ckpt.model.kind)},
        {"dataset", ckpt.dataset},
        {"seed", ckpt.seed},
        {"layers", layers},
        {"layer_weight_counts", ckpt.model.layer_weight_counts()},
        {"total_trained_weights", ckpt.model.total_weights()},
        {"hyperparams",
         {{"learning_rate", ckpt.config.learning_rate},
          {"weight_decay", ckpt.config.weight_decay},
          {"max_epochs", ckpt.config.max_epochs},
          {"patience", ckpt.config.patience},
          {"dropout", ckpt.config.dropout}}},
        {"best_epoch", ckpt.best_epoch},
        {"val_accuracy", ckpt.val_accuracy},
        {"test_accuracy", ckpt.test_accuracy},
    };
    io::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
    io::write_array<float>(dir / "weights.f32", payload);
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
    const auto manifest_path = dir / "manifest.json";
    if (!std::filesystem::exists(manifest_path)) throw DataError("missing " + manifest_path.string());
    Checkpoint ckpt;
    std::size_t payload_size = 0;
    try {
        const auto m = json::parse(io::read_text(manifest_path));
        if (m.at("format") != "gbfa-checkpoint-v1") throw DataError("unsupported checkpoint format");
        ckpt.model.kind = model_kind_from_string(m.at("model").get<std::string>());
        ckpt.dataset = m.at("dataset").get<std::string>();
        ckpt.seed = m.at("seed").get<std::uint64_t>();
        const auto& hp = m.at("hyperparams");
        ckpt.config.learning_rate = hp.at("learning_rate").get<double>();
        ckpt.config.weight_decay = hp.at("weight_decay").get<double>();
        ckpt.config.max_epochs = hp.at("max_epochs").get<std::size_t>();
        ckpt.config.patience = hp.at("patience").get<std::size_t>();
        ckpt.config.dropout = hp.at("dropout").get<double>();
        ckpt.config.seed = ckpt.seed;
        ckpt.best_epoch = m.at("best_epoch").get<std::size_t>();
        ckpt.val_accuracy = m.at("val_accuracy").get<double>();
        ckpt.test_accuracy = m.at("test_accuracy").get<double>();
        for (const auto& jl : m.at("layers")) {
            LayerParams p;
            p.spec.kind = layer_kind_from_string(jl.at("kind").get<std::string>());
            p.spec.in_dim = jl.at("in_dim").get<std::size_t>();
            p.spec.out_dim = jl.at("out_dim").get<std::size_t>();
            p.spec.activation = activation_from(jl.at("activation").get<std::string>());
            if (jl.at("weight_count").get<std::size_t>() != p.spec.in_dim * p.spec.out_dim ||
                jl.at("bias_count").get<std::size_t>() != p.spec.out_dim) {
                throw DataError("layer counts inconsistent with dims");
            }
            p.weight.resize(p.spec.in_dim * p.spec.out_dim);
            p.bias.resize(p.spec.out_dim);
            payload_size += p.weight.size() + p.bias.size() + (p.spec.kind == LayerKind::GINMLP ? 1 : 0);
            ckpt.model.layers.push_back(std::move(p));
        }
    } catch (const json::exception& e) {
        throw DataError("bad checkpoint manifest " + manifest_path.string() + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError("bad checkpoint manifest " + manifest_path.string() + ": " + e.what());
    }
    const auto payload = io::read_array<float>(dir / "weights.f32", payload_size);
    std::size_t pos = 0;
    for (auto& p : ckpt.model.layers) {
        std::copy_n(payload.begin() + static_cast<std::ptrdiff_t>(pos), p.weight.size(), p.weight.begin());
        pos += p.weight.size();
        std::copy_n(payload.begin() + static_cast<std::ptrdiff_t>(pos), p.bias.size(), p.bias.begin());
        pos += p.bias.size();
        if (p.spec.kind == LayerKind::GINMLP) p.eps = payload[pos++];
    }
    return ckpt;
}

}  // namespace gbfa
