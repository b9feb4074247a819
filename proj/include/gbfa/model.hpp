// Copyright (c) 2026, The gbfa-sim Authors
// SPDX-License-Identifier: Apache-2.0
//
// GCN / GraphSAGE-mean / GIN node classifiers with hand-written backprop.
//
// Weights are stored as FP32 (the fault-injection target); activations,
// losses and gradients are carried in FP64.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gbfa/graph.hpp"

namespace gbfa {

enum class LayerKind { GCNConv, SAGEMean, GINMLP, Linear };
enum class Activation { ReLU, None };

std::string to_string(LayerKind kind);
LayerKind layer_kind_from_string(const std::string& s);

struct LayerSpec {
    LayerKind kind = LayerKind::GCNConv;
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    Activation activation = Activation::ReLU;
};

struct LayerParams {
    LayerSpec spec;
    std::vector<float> weight;  // row-major [in_dim x out_dim]
    std::vector<float> bias;    // [out_dim]
    float eps = 0.0f;           // GIN only

    std::size_t weight_count() const { return weight.size(); }
};

/// Model families exposed on the command line.
enum class ModelKind { GCN, SAGE, GIN, MLP };
std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

struct ModelParams {
    ModelKind kind = ModelKind::GCN;
    std::vector<LayerParams> layers;

    /// Glorot-uniform weights, zero biases, eps = 0.
    static ModelParams initialize(ModelKind kind, const std::vector<LayerSpec>& specs,
                                  std::uint64_t seed);

    std::size_t num_layers() const { return layers.size(); }
    /// Trained-weight count (biases and eps excluded).
    std::size_t total_weights() const;
    std::vector<std::size_t> layer_weight_counts() const;
    /// Throws std::invalid_argument if the layer chain does not fit the graph.
    void check_compatible(const Graph& g) const;
    bool all_finite() const;
};

/// Layer stacks per model family. Hidden sizes for the two citation datasets
/// reproduce the published trained-weight counts; other graphs get defaults.
std::vector<LayerSpec> default_architecture(ModelKind kind, const Graph& g);

/// Row-major FP64 matrix.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

/// Per-layer intermediates kept for the backward pass.
struct ForwardCache {
    const CsrMatrix* features = nullptr;       // layer-0 input
    std::vector<DenseMatrix> dropped_inputs;   // layer inputs after dropout (training only)
    std::vector<std::vector<float>> dropout_scale;
    std::vector<DenseMatrix> transformed;      // H_l W_l
    std::vector<DenseMatrix> pre;              // aggregated + bias
    std::vector<DenseMatrix> post;             // after activation

    const DenseMatrix& logits() const { return post.back(); }
    /// Dense input of layer l >= 1.
    const DenseMatrix& input(std::size_t l) const;
};

struct WeightGradients {
    std::vector<std::vector<double>> weight;  // shaped like LayerParams::weight
    std::vector<std::vector<double>> bias;
    std::vector<double> eps;
};

struct LossAndGrads {
    double loss = 0.0;
    WeightGradients grads;
};

/// Logits and cache. Non-finite activations are propagated, not rejected.
ForwardCache forward(const ModelParams& model, const GraphContext& ctx);

/// Recomputes layers [first_layer, L) of an existing evaluation-mode cache,
/// e.g. after editing weights of first_layer.
void forward_from(const ModelParams& model, const GraphContext& ctx, ForwardCache& cache,
                  std::size_t first_layer);

/// Mean cross-entropy over masked nodes; fills dlogits when non-null.
double masked_cross_entropy(const DenseMatrix& logits, std::span<const std::uint32_t> labels,
                            std::span<const std::uint8_t> mask, DenseMatrix* dlogits);

/// Reverse-mode gradients from an existing cache. Layers below
/// lowest_layer are skipped (their gradient arrays stay empty).
LossAndGrads backward(const ModelParams& model, const GraphContext& ctx, const ForwardCache& cache,
                      std::span<const std::uint8_t> mask, std::size_t lowest_layer = 0);

/// Refreshes an evaluation-mode cache after a single weight (layer, offset)
/// changed: one output column of that layer, then all later layers. The
/// result is bit-identical to forward().
void update_after_weight_change(const ModelParams& model, const GraphContext& ctx, ForwardCache& cache,
                                std::size_t layer, std::size_t offset);

/// dL/d(H_l W_l) of one layer and the loss; single entries of dL/dW_l are
/// read from it without forming the whole gradient.
struct TransformGradient {
    std::size_t layer = 0;
    double loss = 0.0;
    DenseMatrix dtransformed;
};

TransformGradient transform_gradient(const ModelParams& model, const GraphContext& ctx, const ForwardCache& cache,
                                     std::span<const std::uint8_t> mask, std::size_t layer);

/// Equals backward(...).grads.weight[layer][offset] bit for bit.
double weight_gradient_at(const ModelParams& model, const GraphContext& ctx, const ForwardCache& cache,
                          const TransformGradient& grad, std::size_t offset);

/// Forward + backward. Throws std::invalid_argument on an empty mask.
LossAndGrads loss_and_grads(const ModelParams& model, const GraphContext& ctx,
                            std::span<const std::uint8_t> mask);

inline constexpr std::uint32_t kInvalidLabel = std::numeric_limits<std::uint32_t>::max();

/// Argmax per row, ties to the lowest class; rows with any non-finite logit
/// get kInvalidLabel.
std::vector<std::uint32_t> argmax_labels(const DenseMatrix& logits);
std::vector<std::uint32_t> predict_labels(const ModelParams& model, const GraphContext& ctx);
double accuracy(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> labels,
                std::span<const std::uint8_t> mask);
double evaluate(const ModelParams& model, const GraphContext& ctx, std::span<const std::uint8_t> mask);

struct TrainConfig {
    double learning_rate = 0.01;
    double weight_decay = 5e-4;
    std::size_t max_epochs = 300;
    std::size_t patience = 100;
    double dropout = 0.5;
    std::uint64_t seed = 0;
};

/// Per-family defaults. GIN's unnormalized sum aggregation needs a smaller
/// step and no dropout to train stably.
TrainConfig default_train_config(ModelKind kind);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
};

struct TrainResult {
    ModelParams model;
    std::vector<EpochRecord> log;
    std::size_t best_epoch = 0;
    double val_accuracy = 0.0;
    double test_accuracy = 0.0;
};

class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Adam with L2 weight decay and dropout on layer inputs; keeps the
/// parameters of the best validation epoch. Single-threaded and
/// deterministic per seed.
TrainResult train(ModelKind kind, const std::vector<LayerSpec>& specs, const GraphContext& ctx,
                  const TrainConfig& config);

/// Checkpoint directory: manifest.json + weights.f32 (per layer: weight,
/// bias, then eps for GIN layers, little-endian, layer order).
struct Checkpoint {
    ModelParams model;
    std::string dataset;
    std::uint64_t seed = 0;
    TrainConfig config;
    double val_accuracy = 0.0;
    double test_accuracy = 0.0;
    std::size_t best_epoch = 0;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& dir);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

}  // namespace gbfa
