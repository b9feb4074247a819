// Copyright (c) 2026, The gbfa-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "gbfa/model.hpp"

#include <algorithm>
#include <cmath>

#include "model_internal.hpp"

namespace gbfa {

std::string to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::GCNConv: return "GCNConv";
        case LayerKind::SAGEMean: return "SAGEConv-mean";
        case LayerKind::GINMLP: return "GIN-MLP";
        case LayerKind::Linear: return "Linear";
    }
    return "?";
}

LayerKind layer_kind_from_string(const std::string& s) {
    for (auto k : {LayerKind::GCNConv, LayerKind::SAGEMean, LayerKind::GINMLP, LayerKind::Linear}) {
        if (to_string(k) == s) return k;
    }
    throw std::invalid_argument("unknown layer kind '" + s + "'");
}

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::GCN: return "gcn";
        case ModelKind::SAGE: return "sage";
        case ModelKind::GIN: return "gin";
        case ModelKind::MLP: return "mlp";
    }
    return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "gcn") return ModelKind::GCN;
    if (s == "sage" || s == "graphsage") return ModelKind::SAGE;
    if (s == "gin") return ModelKind::GIN;
    if (s == "mlp") return ModelKind::MLP;
    throw std::invalid_argument("unknown model kind '" + s + "'");
}

ModelParams ModelParams::initialize(ModelKind kind, const std::vector<LayerSpec>& specs,
                                    std::uint64_t seed) {
    if (specs.empty()) throw std::invalid_argument("model needs at least one layer");
    Rng rng(seed);
    ModelParams m;
    m.kind = kind;
    for (std::size_t l = 0; l < specs.size(); ++l) {
        const auto& s = specs[l];
        if (s.in_dim == 0 || s.out_dim == 0) throw std::invalid_argument("layer dims must be positive");
        if (l > 0 && specs[l - 1].out_dim != s.in_dim) {
            throw std::invalid_argument("layer " + std::to_string(l + 1) + " input does not match previous output");
        }
        LayerParams p;
        p.spec = s;
        p.weight.resize(s.in_dim * s.out_dim);
        const double limit = std::sqrt(6.0 / static_cast<double>(s.in_dim + s.out_dim));
        for (auto& w : p.weight) w = static_cast<float>(rng.uniform(-limit, limit));
        p.bias.assign(s.out_dim, 0.0f);
        m.layers.push_back(std::move(p));
    }
    return m;
}

std::size_t ModelParams::total_weights() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.weight_count();
    return n;
}

std::vector<std::size_t> ModelParams::layer_weight_counts() const {
    std::vector<std::size_t> out;
    for (const auto& l : layers) out.push_back(l.weight_count());
    return out;
}

void ModelParams::check_compatible(const Graph& g) const {
    if (layers.empty()) throw std::invalid_argument("empty model");
    if (layers.front().spec.in_dim != g.feature_dim) {
        throw std::invalid_argument("model input dim " + std::to_string(layers.front().spec.in_dim) +
                                    " != feature dim " + std::to_string(g.feature_dim));
    }
    if (layers.back().spec.out_dim != g.num_classes) {
        throw std::invalid_argument("model output dim " + std::to_string(layers.back().spec.out_dim) +
                                    " != class count " + std::to_string(g.num_classes));
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& p = layers[l];
        if (p.weight.size() != p.spec.in_dim * p.spec.out_dim || p.bias.size() != p.spec.out_dim) {
            throw std::invalid_argument("layer " + std::to_string(l + 1) + " parameter size mismatch");
        }
        if (l > 0 && layers[l - 1].spec.out_dim != p.spec.in_dim) {
            throw std::invalid_argument("layer chain broken at layer " + std::to_string(l + 1));
        }
    }
}

bool ModelParams::all_finite() const {
    for (const auto& l : layers) {
        for (float w : l.weight) if (!std::isfinite(w)) return false;
        for (float b : l.bias) if (!std::isfinite(b)) return false;
        if (!std::isfinite(l.eps)) return false;
    }
    return true;
}

std::vector<LayerSpec> default_architecture(ModelKind kind, const Graph& g) {
    const std::size_t f = g.feature_dim;
    const std::size_t c = g.num_classes;
    const bool pubmed = g.name == "pubmed";
    switch (kind) {
        case ModelKind::GCN: {
            const std::size_t h1 = pubmed ? 128 : 64;
            const std::size_t h2 = pubmed ? 64 : 32;
            return {{LayerKind::GCNConv, f, h1, Activation::ReLU},
                    {LayerKind::GCNConv, h1, h2, Activation::ReLU},
                    {LayerKind::GCNConv, h2, c, Activation::None}};
        }
        case ModelKind::SAGE: {
            const std::size_t h = pubmed ? 64 : 16;
            return {{LayerKind::SAGEMean, f, h, Activation::ReLU},
                    {LayerKind::SAGEMean, h, c, Activation::None}};
        }
        case ModelKind::GIN: {
            std::vector<LayerSpec> specs{{LayerKind::GINMLP, f, 64, Activation::ReLU}};
            for (int i = 0; i < 4; ++i) specs.push_back({LayerKind::GINMLP, 64, 64, Activation::ReLU});
            specs.push_back({LayerKind::Linear, 64, c, Activation::None});
            return specs;
        }
        case ModelKind::MLP:
            return {{LayerKind::Linear, f, 64, Activation::ReLU},
                    {LayerKind::Linear, 64, c, Activation::None}};
    }
    throw std::invalid_argument("unknown model kind");
}

const DenseMatrix& ForwardCache::input(std::size_t l) const {
    if (l < dropped_inputs.size() && dropped_inputs[l].rows != 0) return dropped_inputs[l];
    return post.at(l - 1);
}

namespace {

std::vector<double> widen(std::span<const float> w) { return {w.begin(), w.end()}; }

/// out = X W for sparse X.
DenseMatrix sparse_times_dense(const CsrMatrix& x, std::span<const double> w, std::size_t out_dim) {
    DenseMatrix out(x.rows, out_dim);
    for (std::size_t i = 0; i < x.rows; ++i) {
        double* o = out.data.data() + i * out_dim;
        for (std::size_t k = x.row_ptr[i]; k < x.row_ptr[i + 1]; ++k) {
            const double v = x.values[k];
            const double* wr = w.data() + static_cast<std::size_t>(x.col_idx[k]) * out_dim;
            for (std::size_t j = 0; j < out_dim; ++j) o[j] += v * wr[j];
        }
    }
    return out;
}

/// out = H W for dense H.
DenseMatrix dense_times_dense(const DenseMatrix& h, std::span<const double> w, std::size_t out_dim) {
    DenseMatrix out(h.rows, out_dim);
    for (std::size_t i = 0; i < h.rows; ++i) {
        double* o = out.data.data() + i * out_dim;
        const double* hr = h.data.data() + i * h.cols;
        for (std::size_t k = 0; k < h.cols; ++k) {
            const double v = hr[k];
            if (v == 0.0) continue;
            const double* wr = w.data() + k * out_dim;
            for (std::size_t j = 0; j < out_dim; ++j) o[j] += v * wr[j];
        }
    }
    return out;
}

/// out += scale * A B
void spmm_accumulate(const CsrMatrix& a, const DenseMatrix& b, double scale, DenseMatrix& out) {
    const std::size_t n = b.cols;
    for (std::size_t i = 0; i < a.rows; ++i) {
        double* o = out.data.data() + i * n;
        for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
            const double v = scale * a.values[k];
            const double* br = b.data.data() + static_cast<std::size_t>(a.col_idx[k]) * n;
            for (std::size_t j = 0; j < n; ++j) o[j] += v * br[j];
        }
    }
}

/// out += A^T B
void spmm_transposed_accumulate(const CsrMatrix& a, const DenseMatrix& b, DenseMatrix& out) {
    const std::size_t n = b.cols;
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* br = b.data.data() + i * n;
        for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) {
            const double v = a.values[k];
            double* o = out.data.data() + static_cast<std::size_t>(a.col_idx[k]) * n;
            for (std::size_t j = 0; j < n; ++j) o[j] += v * br[j];
        }
    }
}

double relu(double z) { return std::isnan(z) ? z : (z > 0.0 ? z : 0.0); }

void aggregate(const LayerParams& p, const GraphContext& ctx, const DenseMatrix& transformed,
               DenseMatrix& pre) {
    const std::size_t n = transformed.rows;
    const std::size_t out_dim = p.spec.out_dim;
    pre = DenseMatrix(n, out_dim);
    switch (p.spec.kind) {
        case LayerKind::GCNConv:
            spmm_accumulate(ctx.adjacency.matrix, transformed, 1.0, pre);
            break;
        case LayerKind::SAGEMean:
            pre.data = transformed.data;
            spmm_accumulate(ctx.mean_neighbors, transformed, 1.0, pre);
            break;
        case LayerKind::GINMLP: {
            const double self = 1.0 + static_cast<double>(p.eps);
            for (std::size_t i = 0; i < pre.data.size(); ++i) pre.data[i] = self * transformed.data[i];
            spmm_accumulate(ctx.sum_neighbors, transformed, 1.0, pre);
            break;
        }
        case LayerKind::Linear:
            pre.data = transformed.data;
            break;
    }
    for (std::size_t i = 0; i < n; ++i) {
        double* r = pre.data.data() + i * out_dim;
        for (std::size_t j = 0; j < out_dim; ++j) r[j] += static_cast<double>(p.bias[j]);
    }
}

}  // namespace

namespace detail {

void forward_impl(const ModelParams& model, const GraphContext& ctx, ForwardCache& cache,
                  std::size_t first_layer, const DropoutPlan* dropout) {
    const std::size_t num_layers = model.layers.size();
    if (first_layer == 0) {
        model.check_compatible(ctx.g());
        cache.features = dropout && dropout->dropped_features ? dropout->dropped_features : &ctx.features;
        cache.transformed.assign(num_layers, {});
        cache.pre.assign(num_layers, {});
        cache.post.assign(num_layers, {});
        cache.dropped_inputs.assign(num_layers, {});
        cache.dropout_scale.assign(num_layers, {});
    }
    for (std::size_t l = first_layer; l < num_layers; ++l) {
        const auto& p = model.layers[l];
        const auto w = widen(p.weight);
        if (l == 0) {
            cache.transformed[0] = sparse_times_dense(*cache.features, w, p.spec.out_dim);
        } else {
            if (dropout && dropout->rate > 0.0) {
                const auto& h = cache.post[l - 1];
                auto& scale = cache.dropout_scale[l];
                scale.resize(h.data.size());
                const auto keep = static_cast<float>(1.0 / (1.0 - dropout->rate));
                for (auto& s : scale) s = dropout->rng->uniform() < dropout->rate ? 0.0f : keep;
                auto& dropped = cache.dropped_inputs[l];
                dropped = DenseMatrix(h.rows, h.cols);
                for (std::size_t i = 0; i < h.data.size(); ++i) dropped.data[i] = h.data[i] * scale[i];
            }
            cache.transformed[l] = dense_times_dense(cache.input(l), w, p.spec.out_dim);
        }
        aggregate(p, ctx, cache.transformed[l], cache.pre[l]);
        auto& post = cache.post[l];
        post = cache.pre[l];
        if (p.spec.activation == Activation::ReLU) {
            for (auto& v : post.data) v = relu(v);
        }
    }
}

}  // namespace detail

ForwardCache forward(const ModelParams& model, const GraphContext& ctx) {
    ForwardCache cache;
    detail::forward_impl(model, ctx, cache, 0, nullptr);
    return cache;
}

void forward_from(const ModelParams& model, const GraphContext& ctx, ForwardCache& cache,
                  std::size_t first_layer) {
    if (first_layer >= model.layers.size()) throw std::out_of_range("forward_from: layer out of range");
    if (cache.post.size() != model.layers.size()) first_layer = 0;
    detail::forward_impl(model, ctx, cache, first_layer, nullptr);
}

double masked_cross_entropy(const DenseMatrix& logits, std::span<const std::uint32_t> labels,
                            std::span<const std::uint8_t> mask, DenseMatrix* dlogits) {
    std::size_t count = 0;
    for (auto m : mask) count += m ? 1 : 0;
    if (count == 0) throw std::invalid_argument("loss over an empty mask");
    if (dlogits) *dlogits = DenseMatrix(logits.rows, logits.cols);
    const double inv = 1.0 / static_cast<double>(count);
    double total = 0.0;
    std::vector<double> prob(logits.cols);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        if (!mask[i]) continue;
        const auto row = logits.row(i);
        const double peak = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (std::size_t j = 0; j < row.size(); ++j) {
            prob[j] = std::exp(row[j] - peak);
            sum += prob[j];
        }
        total += (peak + std::log(sum)) - row[labels[i]];
        if (dlogits) {
            auto d = dlogits->row(i);
            for (std::size_t j = 0; j < row.size(); ++j) d[j] = prob[j] / sum * inv;
            d[labels[i]] -= inv;
        }
    }
    return total * inv;
}

namespace {

/// Backward pass down to lowest_layer. With stop_at non-null, the walk ends
/// once dL/d(H W) of lowest_layer is known, which is moved there instead of
/// forming that layer's weight gradient.
LossAndGrads backward_impl(const ModelParams& model, const GraphContext& ctx, const ForwardCache& cache,
                           std::span<const std::uint8_t> mask, std::size_t lowest_layer, DenseMatrix* stop_at) {
    const std::size_t num_layers = model.layers.size();
    LossAndGrads out;
    out.grads.weight.assign(num_layers, {});
    out.grads.bias.assign(num_layers, {});
    out.grads.eps.assign(num_layers, 0.0);

    DenseMatrix dpre;
    out.loss = masked_cross_entropy(cache.logits(), ctx.g().labels, mask, &dpre);
    if (model.layers.back().spec.activation == Activation::ReLU) {
        const auto& z = cache.pre.back();
        for (std::size_t i = 0; i < dpre.data.size(); ++i) if (!(z.data[i] > 0.0)) dpre.data[i] = 0.0;
    }

    for (std::size_t l = num_layers; l-- > lowest_layer;) {
        const auto& p = model.layers[l];
        const std::size_t in_dim = p.spec.in_dim;
        const std::size_t out_dim = p.spec.out_dim;
        const std::size_t n = dpre.rows;

        auto& db = out.grads.bias[l];
        db.assign(out_dim, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double* r = dpre.data.data() + i * out_dim;
            for (std::size_t j = 0; j < out_dim; ++j) db[j] += r[j];
        }

        DenseMatrix dtrans(n, out_dim);
        switch (p.spec.kind) {
            case LayerKind::GCNConv:
                spmm_transposed_accumulate(ctx.adjacency.matrix, dpre, dtrans);
                break;
            case LayerKind::SAGEMean:
                dtrans.data = dpre.data;
                spmm_transposed_accumulate(ctx.mean_neighbors, dpre, dtrans);
                break;
            case LayerKind::GINMLP: {
                const double self = 1.0 + static_cast<double>(p.eps);
                double deps = 0.0;
                const auto& t = cache.transformed[l];
                for (std::size_t i = 0; i < dtrans.data.size(); ++i) {
                    dtrans.data[i] = self * dpre.data[i];
                    deps += dpre.data[i] * t.data[i];
                }
                out.grads.eps[l] = deps;
                spmm_transposed_accumulate(ctx.sum_neighbors, dpre, dtrans);
                break;
            }
            case LayerKind::Linear:
                dtrans.data = dpre.data;
                break;
        }

        if (stop_at && l == lowest_layer) {
            *stop_at = std::move(dtrans);
            break;
        }

        if (!stop_at) {
            auto& dw = out.grads.weight[l];
            dw.assign(in_dim * out_dim, 0.0);
            if (l == 0) {
                const auto& x = *cache.features;
                for (std::size_t i = 0; i < x.rows; ++i) {
                    const double* d = dtrans.data.data() + i * out_dim;
                    for (std::size_t k = x.row_ptr[i]; k < x.row_ptr[i + 1]; ++k) {
                        const double v = x.values[k];
                        double* g = dw.data() + static_cast<std::size_t>(x.col_idx[k]) * out_dim;
                        for (std::size_t j = 0; j < out_dim; ++j) g[j] += v * d[j];
                    }
                }
                break;
            }
            const auto& h = cache.input(l);
            for (std::size_t i = 0; i < n; ++i) {
                const double* hr = h.data.data() + i * in_dim;
                const double* d = dtrans.data.data() + i * out_dim;
                for (std::size_t k = 0; k < in_dim; ++k) {
                    const double v = hr[k];
                    if (v == 0.0) continue;
                    double* g = dw.data() + k * out_dim;
                    for (std::size_t j = 0; j < out_dim; ++j) g[j] += v * d[j];
                }
            }
        }
        if (l == lowest_layer) break;

        // Gradient w.r.t. the layer input, then through dropout and the
        // previous activation.
        // dinput = dtrans W^T as row updates over W^T, so each entry still sums
        // over j in ascending order.
        std::vector<double> wt(out_dim * in_dim);
        for (std::size_t k = 0; k < in_dim; ++k)
            for (std::size_t j = 0; j < out_dim; ++j) wt[j * in_dim + k] = static_cast<double>(p.weight[k * out_dim + j]);
        const bool relu_below = model.layers[l - 1].spec.activation == Activation::ReLU;
        const auto& z_below = cache.pre[l - 1];
        // With finite W a zero row of dtrans yields +0 in every entry, which is
        // what the buffer already holds.
        bool finite_w = true;
        for (double v : wt) finite_w = finite_w && std::isfinite(v);
        DenseMatrix dinput(n, in_dim);
        for (std::size_t i = 0; i < n; ++i) {
            const double* d = dtrans.data.data() + i * out_dim;
            double* o = dinput.data.data() + i * in_dim;
            if (finite_w && std::all_of(d, d + out_dim, [](double v) { return v == 0.0; })) continue;
            for (std::size_t j = 0; j < out_dim; ++j) {
                const double dj = d[j];
                const double* wr = wt.data() + j * in_dim;
                for (std::size_t k = 0; k < in_dim; ++k) o[k] += dj * wr[k];
            }
        }
        if (l < cache.dropout_scale.size() && !cache.dropout_scale[l].empty()) {
            const auto& s = cache.dropout_scale[l];
            for (std::size_t i = 0; i < dinput.data.size(); ++i) dinput.data[i] *= s[i];
        }
        if (relu_below) {
            for (std::size_t i = 0; i < dinput.data.size(); ++i) if (!(z_below.data[i] > 0.0)) dinput.data[i] = 0.0;
        }
        dpre = std::move(dinput);
    }
    return out;
}

}  // namespace

LossAndGrads backward(const ModelParams& model, const GraphContext& ctx, const ForwardCache& cache,
                      std::span<const std::uint8_t> mask, std::size_t lowest_layer) {
    return backward_impl(model, ctx, cache, mask, lowest_layer, nullptr);
}

TransformGradient transform_gradient(const ModelParams& model, const GraphContext& ctx, const ForwardCache& cache,
                                     std::span<const std::uint8_t> mask, std::size_t layer) {
    if (layer >= model.layers.size()) throw std::out_of_range("transform_gradient: layer out of range");
    TransformGradient out;
    out.layer = layer;
    out.loss = backward_impl(model, ctx, cache, mask, layer, &out.dtransformed).loss;
    return out;
}

double weight_gradient_at(const ModelParams& model, const GraphContext& ctx, const ForwardCache& cache,
                          const TransformGradient& grad, std::size_t offset) {
    const auto& spec = model.layers.at(grad.layer).spec;
    const std::size_t out_dim = spec.out_dim;
    const std::size_t r = offset / out_dim;
    const std::size_t c = offset % out_dim;
    const double* d = grad.dtransformed.data.data();
    double g = 0.0;
    if (grad.layer == 0) {
        if (cache.features == &ctx.features) {
            const auto& xt = ctx.features_by_column;
            for (std::size_t k = xt.row_ptr[r]; k < xt.row_ptr[r + 1]; ++k)
                g += static_cast<double>(xt.values[k]) * d[static_cast<std::size_t>(xt.col_idx[k]) * out_dim + c];
        } else {
            const auto& x = *cache.features;
            for (std::size_t i = 0; i < x.rows; ++i)
                for (std::size_t k = x.row_ptr[i]; k < x.row_ptr[i + 1]; ++k)
                    if (x.col_idx[k] == r) g += static_cast<double>(x.values[k]) * d[i * out_dim + c];
        }
        return g;
    }
    const auto& h = cache.input(grad.layer);
    for (std::size_t i = 0; i < h.rows; ++i) {
        const double v = h(i, r);
        if (v == 0.0) continue;
        g += v * d[i * out_dim + c];
    }
    return g;
}

void update_after_weight_change(const ModelParams& model, const GraphContext& ctx, ForwardCache& cache,
                                std::size_t layer, std::size_t offset) {
    if (layer >= model.layers.size()) throw std::out_of_range("update_after_weight_change: layer out of range");
    if (cache.post.size() != model.layers.size() || (layer == 0 && cache.features != &ctx.features)) {
        forward_from(model, ctx, cache, 0);
        return;
    }
    const auto& p = model.layers[layer];
    const std::size_t out_dim = p.spec.out_dim;
    const std::size_t r = offset / out_dim;
    const std::size_t c = offset % out_dim;
    auto weight = [&](std::size_t k) { return static_cast<double>(p.weight[k * out_dim + c]); };

    // Column c of H W, only on rows whose input has a non-zero in column r;
    // summation order matches the full product.
    auto& t = cache.transformed[layer];
    if (layer == 0) {
        const auto& x = ctx.features;
        const auto& xt = ctx.features_by_column;
        for (std::size_t q = xt.row_ptr[r]; q < xt.row_ptr[r + 1]; ++q) {
            const std::size_t i = xt.col_idx[q];
            double acc = 0.0;
            for (std::size_t k = x.row_ptr[i]; k < x.row_ptr[i + 1]; ++k)
                acc += static_cast<double>(x.values[k]) * weight(x.col_idx[k]);
            t(i, c) = acc;
        }
    } else {
        const auto& h = cache.input(layer);
        for (std::size_t i = 0; i < h.rows; ++i) {
            if (h(i, r) == 0.0) continue;
            const double* hr = h.data.data() + i * h.cols;
            double acc = 0.0;
            for (std::size_t k = 0; k < h.cols; ++k) {
                if (hr[k] == 0.0) continue;
                acc += hr[k] * weight(k);
            }
            t(i, c) = acc;
        }
    }

    // Column c of the aggregation, bias and activation.
    auto spmm_column = [&](const CsrMatrix& a, std::size_t i, double acc) {
        for (std::size_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k)
            acc += static_cast<double>(a.values[k]) * t(a.col_idx[k], c);
        return acc;
    };
    auto& pre = cache.pre[layer];
    auto& post = cache.post[layer];
    const double self = 1.0 + static_cast<double>(p.eps);
    for (std::size_t i = 0; i < t.rows; ++i) {
        double z = 0.0;
        switch (p.spec.kind) {
            case LayerKind::GCNConv: z = spmm_column(ctx.adjacency.matrix, i, 0.0); break;
            case LayerKind::SAGEMean: z = spmm_column(ctx.mean_neighbors, i, t(i, c)); break;
            case LayerKind::GINMLP: z = spmm_column(ctx.sum_neighbors, i, self * t(i, c)); break;
            case LayerKind::Linear: z = t(i, c); break;
        }
        z += static_cast<double>(p.bias[c]);
        pre(i, c) = z;
        post(i, c) = p.spec.activation == Activation::ReLU ? relu(z) : z;
    }
    if (layer + 1 < model.layers.size()) detail::forward_impl(model, ctx, cache, layer + 1, nullptr);
}

LossAndGrads loss_and_grads(const ModelParams& model, const GraphContext& ctx,
                            std::span<const std::uint8_t> mask) {
    const auto cache = forward(model, ctx);
    return backward(model, ctx, cache, mask, 0);
}

std::vector<std::uint32_t> argmax_labels(const DenseMatrix& logits) {
    std::vector<std::uint32_t> out(logits.rows, kInvalidLabel);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        const auto row = logits.row(i);
        if (!std::all_of(row.begin(), row.end(), [](double v) { return std::isfinite(v); })) continue;
        out[i] = static_cast<std::uint32_t>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return out;
}

std::vector<std::uint32_t> predict_labels(const ModelParams& model, const GraphContext& ctx) {
    return argmax_labels(forward(model, ctx).logits());
}

double accuracy(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> labels,
                std::span<const std::uint8_t> mask) {
    std::size_t total = 0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        ++total;
        if (predicted[i] == labels[i]) ++correct;
    }
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

double evaluate(const ModelParams& model, const GraphContext& ctx, std::span<const std::uint8_t> mask) {
    return accuracy(predict_labels(model, ctx), ctx.g().labels, mask);
}

}  // namespace gbfa
