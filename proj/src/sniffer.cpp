// Copyright (c) 2026, The gbfa-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include "gbfa/sniffer.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <stdexcept>

#include "gbfa/rng.hpp"

namespace gbfa::sniff {

using json = nlohmann::json;

namespace {

constexpr const char* kLabelNames[kNumLabels] = {"BLANK", "Aggregate", "Transform", "EdgeUpdate", "Readout", "Output"};

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::fabs(a - b)));
}

// Accelerator model used for latencies.
constexpr double kFlopsPerCycle = 256.0;
constexpr double kBytesPerCycle = 64.0;
constexpr double kLaunchCycles = 500.0;
constexpr std::size_t kRowsPerTile = 4096;

}  // namespace

std::string to_string(LayerLabel l) {
    const auto i = static_cast<std::size_t>(l);
    if (i >= kNumLabels) throw std::invalid_argument("bad layer label");
    return kLabelNames[i];
}

LayerLabel label_from_string(const std::string& s) {
    for (std::size_t i = 0; i < kNumLabels; ++i) {
        if (s == kLabelNames[i]) return static_cast<LayerLabel>(i);
    }
    throw std::invalid_argument("unknown layer label '" + s + "'");
}

std::string to_string(const std::vector<LayerLabel>& seq) {
    std::string out = "[";
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (i) out += ", ";
        out += to_string(seq[i]);
    }
    return out + "]";
}

std::vector<LayerLabel> KernelTrace::sequence() const {
    std::vector<LayerLabel> out;
    LayerLabel prev = LayerLabel::Blank;
    for (LayerLabel l : kernel_labels) {
        if (l != LayerLabel::Blank && l != prev) out.push_back(l);
        prev = l;
    }
    return out;
}

std::vector<KernelEvent> lower_architecture(const std::vector<LayerSpec>& arch, const TraceOptions& opts) {
    if (arch.empty()) throw std::invalid_argument("empty architecture");
    if (opts.num_nodes == 0) throw std::invalid_argument("trace workload needs at least one node");
    const double n = static_cast<double>(opts.num_nodes);
    const double e2 = 2.0 * static_cast<double>(opts.num_edges);
    const std::size_t tiles = std::clamp<std::size_t>((opts.num_nodes + kRowsPerTile - 1) / kRowsPerTile, 1,
                                                    std::max<std::size_t>(1, opts.max_tiles));

    std::vector<KernelEvent> events;
    auto emit = [&](LayerLabel label, double flops, double rb, double wb, const std::vector<std::size_t>& deps,
                    std::size_t count) {
        std::vector<std::size_t> ids;
        const double k = static_cast<double>(count);
        for (std::size_t i = 0; i < count; ++i) {
            ids.push_back(events.size());
            events.push_back({label, flops / k, rb / k, wb / k, deps});
        }
        return ids;
    };

    std::size_t last_graph = 0;
    for (std::size_t l = 0; l < arch.size(); ++l) {
        if (arch[l].kind != LayerKind::Linear) last_graph = l;
    }
    const bool any_graph = std::any_of(arch.begin(), arch.end(), [](const LayerSpec& s) { return s.kind != LayerKind::Linear; });

    double rows = n;
    std::vector<std::size_t> layer_in;  // empty: reads the input features
    for (std::size_t l = 0; l < arch.size(); ++l) {
        const auto& s = arch[l];
        const double in = static_cast<double>(s.in_dim);
        const double out = static_cast<double>(s.out_dim);
        if (l > 0) emit(LayerLabel::Blank, 0.0, 4.0 * rows * in, 4.0 * rows * in, layer_in, 1);

        std::vector<std::size_t> produced;
        if (s.kind != LayerKind::Linear) {
            std::vector<std::size_t> deps = layer_in;
            if (opts.edge_update) {
                const auto eu = emit(LayerLabel::EdgeUpdate, 2.0 * e2 * in, 8.0 * e2 * in + 8.0 * e2, 4.0 * e2, layer_in, tiles);
                deps.insert(deps.end(), eu.begin(), eu.end());
            }
            const auto agg = emit(LayerLabel::Aggregate, 2.0 * (e2 + n) * in, 4.0 * (e2 + n) * in + 8.0 * (e2 + n),
                                  4.0 * n * in, deps, tiles);
            std::vector<std::size_t> tdeps = agg;
            if (s.kind == LayerKind::SAGEMean) tdeps.insert(tdeps.end(), layer_in.begin(), layer_in.end());
            produced = emit(LayerLabel::Transform, 2.0 * n * in * out, 4.0 * (n * in + in * out), 4.0 * n * out, tdeps,
                            tiles);
        } else {
            const std::size_t t = rows > 1.0 ? tiles : 1;
            produced = emit(LayerLabel::Transform, 2.0 * rows * in * out, 4.0 * (rows * in + in * out),
                            4.0 * rows * out, layer_in, t);
        }
        layer_in = produced;
        if (opts.readout && any_graph && l == last_graph) {
            layer_in = emit(LayerLabel::Readout, rows * out, 4.0 * rows * out, 4.0 * out, layer_in, 1);
            rows = 1.0;
        }
    }
    const double c = static_cast<double>(arch.back().out_dim);
    emit(LayerLabel::Output, 3.0 * rows * c, 4.0 * rows * c, 4.0 * rows, layer_in, 1);
    return events;
}

std::vector<KernelFeature> derive_features(const std::vector<KernelEvent>& events, double noise,
                                           std::uint64_t seed, double input_bytes) {
    if (noise < 0.0) throw std::invalid_argument("noise must be non-negative");
    Rng rng(seed);
    auto jitter = [&] { return std::max(0.0, 1.0 + noise * rng.normal()); };
    std::vector<KernelFeature> out(events.size());
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& e = events[i];
        double kdd = 0.0;
        for (std::size_t d : e.reads_from) {
            if (d >= i) throw std::invalid_argument("kernel reads from a later kernel");
            kdd = std::max(kdd, static_cast<double>(i - d));
        }
        auto& f = out[i];
        f.exe_lat = (kLaunchCycles + std::max(e.flops / kFlopsPerCycle, (e.read_bytes + e.write_bytes) / kBytesPerCycle)) *
                    jitter();
        f.r_v = e.read_bytes * jitter();
        f.w_v = e.write_bytes * jitter();
        f.kdd = std::round(kdd * jitter());
        const double prev = i == 0 ? input_bytes : out[i - 1].w_v;
        f.io_ratio = f.w_v > 0.0 ? prev / f.w_v : 0.0;
    }
    return out;
}

KernelTrace synthesize_trace(const std::vector<LayerSpec>& arch, const TraceOptions& opts) {
    if (opts.noise < 0.0) throw std::invalid_argument("noise must be non-negative");
    const auto events = lower_architecture(arch, opts);
    KernelTrace trace;
    const double input_bytes = 4.0 * static_cast<double>(opts.num_nodes) * static_cast<double>(arch.front().in_dim);
    trace.kernels = derive_features(events, opts.noise, opts.seed, input_bytes);
    for (const auto& e : events) trace.kernel_labels.push_back(e.label);
    return trace;
}

RandomTraceSpec random_trace_spec(std::uint64_t seed, double noise, std::optional<ModelKind> family) {
    static constexpr std::size_t kHidden[] = {16, 32, 64, 128, 256};
    static constexpr std::size_t kInputs[] = {100, 500, 602, 1433, 3703};
    Rng rng(seed);
    RandomTraceSpec out;
    const auto drawn = static_cast<ModelKind>(rng.below(4));
    const ModelKind kind = family.value_or(drawn);
    const std::size_t depth = 2 + rng.below(3);
    const std::size_t classes = 2 + rng.below(9);
    std::size_t in = kInputs[rng.below(5)];
    const LayerKind lk = kind == ModelKind::GCN    ? LayerKind::GCNConv
                         : kind == ModelKind::SAGE ? LayerKind::SAGEMean
                         : kind == ModelKind::GIN  ? LayerKind::GINMLP
                                                   : LayerKind::Linear;
    for (std::size_t l = 0; l < depth; ++l) {
        const bool last = l + 1 == depth && kind != ModelKind::GIN;
        const std::size_t out_dim = last ? classes : kHidden[rng.below(5)];
        out.arch.push_back({lk, in, out_dim, last ? Activation::None : Activation::ReLU});
        in = out_dim;
    }
    if (kind == ModelKind::GIN) out.arch.push_back({LayerKind::Linear, in, classes, Activation::None});
    out.opts.noise = noise;
    out.opts.seed = seed;
    out.opts.num_nodes = 500 + rng.below(30000);
    out.opts.num_edges = static_cast<std::size_t>(static_cast<double>(out.opts.num_nodes) * rng.uniform(1.5, 4.5));
    const bool edge_update = rng.uniform() < 0.15;
    const bool readout = rng.uniform() < 0.15;
    if (!family) {
        out.opts.edge_update = edge_update;
        out.opts.readout = readout;
    }
    return out;
}

std::size_t HmmParams::blank_index() const {
    for (std::size_t i = 0; i < states.size(); ++i) {
        if (states[i] == LayerLabel::Blank) return i;
    }
    return npos;
}

std::array<double, KernelFeature::kDim> standardize(const HmmParams& hmm, const KernelFeature& f) {
    auto x = f.as_array();
    for (std::size_t d = 0; d < KernelFeature::kDim; ++d) {
        if (!std::isfinite(x[d])) throw std::invalid_argument("kernel feature is not finite");
        x[d] = (std::log1p(std::max(0.0, x[d])) - hmm.feature_mean[d]) / hmm.feature_std[d];
    }
    return x;
}

HmmParams fit_hmm(const std::vector<KernelTrace>& traces, std::vector<LayerLabel> states, double alpha) {
    if (alpha < 0.0) throw std::invalid_argument("smoothing must be non-negative");
    if (states.empty()) {
        for (std::size_t i = 0; i < kNumLabels; ++i) states.push_back(static_cast<LayerLabel>(i));
    }
    std::array<int, kNumLabels> index;
    index.fill(-1);
    for (std::size_t s = 0; s < states.size(); ++s) {
        auto& slot = index[static_cast<std::size_t>(states[s])];
        if (slot >= 0) throw std::invalid_argument("duplicate HMM state " + to_string(states[s]));
        slot = static_cast<int>(s);
    }
    const std::size_t k = states.size();
    constexpr std::size_t D = KernelFeature::kDim;

    HmmParams hmm;
    hmm.states = states;

    std::array<double, D> sum{}, sq{};
    double total = 0.0;
    for (const auto& tr : traces) {
        if (tr.kernel_labels.size() != tr.kernels.size()) throw std::invalid_argument("training trace is unlabeled");
        for (const auto& f : tr.kernels) {
            const auto x = f.as_array();
            for (std::size_t d = 0; d < D; ++d) {
                if (!std::isfinite(x[d])) throw std::invalid_argument("kernel feature is not finite");
                const double v = std::log1p(std::max(0.0, x[d]));
                sum[d] += v;
                sq[d] += v * v;
            }
            total += 1.0;
        }
    }
    if (total == 0.0) throw std::invalid_argument("no training kernels");
    for (std::size_t d = 0; d < D; ++d) {
        hmm.feature_mean[d] = sum[d] / total;
        const double var = sq[d] / total - hmm.feature_mean[d] * hmm.feature_mean[d];
        hmm.feature_std[d] = var > 1e-12 ? std::sqrt(var) : 1.0;
    }

    std::vector<double> init(k, 0.0);
    std::vector<std::vector<double>> trans(k, std::vector<double>(k, 0.0));
    std::vector<double> count(k, 0.0);
    std::vector<std::array<double, D>> m1(k), m2(k);
    for (auto& a : m1) a.fill(0.0);
    for (auto& a : m2) a.fill(0.0);
    for (const auto& tr : traces) {
        int prev = -1;
        for (std::size_t t = 0; t < tr.kernels.size(); ++t) {
            const int s = index[static_cast<std::size_t>(tr.kernel_labels[t])];
            if (s < 0) throw std::invalid_argument("trace label " + to_string(tr.kernel_labels[t]) + " is not an HMM state");
            const auto us = static_cast<std::size_t>(s);
            if (prev < 0) {
                init[us] += 1.0;
            } else {
                trans[static_cast<std::size_t>(prev)][us] += 1.0;
            }
            prev = s;
            const auto x = standardize(hmm, tr.kernels[t]);
            count[us] += 1.0;
            for (std::size_t d = 0; d < D; ++d) {
                m1[us][d] += x[d];
                m2[us][d] += x[d] * x[d];
            }
        }
    }
    for (std::size_t s = 0; s < k; ++s) {
        if (count[s] == 0.0) throw std::invalid_argument("label " + to_string(states[s]) + " absent from training data");
    }

    const double kd = static_cast<double>(k);
    double init_total = 0.0;
    for (double c : init) init_total += c;
    hmm.initial.resize(k);
    for (std::size_t s = 0; s < k; ++s) hmm.initial[s] = (init[s] + alpha) / (init_total + alpha * kd);

    hmm.transition.assign(k, std::vector<double>(k, 0.0));
    for (std::size_t r = 0; r < k; ++r) {
        double row = 0.0;
        for (double c : trans[r]) row += c;
        if (row + alpha * kd == 0.0) {
            hmm.transition[r][r] = 1.0;
            continue;
        }
        for (std::size_t c = 0; c < k; ++c) hmm.transition[r][c] = (trans[r][c] + alpha) / (row + alpha * kd);
    }

    constexpr double kVarFloor = 1e-4;
    hmm.mean.resize(k);
    hmm.var.resize(k);
    for (std::size_t s = 0; s < k; ++s) {
        for (std::size_t d = 0; d < D; ++d) {
            const double mu = m1[s][d] / count[s];
            hmm.mean[s][d] = mu;
            hmm.var[s][d] = std::max(kVarFloor, m2[s][d] / count[s] - mu * mu);
        }
    }
    return hmm;
}

Posteriors posteriors(const HmmParams& hmm, const KernelTrace& trace) {
    const std::size_t k = hmm.num_states();
    if (k == 0) throw std::invalid_argument("HMM has no states");
    Posteriors out;
    out.labels = hmm.states;
    std::vector<double> prev;
    for (const auto& f : trace.kernels) {
        const auto x = standardize(hmm, f);
        std::vector<double> lp(k);
        for (std::size_t s = 0; s < k; ++s) {
            double prior = 0.0;
            if (prev.empty()) {
                prior = hmm.initial[s];
            } else {
                for (std::size_t r = 0; r < k; ++r) prior += prev[r] * hmm.transition[r][s];
            }
            double ll = 0.0;
            for (std::size_t d = 0; d < KernelFeature::kDim; ++d) {
                const double diff = x[d] - hmm.mean[s][d];
                ll -= 0.5 * (std::log(2.0 * std::numbers::pi * hmm.var[s][d]) + diff * diff / hmm.var[s][d]);
            }
            lp[s] = (prior > 0.0 ? std::log(prior) : kNegInf) + ll;
        }
        const double mx = *std::max_element(lp.begin(), lp.end());
        std::vector<double> row(k);
        if (mx == kNegInf) {
            std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(k));
        } else {
            double z = 0.0;
            for (std::size_t s = 0; s < k; ++s) z += row[s] = std::exp(lp[s] - mx);
            for (double& v : row) v /= z;
        }
        out.rows.push_back(row);
        prev = std::move(row);
    }
    return out;
}

CtcResult ctc_beam_search(const std::vector<std::vector<double>>& probs, std::size_t blank, std::size_t beam_width) {
    if (probs.empty()) throw std::invalid_argument("empty posterior sequence");
    if (beam_width == 0) throw std::invalid_argument("beam width must be at least 1");
    const std::size_t k = probs.front().size();
    struct Score {
        double b = kNegInf;   // paths ending in blank
        double nb = kNegInf;  // paths ending in the last symbol
        double total() const { return log_add(b, nb); }
    };
    using Prefix = std::vector<std::size_t>;
    std::vector<std::pair<Prefix, Score>> beam{{{}, Score{0.0, kNegInf}}};

    for (const auto& row : probs) {
        if (row.size() != k) throw std::invalid_argument("ragged posterior matrix");
        std::map<Prefix, Score> next;
        for (const auto& [prefix, sc] : beam) {
            for (std::size_t c = 0; c < k; ++c) {
                if (!(row[c] >= 0.0)) throw std::invalid_argument("posterior entries must be non-negative");
                const double p = row[c] > 0.0 ? std::log(row[c]) : kNegInf;
                if (p == kNegInf) continue;
                if (c == blank) {
                    auto& s = next[prefix];
                    s.b = log_add(s.b, sc.total() + p);
                    continue;
                }
                Prefix ext = prefix;
                ext.push_back(c);
                auto& se = next[ext];
                if (!prefix.empty() && prefix.back() == c) {
                    se.nb = log_add(se.nb, sc.b + p);
                    auto& ss = next[prefix];
                    ss.nb = log_add(ss.nb, sc.nb + p);
                } else {
                    se.nb = log_add(se.nb, sc.total() + p);
                }
            }
        }
        beam.assign(next.begin(), next.end());
        std::erase_if(beam, [](const auto& e) { return e.second.total() == kNegInf; });
        // map order makes ties resolve to the lexicographically smallest prefix
        std::stable_sort(beam.begin(), beam.end(),
                         [](const auto& a, const auto& b) { return a.second.total() > b.second.total(); });
        if (beam.size() > beam_width) beam.resize(beam_width);
        if (beam.empty()) throw std::invalid_argument("posterior row with no mass");
    }
    return {beam.front().first, beam.front().second.total()};
}

PredictedSequence ctc_beam_decode(const Posteriors& post, std::size_t beam_width) {
    std::size_t blank = npos;
    for (std::size_t i = 0; i < post.labels.size(); ++i) {
        if (post.labels[i] == LayerLabel::Blank) blank = i;
    }
    const auto r = ctc_beam_search(post.rows, blank, beam_width);
    PredictedSequence out;
    for (std::size_t s : r.symbols) out.labels.push_back(post.labels[s]);
    out.log_prob = r.log_prob;
    out.posteriors = post;
    return out;
}

double ler(const std::vector<LayerLabel>& predicted, const std::vector<LayerLabel>& truth) {
    if (truth.empty()) throw std::invalid_argument("empty ground-truth sequence");
    return static_cast<double>(edit_distance(predicted, truth)) / static_cast<double>(truth.size());
}

double mean_ler(const std::vector<std::vector<LayerLabel>>& predicted,
                const std::vector<std::vector<LayerLabel>>& truth) {
    if (predicted.size() != truth.size() || truth.empty()) {
        throw std::invalid_argument("mean LER needs equally many, non-zero predictions and truths");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) s += ler(predicted[i], truth[i]);
    return s / static_cast<double>(truth.size());
}

void write_trace(const KernelTrace& trace, const std::filesystem::path& path) {
    const bool labeled = trace.kernel_labels.size() == trace.kernels.size();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    for (std::size_t t = 0; t < trace.kernels.size(); ++t) {
        const auto& f = trace.kernels[t];
        json j = {{"t", t}, {"exe_lat", f.exe_lat}, {"r_v", f.r_v}, {"w_v", f.w_v}, {"io_ratio", f.io_ratio}, {"kdd", f.kdd}};
        if (labeled) j["label"] = to_string(trace.kernel_labels[t]);
        out << j.dump() << '\n';
    }
    if (!out) throw DataError("failed writing " + path.string());
}

KernelTrace read_trace(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    KernelTrace trace;
    std::string line;
    std::size_t lineno = 0;
    std::size_t labeled = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(lineno);
        try {
            const auto j = json::parse(line);
            if (j.at("t").get<std::size_t>() != trace.kernels.size()) throw DataError(where + ": kernels out of order");
            KernelFeature f;
            f.exe_lat = j.at("exe_lat").get<double>();
            f.r_v = j.at("r_v").get<double>();
            f.w_v = j.at("w_v").get<double>();
            f.io_ratio = j.at("io_ratio").get<double>();
            f.kdd = j.at("kdd").get<double>();
            trace.kernels.push_back(f);
            if (j.contains("label")) {
                trace.kernel_labels.push_back(label_from_string(j["label"].get<std::string>()));
                ++labeled;
            }
        } catch (const json::exception& e) {
            throw DataError(where + ": " + e.what());
        } catch (const std::invalid_argument& e) {
            throw DataError(where + ": " + e.what());
        }
    }
    if (labeled != 0 && labeled != trace.kernels.size()) throw DataError(path.string() + ": only some kernels are labeled");
    return trace;
}

json to_json(const HmmParams& hmm) {
    json states = json::array();
    for (auto s : hmm.states) states.push_back(to_string(s));
    return {{"states", states},       {"initial", hmm.initial},           {"transition", hmm.transition},
            {"mean", hmm.mean},       {"var", hmm.var},                   {"feature_mean", hmm.feature_mean},
            {"feature_std", hmm.feature_std}};
}

HmmParams hmm_from_json(const json& j) {
    HmmParams hmm;
    try {
        for (const auto& s : j.at("states")) hmm.states.push_back(label_from_string(s.get<std::string>()));
        j.at("initial").get_to(hmm.initial);
        j.at("transition").get_to(hmm.transition);
        j.at("mean").get_to(hmm.mean);
        j.at("var").get_to(hmm.var);
        j.at("feature_mean").get_to(hmm.feature_mean);
        j.at("feature_std").get_to(hmm.feature_std);
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed HMM file: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("malformed HMM file: ") + e.what());
    }
    const std::size_t k = hmm.states.size();
    if (k == 0 || hmm.initial.size() != k || hmm.transition.size() != k || hmm.mean.size() != k || hmm.var.size() != k) {
        throw DataError("malformed HMM file: inconsistent state count");
    }
    for (const auto& row : hmm.transition) {
        if (row.size() != k) throw DataError("malformed HMM file: transition matrix is not square");
    }
    return hmm;
}

}  // namespace gbfa::sniff
