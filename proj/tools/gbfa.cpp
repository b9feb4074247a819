// Copyright (c) 2026, The gbfa-sim Authors
// SPDX-License-Identifier: Apache-2.0
//
// gbfa: dataset generation, training, bit-flip attacks, sweeps, layer
// sniffing and report aggregation.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "gbfa/attack.hpp"
#include "gbfa/binary_io.hpp"
#include "gbfa/format.hpp"
#include "gbfa/graph.hpp"
#include "gbfa/model.hpp"
#include "gbfa/sniffer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace gbfa;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    std::string out;
};

std::string require_out(const Globals& g, const char* what) {
    if (g.out.empty()) throw UsageError(std::string("--out is required (") + what + ")");
    return g.out;
}

void write_json(const fs::path& path, const json& j) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    io::write_text(path, j.dump(2) + "\n");
}

void write_text_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    io::write_text(path, text);
}

Graph load_split_graph(const fs::path& dir) {
    Graph g = load_graph(dir);
    if (g.masks.empty()) g = split_masks(std::move(g), SplitPolicy{});
    return g;
}

// ---------------------------------------------------------------- make-dataset

struct MakeDatasetArgs {
    std::string name;
};

int cmd_make_dataset(const MakeDatasetArgs& a, const Globals& gl) {
    const auto out = require_out(gl, "dataset directory");
    const Graph g = synthesize_citation_graph(CitationProfile::by_name(a.name), gl.seed);
    save_graph(g, out);
    std::cout << g.name << ": " << g.num_nodes << " nodes, " << g.num_edges() << " edges, " << g.feature_dim
              << " features, " << g.num_classes << " classes -> " << out << "\n";
    return 0;
}

// ----------------------------------------------------------------------- train

struct TrainArgs {
    std::string model;
    std::string dataset;
    std::optional<std::size_t> epochs;
    std::optional<std::size_t> patience;
    std::optional<double> lr;
    std::optional<double> weight_decay;
    std::optional<double> dropout;
};

int cmd_train(const TrainArgs& a, const Globals& gl) {
    const fs::path out = require_out(gl, "checkpoint directory");
    const ModelKind kind = model_kind_from_string(a.model);
    const Graph g = load_split_graph(a.dataset);
    const auto ctx = GraphContext::build(g);

    TrainConfig cfg = default_train_config(kind);
    cfg.seed = gl.seed;
    if (a.epochs) cfg.max_epochs = *a.epochs;
    if (a.patience) cfg.patience = *a.patience;
    if (a.lr) cfg.learning_rate = *a.lr;
    if (a.weight_decay) cfg.weight_decay = *a.weight_decay;
    if (a.dropout) cfg.dropout = *a.dropout;

    const auto result = train(kind, default_architecture(kind, g), ctx, cfg);

    Checkpoint ckpt;
    ckpt.model = result.model;
    ckpt.dataset = g.name;
    ckpt.seed = gl.seed;
    ckpt.config = cfg;
    ckpt.val_accuracy = result.val_accuracy;
    ckpt.test_accuracy = result.test_accuracy;
    ckpt.best_epoch = result.best_epoch;
    save_checkpoint(ckpt, out);

    std::string log = "epoch,train_loss,train_acc,val_loss,val_acc\n";
    for (const auto& e : result.log) {
        log += std::to_string(e.epoch) + ',' + format_number(e.train_loss) + ',' + format_number(e.train_accuracy) +
               ',' + format_number(e.val_loss) + ',' + format_number(e.val_accuracy) + '\n';
    }
    io::write_text(out / "train_log.csv", log);

    std::printf("%s on %s: %zu trained weights, best epoch %zu, val %.4f, test %.4f -> %s\n", a.model.c_str(),
                g.name.c_str(), result.model.total_weights(), result.best_epoch, result.val_accuracy,
                result.test_accuracy, out.c_str());
    return 0;
}

// ---------------------------------------------------------------------- attack

struct AttackArgs {
    std::string checkpoint;
    std::string dataset;
    std::size_t layer = 0;  // 1-based; 0 = unset
    double ber = 1e-2;
    std::string baseline = "gbfa";
    bool escalate = false;
    double threshold = 0.05;
    std::vector<double> schedule;
    std::string cadence = "progressive";
    std::string flip_rule = "indicator";
    bool allow_nan = false;
    bool no_inf = false;
};

Cadence parse_cadence(const std::string& s) { return s == "batch" ? Cadence::Batch : Cadence::Progressive; }
FlipRule parse_rule(const std::string& s) { return s == "sign-step" ? FlipRule::SignStep : FlipRule::Indicator; }

int cmd_attack(const AttackArgs& a, const Globals& gl) {
    const fs::path out = require_out(gl, "report path");
    const bool random = a.baseline == "random";
    if (!random && a.layer == 0) throw UsageError("--layer is required for the gbfa attack");

    const Checkpoint ckpt = load_checkpoint(a.checkpoint);
    const Graph g = load_split_graph(a.dataset);
    if (ckpt.dataset != g.name) {
        throw DataError("checkpoint was trained on '" + ckpt.dataset + "' but the dataset is '" + g.name + "'");
    }
    const auto ctx = GraphContext::build(g);

    json echo = {{"command", "attack"}, {"checkpoint", a.checkpoint}, {"dataset", a.dataset},
                 {"baseline", a.baseline}, {"seed", gl.seed}, {"ber", a.ber}};
    AttackReport rep;
    if (random) {
        rep = run_random_baseline(ckpt.model, ctx, a.ber, gl.seed);
    } else {
        AttackConfig cfg;
        cfg.target_layer = a.layer - 1;
        cfg.ber = a.ber;
        cfg.seed = gl.seed;
        if (!a.schedule.empty()) cfg.ber_schedule = a.schedule;
        cfg.success_threshold = a.threshold;
        cfg.escalate = a.escalate;
        cfg.cadence = parse_cadence(a.cadence);
        cfg.bit_policy.rule = parse_rule(a.flip_rule);
        cfg.bit_policy.allow_nan = a.allow_nan;
        cfg.bit_policy.allow_inf = !a.no_inf;
        echo["config"] = to_json(cfg);
        rep = run_gbfa(ckpt.model, ctx, cfg);
    }
    write_json(out, {{"invocation", echo}, {"model", to_string(ckpt.model.kind)}, {"report", to_json(rep)}});

    std::printf("%s %s-%s", rep.attack.c_str(), to_string(ckpt.model.kind).c_str(), g.name.c_str());
    if (!random) std::printf(" layer %zu", a.layer);
    std::printf(": ber %g, n_bit %zu, baseline %.4f, pac %.4f, asr %.4f, status %s -> %s\n", rep.config.ber, rep.n_bit,
                rep.baseline_accuracy, rep.pac, rep.asr, rep.status.c_str(), out.c_str());
    return 0;
}

// ----------------------------------------------------------------------- sweep

struct SweepArgs {
    std::string grid;
    std::string plotdata;
    std::string reports;
};

std::string plotdata_csv(const std::vector<CellStats>& cells) {
    std::string s = "model,dataset,attack,layer,ber,mean_pac,std_pac,mean_asr,mean_n_bit,runs\n";
    for (const auto& c : cells) {
        s += c.model + ',' + c.dataset + ',' + c.attack + ',' + std::to_string(c.layer) + ',' + format_number(c.ber) +
             ',' + format_number(c.mean_pac) + ',' + format_number(c.std_pac) + ',' + format_number(c.mean_asr) +
             ',' + format_number(c.mean_n_bit) + ',' + std::to_string(c.runs) + '\n';
    }
    return s;
}

struct LoadedTarget {
    std::string name;
    Checkpoint ckpt;
    Graph graph;
    GraphContext ctx;
};

int cmd_sweep(const SweepArgs& a, const Globals& gl) {
    const fs::path out = require_out(gl, "CSV path");
    json grid;
    try {
        grid = json::parse(io::read_text(a.grid));
    } catch (const json::exception& e) {
        throw UsageError("grid file: " + std::string(e.what()));
    }
    const fs::path base = fs::path(a.grid).parent_path();
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

    SweepSpec spec;
    std::vector<std::string> attacks;
    std::vector<std::unique_ptr<LoadedTarget>> loaded;
    try {
        const std::string attack = grid.value("attack", "gbfa");
        if (attack == "gbfa" || attack == "random") {
            attacks = {attack};
        } else if (attack == "both") {
            attacks = {"gbfa", "random"};
        } else {
            throw UsageError("grid: attack must be gbfa, random or both");
        }
        if (grid.contains("layers")) {
            spec.layers.emplace();
            for (std::size_t l : grid.at("layers").get<std::vector<std::size_t>>()) {
                if (l == 0) throw UsageError("grid: layers are 1-based");
                spec.layers->push_back(l - 1);
            }
        }
        spec.bers = grid.value("bers", kDefaultBerSchedule);
        if (grid.contains("seeds")) {
            spec.seeds = grid.at("seeds").get<std::vector<std::uint64_t>>();
        } else {
            const auto n = grid.value("num_seeds", std::size_t{10});
            for (std::size_t i = 0; i < n; ++i) spec.seeds.push_back(gl.seed + i);
        }
        spec.base.success_threshold = grid.value("threshold", 0.05);
        spec.base.cadence = parse_cadence(grid.value("cadence", std::string("progressive")));
        spec.base.bit_policy.rule = parse_rule(grid.value("flip_rule", std::string("indicator")));
        spec.base.bit_policy.allow_nan = grid.value("allow_nan", false);
        spec.base.bit_policy.allow_inf = grid.value("allow_inf", true);

        if (!grid.contains("targets") || grid["targets"].empty()) throw UsageError("grid: no targets");
        if (spec.bers.empty() || spec.seeds.empty()) throw UsageError("grid: empty BER or seed axis");
        for (const auto& t : grid.at("targets")) {
            const auto ckpt_path = resolve(t.at("checkpoint").get<std::string>());
            const auto data_path = resolve(t.at("dataset").get<std::string>());
            if (!fs::exists(ckpt_path)) throw UsageError("grid: checkpoint not found: " + ckpt_path.string());
            if (!fs::exists(data_path)) throw UsageError("grid: dataset not found: " + data_path.string());
            auto lt = std::make_unique<LoadedTarget>();
            lt->ckpt = load_checkpoint(ckpt_path);
            lt->graph = load_split_graph(data_path);
            lt->ctx = GraphContext::build(lt->graph);
            lt->name = t.value("name", to_string(lt->ckpt.model.kind));
            if (lt->name.find_first_of(",\n") != std::string::npos) throw UsageError("grid: target names cannot contain commas");
            loaded.push_back(std::move(lt));
        }
    } catch (const json::exception& e) {
        throw UsageError("grid file: " + std::string(e.what()));
    }

    std::vector<SweepTarget> targets;
    for (const auto& lt : loaded) targets.push_back({lt->name, lt->graph.name, &lt->ckpt.model, &lt->ctx});

    std::vector<SweepRow> rows;
    for (const auto& attack : attacks) {
        spec.kind = attack == "gbfa" ? AttackKind::GBFA : AttackKind::Random;
        SweepReportSink sink;
        if (!a.reports.empty()) {
            fs::create_directories(a.reports);
            sink = [&, attack](std::size_t i, const AttackReport& rep) {
                char name[64];
                std::snprintf(name, sizeof name, "%s-%06zu.json", attack.c_str(), i);
                io::write_text(fs::path(a.reports) / name, to_json(rep).dump(2) + "\n");
            };
        }
        auto part = run_sweep(targets, spec, gl.jobs, sink);
        rows.insert(rows.end(), part.begin(), part.end());
    }

    write_text_file(out, sweep_csv(rows));
    const auto cells = aggregate(rows);
    if (!a.plotdata.empty()) write_text_file(a.plotdata, plotdata_csv(cells));

    std::size_t errors = 0;
    for (const auto& r : rows) {
        if (r.status == "error") {
            ++errors;
            std::cerr << "error: " << r.model << "/" << r.dataset << " layer " << r.layer << " ber " << r.ber << " seed "
                      << r.seed << ": " << r.error << "\n";
        }
    }
    for (const auto& c : cells) {
        std::printf("%-10s %-8s %-6s layer %zu ber %-8g pac %.4f +- %.4f (baseline %.4f, n_bit %.1f, %zu runs)\n",
                    c.model.c_str(), c.dataset.c_str(), c.attack.c_str(), c.layer, c.ber, c.mean_pac, c.std_pac,
                    c.baseline_acc, c.mean_n_bit, c.runs);
    }
    std::printf("%zu rows -> %s\n", rows.size(), out.c_str());
    return errors == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------- report

struct ReportArgs {
    std::string input;
    std::string plotdata;
};

int cmd_report(const ReportArgs& a, const Globals& gl) {
    const auto rows = parse_sweep_csv(io::read_text(a.input));
    const auto cells = aggregate(rows);
    json arr = json::array();
    for (const auto& c : cells) {
        arr.push_back({{"model", c.model}, {"dataset", c.dataset}, {"attack", c.attack}, {"layer", c.layer},
                       {"ber", c.ber}, {"runs", c.runs}, {"mean_pac", c.mean_pac}, {"std_pac", c.std_pac},
                       {"mean_asr", c.mean_asr}, {"mean_n_bit", c.mean_n_bit}, {"baseline_acc", c.baseline_acc}});
    }
    const json summary = {{"source", a.input}, {"rows", rows.size()}, {"cells", arr}};
    if (gl.out.empty()) {
        std::cout << summary.dump(2) << "\n";
    } else {
        write_json(gl.out, summary);
    }
    if (!a.plotdata.empty()) write_text_file(a.plotdata, plotdata_csv(cells));
    return 0;
}

// ---------------------------------------------------------------------- traces

struct TracesArgs {
    std::size_t count = 100;
    double noise = 0.05;
    std::string family = "any";
};

int cmd_traces(const TracesArgs& a, const Globals& gl) {
    const fs::path out = require_out(gl, "trace directory");
    fs::create_directories(out);
    std::optional<ModelKind> family;
    if (a.family != "any") family = model_kind_from_string(a.family);
    for (std::size_t i = 0; i < a.count; ++i) {
        const auto spec = sniff::random_trace_spec(gl.seed + i, a.noise, family);
        char name[32];
        std::snprintf(name, sizeof name, "trace-%05zu.jsonl", i);
        sniff::write_trace(sniff::synthesize_trace(spec.arch, spec.opts), out / name);
    }
    std::printf("%zu traces (noise %g) -> %s\n", a.count, a.noise, out.c_str());
    return 0;
}

// ----------------------------------------------------------------------- sniff

struct SniffArgs {
    std::string traces;
    std::string train_dir;
    bool fit = false;
    bool decode = false;
    std::string hmm;
    std::string save_hmm;
    std::size_t beam = 16;
};

std::vector<fs::path> trace_files(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no .jsonl traces in " + dir.string());
    return files;
}

json labels_json(const std::vector<sniff::LayerLabel>& seq) {
    json j = json::array();
    for (auto l : seq) j.push_back(sniff::to_string(l));
    return j;
}

int cmd_sniff(const SniffArgs& a, const Globals& gl) {
    const fs::path out = require_out(gl, "output path");
    if (!a.fit && !a.decode) throw UsageError("sniff needs --fit, --decode or both");
    if (a.decode && !a.fit && a.hmm.empty()) throw UsageError("--decode without --fit needs --hmm");
    if (a.beam == 0) throw UsageError("--beam must be at least 1");

    sniff::HmmParams hmm;
    if (a.fit) {
        std::vector<sniff::KernelTrace> train;
        for (const auto& f : trace_files(a.train_dir.empty() ? a.traces : a.train_dir)) train.push_back(sniff::read_trace(f));
        // states: the labels that occur in the training traces
        std::vector<bool> seen(sniff::kNumLabels, false);
        for (const auto& t : train)
            for (auto l : t.kernel_labels) seen[static_cast<std::size_t>(l)] = true;
        std::vector<sniff::LayerLabel> states;
        for (std::size_t i = 0; i < sniff::kNumLabels; ++i)
            if (seen[i]) states.push_back(static_cast<sniff::LayerLabel>(i));
        hmm = sniff::fit_hmm(train, states);
        if (!a.save_hmm.empty()) write_json(a.save_hmm, sniff::to_json(hmm));
        if (!a.decode) {
            write_json(out, sniff::to_json(hmm));
            std::printf("HMM fitted on %zu traces -> %s\n", train.size(), out.c_str());
            return 0;
        }
    } else {
        hmm = sniff::hmm_from_json(json::parse(io::read_text(a.hmm)));
    }

    json items = json::array();
    std::vector<std::vector<sniff::LayerLabel>> pred, truth;
    for (const auto& f : trace_files(a.traces)) {
        const auto trace = sniff::read_trace(f);
        const auto decoded = sniff::ctc_beam_decode(sniff::posteriors(hmm, trace), a.beam);
        json item = {{"file", f.filename().string()}, {"predicted", labels_json(decoded.labels)},
                     {"log_prob", decoded.log_prob}};
        if (!trace.kernel_labels.empty()) {
            const auto gt = trace.sequence();
            item["truth"] = labels_json(gt);
            item["ler"] = sniff::ler(decoded.labels, gt);
            pred.push_back(decoded.labels);
            truth.push_back(gt);
        }
        items.push_back(item);
    }
    json result = {{"invocation",
                    {{"command", "sniff"},
                     {"traces", a.traces},
                     {"train", a.fit ? (a.train_dir.empty() ? a.traces : a.train_dir) : std::string()},
                     {"hmm", a.hmm},
                     {"beam_width", a.beam},
                     {"seed", gl.seed}}},
                   {"num_traces", items.size()},
                   {"num_labeled", truth.size()},
                   {"mean_ler", truth.empty() ? json(nullptr) : json(sniff::mean_ler(pred, truth))},
                   {"traces", items}};
    write_json(out, result);
    if (truth.empty()) {
        std::printf("decoded %zu unlabeled traces -> %s\n", items.size(), out.c_str());
    } else {
        std::printf("decoded %zu traces, mean LER %.4f -> %s\n", items.size(), result["mean_ler"].get<double>(),
                    out.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gradual bit-flip fault attack simulator for graph neural networks"};
    app.require_subcommand(1);
    Globals gl;
    app.add_option("--seed", gl.seed, "Random seed")->capture_default_str();
    app.add_option("--jobs", gl.jobs, "Concurrent attack runs (sweep)")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--out", gl.out, "Output file or directory");

    const std::vector<std::string> model_kinds{"gcn", "sage", "gin", "mlp"};

    MakeDatasetArgs mk;
    auto* c_mk = app.add_subcommand("make-dataset", "Generate a synthetic citation graph in the neutral format");
    c_mk->add_option("--name", mk.name, "Profile")->required()->check(CLI::IsMember({"cora", "pubmed"}));

    TrainArgs tr;
    auto* c_tr = app.add_subcommand("train", "Train a model and write a checkpoint directory");
    c_tr->add_option("--model", tr.model, "Model family")->required()->check(CLI::IsMember(model_kinds));
    c_tr->add_option("--dataset", tr.dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
    c_tr->add_option("--epochs", tr.epochs, "Maximum epochs");
    c_tr->add_option("--patience", tr.patience, "Early-stopping patience");
    c_tr->add_option("--lr", tr.lr, "Learning rate")->check(CLI::PositiveNumber);
    c_tr->add_option("--weight-decay", tr.weight_decay, "L2 weight decay")->check(CLI::NonNegativeNumber);
    c_tr->add_option("--dropout", tr.dropout, "Dropout rate")->check(CLI::Range(0.0, 0.99));

    AttackArgs at;
    auto* c_at = app.add_subcommand("attack", "Run one GBFA or random-flip attack");
    c_at->add_option("--model", at.checkpoint, "Checkpoint directory")->required()->check(CLI::ExistingDirectory);
    c_at->add_option("--dataset", at.dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
    c_at->add_option("--layer", at.layer, "Target layer (1-based)")->check(CLI::PositiveNumber);
    c_at->add_option("--ber", at.ber, "Bit error rate")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    c_at->add_option("--baseline", at.baseline, "Attack kind")->check(CLI::IsMember({"gbfa", "random"}))->capture_default_str();
    c_at->add_flag("--escalate", at.escalate, "Walk up the BER schedule until the accuracy drop reaches the threshold");
    c_at->add_option("--threshold", at.threshold, "Success threshold (accuracy drop)")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    c_at->add_option("--schedule", at.schedule, "BER schedule for --escalate");
    c_at->add_option("--cadence", at.cadence, "Gradient refresh cadence")->check(CLI::IsMember({"progressive", "batch"}))->capture_default_str();
    c_at->add_option("--flip-rule", at.flip_rule, "Bit eligibility rule")->check(CLI::IsMember({"indicator", "sign-step"}))->capture_default_str();
    c_at->add_flag("--allow-nan", at.allow_nan, "Permit flips that produce NaN");
    c_at->add_flag("--no-inf", at.no_inf, "Forbid flips that produce infinities");

    SweepArgs sw;
    auto* c_sw = app.add_subcommand("sweep", "Run an attack grid and write a CSV");
    c_sw->add_option("--grid", sw.grid, "Grid JSON")->required()->check(CLI::ExistingFile);
    c_sw->add_option("--emit-plotdata", sw.plotdata, "Write (BER, mean PAC, stddev) series per layer");
    c_sw->add_option("--reports", sw.reports, "Directory for per-run JSON reports");

    ReportArgs rp;
    auto* c_rp = app.add_subcommand("report", "Aggregate a sweep CSV");
    c_rp->add_option("--in", rp.input, "Sweep CSV")->required()->check(CLI::ExistingFile);
    c_rp->add_option("--emit-plotdata", rp.plotdata, "Write (BER, mean PAC, stddev) series per layer");

    TracesArgs tc;
    auto* c_tc = app.add_subcommand("traces", "Synthesize labeled kernel traces");
    c_tc->add_option("--count", tc.count, "Number of traces")->capture_default_str();
    c_tc->add_option("--noise", tc.noise, "Relative feature noise")->check(CLI::NonNegativeNumber)->capture_default_str();
    c_tc->add_option("--family", tc.family, "Model family")->check(CLI::IsMember({"any", "gcn", "sage", "gin", "mlp"}))->capture_default_str();

    SniffArgs sn;
    auto* c_sn = app.add_subcommand("sniff", "Fit the layer-sequence HMM and/or decode traces");
    c_sn->add_option("--traces", sn.traces, "Trace directory to decode (and fit on)")->required()->check(CLI::ExistingDirectory);
    c_sn->add_option("--train", sn.train_dir, "Separate training trace directory")->check(CLI::ExistingDirectory);
    c_sn->add_flag("--fit", sn.fit, "Fit an HMM on labeled traces");
    c_sn->add_flag("--decode", sn.decode, "Decode traces and score LER");
    c_sn->add_option("--hmm", sn.hmm, "Fitted HMM JSON to decode with")->check(CLI::ExistingFile);
    c_sn->add_option("--save-hmm", sn.save_hmm, "Also write the fitted HMM here");
    c_sn->add_option("--beam", sn.beam, "CTC beam width")->capture_default_str();

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (c_mk->parsed()) return cmd_make_dataset(mk, gl);
        if (c_tr->parsed()) return cmd_train(tr, gl);
        if (c_at->parsed()) return cmd_attack(at, gl);
        if (c_sw->parsed()) return cmd_sweep(sw, gl);
        if (c_rp->parsed()) return cmd_report(rp, gl);
        if (c_tc->parsed()) return cmd_traces(tc, gl);
        if (c_sn->parsed()) return cmd_sniff(sn, gl);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid configuration: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
