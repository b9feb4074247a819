// Copyright (c) 2026, The gbfa-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <sstream>
#include <thread>
#include <tuple>

#include "gbfa/attack.hpp"
#include "gbfa/format.hpp"
#include "gbfa/graph.hpp"

namespace gbfa {

namespace {

struct Cell {
    std::size_t target;
    std::size_t layer;
    double ber;
    std::uint64_t seed;
};

SweepRow run_cell(const SweepTarget& t, const SweepSpec& spec, const Cell& c, std::size_t index,
                  const SweepReportSink& sink) {
    SweepRow row;
    row.model = t.model_name;
    row.dataset = t.dataset_name;
    row.ber = c.ber;
    row.seed = c.seed;
    AttackReport rep;
    if (spec.kind == AttackKind::GBFA) {
        AttackConfig cfg = spec.base;
        cfg.target_layer = c.layer;
        cfg.ber = c.ber;
        cfg.seed = c.seed;
        cfg.escalate = false;
        rep = run_gbfa(*t.model, *t.ctx, cfg);
        row.layer = c.layer + 1;
    } else {
        rep = run_random_baseline(*t.model, *t.ctx, c.ber, c.seed);
        row.layer = 0;
    }
    row.attack = rep.attack;
    row.pac = rep.pac;
    row.asr = rep.asr;
    row.n_bit = rep.n_bit;
    row.sampled = rep.sampled;
    row.baseline_acc = rep.baseline_accuracy;
    row.status = rep.status;
    if (sink) sink(index, rep);
    return row;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(line);
    while (std::getline(in, cur, ',')) out.push_back(cur);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

const char* const kHeader = "model,dataset,layer,ber,seed,pac,asr,n_bit,baseline_acc,attack,status";

}  // namespace

std::vector<SweepRow> run_sweep(const std::vector<SweepTarget>& targets, const SweepSpec& spec,
                                std::size_t jobs, const SweepReportSink& sink) {
    if (spec.bers.empty() || spec.seeds.empty()) throw std::invalid_argument("sweep needs BERs and seeds");
    std::vector<Cell> cells;
    for (std::size_t t = 0; t < targets.size(); ++t) {
        if (!targets[t].model || !targets[t].ctx) throw std::invalid_argument("sweep target without model");
        std::vector<std::size_t> layers;
        if (spec.kind == AttackKind::Random) {
            layers = {0};
        } else if (spec.layers) {
            layers = *spec.layers;
        } else {
            for (std::size_t l = 0; l < targets[t].model->num_layers(); ++l) layers.push_back(l);
        }
        for (std::size_t l : layers) {
            if (spec.kind == AttackKind::GBFA && l >= targets[t].model->num_layers()) {
                throw std::invalid_argument("layer " + std::to_string(l + 1) + " out of range for " +
                                            targets[t].model_name);
            }
            for (double b : spec.bers)
                for (std::uint64_t s : spec.seeds) cells.push_back({t, l, b, s});
        }
    }

    std::vector<SweepRow> rows(cells.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            const auto& c = cells[i];
            try {
                rows[i] = run_cell(targets[c.target], spec, c, i, sink);
            } catch (const std::exception& e) {
                auto& r = rows[i];
                r.model = targets[c.target].model_name;
                r.dataset = targets[c.target].dataset_name;
                r.attack = spec.kind == AttackKind::GBFA ? "gbfa" : "random";
                r.layer = spec.kind == AttackKind::GBFA ? c.layer + 1 : 0;
                r.ber = c.ber;
                r.seed = c.seed;
                r.status = "error";
                r.error = e.what();
            }
        }
    };
    jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(1, cells.size()));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out = kHeader;
    out += '\n';
    for (const auto& r : rows) {
        out += r.model + ',' + r.dataset + ',' + std::to_string(r.layer) + ',' + format_number(r.ber) + ',' +
               std::to_string(r.seed) + ',' + format_number(r.pac) + ',' + format_number(r.asr) + ',' + std::to_string(r.n_bit) + ',' +
               format_number(r.baseline_acc) + ',' + r.attack + ',' + r.status + '\n';
    }
    return out;
}

std::vector<SweepRow> parse_sweep_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kHeader) throw DataError("unexpected sweep CSV header");
    std::vector<SweepRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split_line(line);
        if (f.size() != 11) throw DataError("sweep CSV line " + std::to_string(lineno) + ": expected 11 fields");
        try {
            SweepRow r;
            r.model = f[0];
            r.dataset = f[1];
            r.layer = std::stoul(f[2]);
            r.ber = std::stod(f[3]);
            r.seed = std::stoull(f[4]);
            r.pac = std::stod(f[5]);
            r.asr = std::stod(f[6]);
            r.n_bit = std::stoul(f[7]);
            r.baseline_acc = std::stod(f[8]);
            r.attack = f[9];
            r.status = f[10];
            rows.push_back(std::move(r));
        } catch (const std::logic_error&) {
            throw DataError("sweep CSV line " + std::to_string(lineno) + ": malformed number");
        }
    }
    return rows;
}

std::vector<CellStats> aggregate(const std::vector<SweepRow>& rows) {
    using Key = std::tuple<std::string, std::string, std::string, std::size_t, double>;
    std::map<Key, std::size_t> index;
    std::vector<CellStats> out;
    std::vector<std::vector<double>> pacs;
    for (const auto& r : rows) {
        const Key k{r.model, r.dataset, r.attack, r.layer, r.ber};
        auto [it, inserted] = index.try_emplace(k, out.size());
        if (inserted) {
            CellStats c;
            c.model = r.model;
            c.dataset = r.dataset;
            c.attack = r.attack;
            c.layer = r.layer;
            c.ber = r.ber;
            c.baseline_acc = r.baseline_acc;
            out.push_back(c);
            pacs.emplace_back();
        }
        auto& c = out[it->second];
        ++c.runs;
        c.mean_pac += r.pac;
        c.mean_asr += r.asr;
        c.mean_n_bit += static_cast<double>(r.n_bit);
        pacs[it->second].push_back(r.pac);
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        auto& c = out[i];
        const double n = static_cast<double>(c.runs);
        c.mean_pac /= n;
        c.mean_asr /= n;
        c.mean_n_bit /= n;
        double ss = 0.0;
        for (double p : pacs[i]) ss += (p - c.mean_pac) * (p - c.mean_pac);
        c.std_pac = c.runs > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    }
    return out;
}

}  // namespace gbfa
