// Copyright (c) 2026, The gbfa-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <mutex>
#include <set>

#include "gbfa/attack.hpp"
#include "gbfa/format.hpp"
#include "test_support.hpp"

using namespace gbfa;
using gbfa::testing::random_graph;
using gbfa::testing::brute_force_attack;
using gbfa::testing::reference_model;

namespace {

std::vector<LayerSpec> gcn2(std::size_t f, std::size_t c, std::size_t h = 4) {
    return {{LayerKind::GCNConv, f, h, Activation::ReLU}, {LayerKind::GCNConv, h, c, Activation::None}};
}

ModelParams trained(ModelKind kind, const std::vector<LayerSpec>& specs, const GraphContext& ctx) {
    TrainConfig cfg;
    cfg.max_epochs = 60;
    cfg.dropout = 0.0;
    return train(kind, specs, ctx, cfg).model;
}

std::size_t ceil_count(double ber, std::size_t n) { return static_cast<std::size_t>(std::ceil(ber * n)); }

}  // namespace

TEST_CASE("sample_count", "[attack]") {
    CHECK(sample_count(0.1, 224) == 22);
    CHECK(sample_count(0.1, 2048) == 204);
    CHECK(sample_count(0.1, 91712) == 9171);
    CHECK(sample_count(0.1, 4096) == 409);
    CHECK(sample_count(1e-2, 112) == 1);
    CHECK(sample_count(1e-3, 32000) == 32);
    CHECK(sample_count(1e-4, 224) == 0);
    CHECK(sample_count(1.0, 17) == 17);
    for (std::size_t n : {1ul, 7ul, 224ul, 2048ul, 91712ul})
        for (double b : kDefaultBerSchedule) CHECK(sample_count(b, n) <= ceil_count(b, n));
}

TEST_CASE("compute_asr", "[attack]") {
    const std::vector<std::uint32_t> a{0, 1, 2, 0, 1, 2, 0, 1, 2, 0};
    std::vector<std::uint32_t> b = a;
    const std::vector<std::uint8_t> all(10, 1);
    CHECK(compute_asr(a, b, all) == 0.0);
    b[0] = 1;
    b[4] = 2;
    b[9] = 2;
    CHECK(compute_asr(a, b, all) == Catch::Approx(0.3));
    std::vector<std::uint32_t> c(10);
    for (std::size_t i = 0; i < 10; ++i) c[i] = a[i] + 1;
    CHECK(compute_asr(a, c, all) == 1.0);
    CHECK_THROWS_AS(compute_asr(a, std::vector<std::uint32_t>(9), all), std::invalid_argument);
}

TEST_CASE("run_gbfa equals the brute-force reference on a 10-node GCN", "[attack][oracle]") {
    const Graph g = random_graph(10, 14, 5, 3, 21);
    const auto ctx = GraphContext::build(g);
    const auto model = ModelParams::initialize(ModelKind::GCN, gcn2(5, 3), 4);

    struct Case {
        Cadence cadence;
        BitPolicy policy;
        std::uint64_t seed;
    };
    const Case cases[] = {
        {Cadence::Progressive, {}, 0},
        {Cadence::Progressive, {}, 1},
        {Cadence::Progressive, {FlipRule::Indicator, false, false}, 0},
        {Cadence::Progressive, {FlipRule::Indicator, false, false}, 5},
        {Cadence::Batch, {FlipRule::Indicator, false, false}, 2},
    };
    for (const auto& c : cases) {
        AttackConfig cfg;
        cfg.target_layer = 1;
        cfg.ber = 1.0;
        cfg.seed = c.seed;
        cfg.cadence = c.cadence;
        cfg.bit_policy = c.policy;
        const auto rep = run_gbfa(model, ctx, cfg);
        const auto ref = brute_force_attack(model, g, 1, 1.0, c.seed, c.cadence == Cadence::Progressive, c.policy);
        INFO("seed " << c.seed << " allow_inf " << c.policy.allow_inf);
        CHECK(rep.sampled == 12);
        REQUIRE(rep.flip_log.size() == ref.flips.size());
        for (std::size_t k = 0; k < ref.flips.size(); ++k) {
            CHECK(rep.flip_log[k].address.offset == ref.flips[k].offset);
            CHECK(rep.flip_log[k].bit.value() == ref.flips[k].bit);
            CHECK(gbfa::testing::pattern(rep.flip_log[k].new_value) == gbfa::testing::pattern(ref.flips[k].new_value));
            if (std::isfinite(ref.losses[k])) CHECK(rep.loss_trace[k] == Catch::Approx(ref.losses[k]).epsilon(1e-9));
        }
        CHECK(rep.n_bit == ref.flips.size());
        CHECK(rep.pac == ref.pac);
        CHECK(rep.asr == ref.asr);
    }
}

TEST_CASE("attack report invariants across layers, BERs and seeds", "[attack][property]") {
    const Graph g = random_graph(60, 150, 8, 3, 2);
    const auto ctx = GraphContext::build(g);
    const auto specs = std::vector<LayerSpec>{{LayerKind::GCNConv, 8, 12, Activation::ReLU},
                                              {LayerKind::GCNConv, 12, 6, Activation::ReLU},
                                              {LayerKind::GCNConv, 6, 3, Activation::None}};
    const auto model = trained(ModelKind::GCN, specs, ctx);
    for (std::size_t layer = 0; layer < 3; ++layer) {
        for (double ber : {1e-2, 1e-1, 0.5}) {
            for (std::uint64_t seed = 0; seed < 4; ++seed) {
                AttackConfig cfg;
                cfg.target_layer = layer;
                cfg.ber = ber;
                cfg.seed = seed;
                const auto rep = run_gbfa(model, ctx, cfg);
                const std::size_t w = model.layers[layer].weight_count();
                CHECK(rep.layer_weight_count == w);
                CHECK(rep.n_bit <= ceil_count(ber, w));
                CHECK(rep.n_bit == rep.flip_log.size());
                CHECK(rep.loss_trace.size() == rep.n_bit);
                CHECK(rep.sampled == sample_count(ber, w));
                if (rep.ignored == 0) CHECK(rep.n_bit == rep.sampled);
                CHECK(rep.n_bit + rep.ignored == rep.sampled);
                CHECK((rep.pac >= 0.0 && rep.pac <= 1.0));
                CHECK((rep.asr >= 0.0 && rep.asr <= 1.0));
                std::set<std::size_t> offsets;
                for (const auto& f : rep.flip_log) {
                    CHECK(f.address.layer == layer);
                    CHECK(offsets.insert(f.address.offset).second);
                    // first-order soundness
                    CHECK(f.weight_gradient * (static_cast<double>(f.new_value) - f.old_value) > 0.0);
                    CHECK(bit_is_set(f.old_value, f.bit) != bit_is_set(f.new_value, f.bit));
                }
            }
        }
    }
}

TEST_CASE("flip log replays against recomputed gradients", "[attack][property]") {
    const Graph g = random_graph(60, 150, 8, 3, 3);
    const auto ctx = GraphContext::build(g);
    auto model = trained(ModelKind::SAGE, {{LayerKind::SAGEMean, 8, 10, Activation::ReLU},
                                           {LayerKind::SAGEMean, 10, 3, Activation::None}}, ctx);
    for (std::size_t layer : {0ul, 1ul}) {
        AttackConfig cfg;
        cfg.target_layer = layer;
        cfg.ber = 0.2;
        cfg.seed = 9;
        cfg.bit_policy.allow_inf = false;
        const auto rep = run_gbfa(model, ctx, cfg);
        REQUIRE(rep.n_bit > 0);
        ModelParams replay = model;
        for (const auto& f : rep.flip_log) {
            const auto lg = loss_and_grads(replay, ctx, g.masks.test);
            const double dl = lg.grads.weight[layer][f.address.offset];
            const float w = replay.layers[layer].weight[f.address.offset];
            REQUIRE(gbfa::testing::pattern(w) == gbfa::testing::pattern(f.old_value));
            CHECK(dl == f.weight_gradient);
            CHECK(bit_gradients(dl, w).eligible(f.bit));
            CHECK(select_vulnerable_bit(dl, w, cfg.bit_policy) == f.bit);
            replay.layers[layer].weight[f.address.offset] = flip_bit(w, f.bit);
        }
        CHECK(evaluate(replay, ctx, g.masks.test) == rep.pac);
    }
}

TEST_CASE("zero sampled weights leave the model untouched", "[attack]") {
    const Graph g = random_graph(30, 60, 4, 3, 1);
    const auto ctx = GraphContext::build(g);
    const auto model = ModelParams::initialize(ModelKind::GCN, gcn2(4, 3), 1);
    AttackConfig cfg;
    cfg.target_layer = 1;
    cfg.ber = 1e-4;
    const auto rep = run_gbfa(model, ctx, cfg);
    CHECK(rep.sampled == 0);
    CHECK(rep.n_bit == 0);
    CHECK(rep.pac == rep.baseline_accuracy);
    CHECK(rep.asr == 0.0);
    CHECK(rep.status == "ok");

    const auto rnd = run_random_baseline(model, ctx, 1e-4, 0);
    CHECK(rnd.n_bit == 0);
    CHECK(rnd.pac == rnd.baseline_accuracy);
}

TEST_CASE("all sampled weights ignored is flagged", "[attack]") {
    Graph g = random_graph(20, 30, 4, 3, 1);
    std::fill(g.features.begin(), g.features.end(), 0.0f);
    const auto ctx = GraphContext::build(g);
    const auto model = ModelParams::initialize(ModelKind::GCN, gcn2(4, 3), 1);
    AttackConfig cfg;
    cfg.target_layer = 0;
    cfg.ber = 1.0;
    const auto rep = run_gbfa(model, ctx, cfg);
    CHECK(rep.sampled == 16);
    CHECK(rep.n_bit == 0);
    CHECK(rep.ignored == 16);
    CHECK(rep.status == "no_eligible_weights");
}

TEST_CASE("escalation walks the schedule", "[attack]") {
    const Graph g = random_graph(40, 80, 4, 3, 6);
    const auto ctx = GraphContext::build(g);
    const auto model = ModelParams::initialize(ModelKind::GCN, gcn2(4, 3, 8), 1);
    AttackConfig cfg;
    cfg.target_layer = 1;
    cfg.ber = 1e-3;
    cfg.escalate = true;
    cfg.success_threshold = 1.0;  // unreachable
    const auto rep = run_gbfa(model, ctx, cfg);
    REQUIRE(rep.attempts.size() == 3);
    CHECK(rep.attempts[0].ber == 1e-3);
    CHECK(rep.attempts[2].ber == 1e-1);
    CHECK(rep.config.ber == 1e-1);
    CHECK(rep.status == "failed");
    CHECK_FALSE(rep.success);

    cfg.success_threshold = 0.0;
    cfg.ber = 1e-1;
    const auto ok = run_gbfa(model, ctx, cfg);
    REQUIRE_FALSE(ok.attempts.empty());
    for (std::size_t i = 0; i + 1 < ok.attempts.size(); ++i) CHECK_FALSE(ok.attempts[i].success);
    CHECK(ok.success == ok.attempts.back().success);
}

TEST_CASE("invalid configurations are rejected", "[attack]") {
    const Graph g = random_graph(10, 10, 4, 3, 1);
    const auto ctx = GraphContext::build(g);
    const auto model = ModelParams::initialize(ModelKind::GCN, gcn2(4, 3), 1);
    AttackConfig cfg;
    cfg.target_layer = 2;
    CHECK_THROWS_AS(run_gbfa(model, ctx, cfg), std::invalid_argument);
    cfg.target_layer = 0;
    cfg.ber = 0.0;
    CHECK_THROWS_AS(run_gbfa(model, ctx, cfg), std::invalid_argument);
    cfg.ber = 1.5;
    CHECK_THROWS_AS(run_gbfa(model, ctx, cfg), std::invalid_argument);
    cfg.ber = 0.1;
    cfg.ber_schedule = {1e-2, 1e-3};
    CHECK_THROWS_AS(run_gbfa(model, ctx, cfg), std::invalid_argument);
    CHECK_THROWS_AS(run_random_baseline(model, ctx, 0.0, 0), std::invalid_argument);
}

TEST_CASE("attack reports are deterministic", "[attack][property]") {
    const Graph g = random_graph(50, 100, 6, 3, 8);
    const auto ctx = GraphContext::build(g);
    const auto model = ModelParams::initialize(ModelKind::GIN,
                                               {{LayerKind::GINMLP, 6, 8, Activation::ReLU},
                                                {LayerKind::Linear, 8, 3, Activation::None}},
                                               3);
    AttackConfig cfg;
    cfg.target_layer = 0;
    cfg.ber = 0.1;
    cfg.seed = 12;
    CHECK(to_json(run_gbfa(model, ctx, cfg)).dump() == to_json(run_gbfa(model, ctx, cfg)).dump());
    CHECK(to_json(run_random_baseline(model, ctx, 0.2, 4)).dump() ==
          to_json(run_random_baseline(model, ctx, 0.2, 4)).dump());
    const auto first = to_json(run_gbfa(model, ctx, cfg)).dump();
    cfg.seed = 13;
    CHECK(to_json(run_gbfa(model, ctx, cfg)).dump() != first);
}

TEST_CASE("random baseline flips one bit in distinct weights across layers", "[attack]") {
    const Graph g = random_graph(40, 80, 6, 3, 8);
    const auto ctx = GraphContext::build(g);
    const auto model = ModelParams::initialize(ModelKind::GCN, gcn2(6, 3, 10), 2);
    const auto rep = run_random_baseline(model, ctx, 0.25, 3);
    const std::size_t total = model.total_weights();
    CHECK(rep.attack == "random");
    CHECK(rep.layer_weight_count == total);
    CHECK(rep.sampled == sample_count(0.25, total));
    CHECK(rep.n_bit == rep.sampled);
    std::set<std::pair<std::size_t, std::size_t>> seen;
    std::set<std::size_t> layers;
    for (const auto& f : rep.flip_log) {
        CHECK(seen.insert({f.address.layer, f.address.offset}).second);
        layers.insert(f.address.layer);
        CHECK((gbfa::testing::pattern(f.old_value) ^ gbfa::testing::pattern(f.new_value)) == f.bit.mask());
        CHECK(model.layers[f.address.layer].weight[f.address.offset] == f.old_value);
    }
    CHECK(layers.size() == 2);
    const auto j = to_json(rep);
    CHECK_FALSE(j.contains("target_layer"));
}

TEST_CASE("report JSON carries the resolved configuration", "[attack]") {
    const Graph g = random_graph(20, 30, 4, 3, 1);
    const auto ctx = GraphContext::build(g);
    const auto model = ModelParams::initialize(ModelKind::GCN, gcn2(4, 3), 1);
    AttackConfig cfg;
    cfg.target_layer = 1;
    cfg.ber = 0.5;
    cfg.seed = 77;
    cfg.cadence = Cadence::Batch;
    const auto j = to_json(run_gbfa(model, ctx, cfg));
    CHECK(j.at("config").at("target_layer") == 2);
    CHECK(j.at("config").at("seed") == 77);
    CHECK(j.at("config").at("cadence") == "batch");
    CHECK(j.at("n_bit").get<std::size_t>() == j.at("flip_log").size());
    for (const auto& f : j.at("flip_log")) CHECK(f.at("layer") == 2);
}

TEST_CASE("sweep grid cardinality, ordering and parallel determinism", "[attack][sweep]") {
    const Graph g = random_graph(40, 90, 6, 3, 11);
    const auto ctx = GraphContext::build(g);
    const auto model = ModelParams::initialize(ModelKind::GCN,
                                               {{LayerKind::GCNConv, 6, 10, Activation::ReLU},
                                                {LayerKind::GCNConv, 10, 8, Activation::ReLU},
                                                {LayerKind::GCNConv, 8, 3, Activation::None}},
                                               0);
    std::vector<SweepTarget> targets{{"gcn", "random", &model, &ctx}};
    SweepSpec spec;
    spec.bers = kDefaultBerSchedule;
    for (std::uint64_t s = 0; s < 10; ++s) spec.seeds.push_back(s);

    std::mutex mu;
    std::size_t reports = 0;
    const auto rows = run_sweep(targets, spec, 1, [&](std::size_t, const AttackReport&) {
        std::lock_guard<std::mutex> lock(mu);
        ++reports;
    });
    CHECK(rows.size() == 120);
    CHECK(reports == 120);
    CHECK(rows.front().layer == 1);
    CHECK(rows.back().layer == 3);
    for (const auto& r : rows) {
        const std::size_t w = model.layers[r.layer - 1].weight_count();
        CHECK(r.n_bit <= ceil_count(r.ber, w));
        CHECK(r.status != "error");
    }
    CHECK(sweep_csv(run_sweep(targets, spec, 4)) == sweep_csv(rows));

    SweepSpec none = spec;
    none.layers = std::vector<std::size_t>{};
    CHECK(run_sweep(targets, none).empty());
    none.layers = std::vector<std::size_t>{3};
    CHECK_THROWS_AS(run_sweep(targets, none), std::invalid_argument);

    SweepSpec rnd = spec;
    rnd.kind = AttackKind::Random;
    const auto rrows = run_sweep(targets, rnd, 2);
    CHECK(rrows.size() == 40);
    for (const auto& r : rrows) {
        CHECK(r.layer == 0);
        CHECK(r.attack == "random");
    }
}

TEST_CASE("sweep CSV parses back into the same aggregates", "[attack][sweep][property]") {
    const Graph g = random_graph(40, 90, 6, 3, 12);
    const auto ctx = GraphContext::build(g);
    const auto model = ModelParams::initialize(ModelKind::SAGE,
                                               {{LayerKind::SAGEMean, 6, 10, Activation::ReLU},
                                                {LayerKind::SAGEMean, 10, 3, Activation::None}},
                                               0);
    std::vector<SweepTarget> targets{{"sage", "random", &model, &ctx}};
    SweepSpec spec;
    spec.bers = {1e-2, 1e-1, 0.3};
    spec.seeds = {0, 1, 2, 3, 4};
    const auto rows = run_sweep(targets, spec, 2);
    const auto csv = sweep_csv(rows);
    const auto back = parse_sweep_csv(csv);
    REQUIRE(back.size() == rows.size());
    const auto a = aggregate(rows);
    const auto b = aggregate(back);
    REQUIRE(a.size() == b.size());
    REQUIRE(a.size() == 6);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].model == b[i].model);
        CHECK(a[i].layer == b[i].layer);
        CHECK(a[i].ber == b[i].ber);
        CHECK(a[i].runs == 5);
        CHECK(a[i].mean_pac == b[i].mean_pac);
        CHECK(a[i].std_pac == b[i].std_pac);
        CHECK(a[i].mean_asr == b[i].mean_asr);
        CHECK(a[i].mean_n_bit == b[i].mean_n_bit);
    }
    CHECK(sweep_csv(back) == csv);
    CHECK(csv.substr(0, csv.find('\n')) == "model,dataset,layer,ber,seed,pac,asr,n_bit,baseline_acc,attack,status");

    CHECK_THROWS_AS(parse_sweep_csv("model,dataset\n"), DataError);
    CHECK_THROWS_AS(parse_sweep_csv(csv.substr(0, csv.find('\n') + 1) + "a,b,1,x,0,0,0,0,0,gbfa,ok\n"), DataError);
    CHECK_THROWS_AS(parse_sweep_csv(csv.substr(0, csv.find('\n') + 1) + "a,b,1\n"), DataError);
}

TEST_CASE("aggregate statistics by hand", "[attack][sweep]") {
    std::vector<SweepRow> rows(3);
    const double pacs[] = {0.5, 0.7, 0.9};
    for (int i = 0; i < 3; ++i) {
        rows[i].model = "m";
        rows[i].dataset = "d";
        rows[i].attack = "gbfa";
        rows[i].layer = 1;
        rows[i].ber = 0.1;
        rows[i].pac = pacs[i];
        rows[i].n_bit = static_cast<std::size_t>(i);
    }
    const auto s = aggregate(rows);
    REQUIRE(s.size() == 1);
    CHECK(s[0].mean_pac == Catch::Approx(0.7));
    CHECK(s[0].std_pac == Catch::Approx(0.2));
    CHECK(s[0].mean_n_bit == Catch::Approx(1.0));
}

TEST_CASE("format_number round-trips doubles", "[attack]") {
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        const double x = rng.uniform() * std::pow(10.0, static_cast<double>(rng.below(20)) - 10.0);
        CHECK(std::stod(format_number(x)) == x);
    }
    CHECK(format_number(0.1) == "0.1");
}
