// Copyright (c) 2026, The gbfa-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "gbfa/rng.hpp"
#include "gbfa/sniffer.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace gbfa;
using namespace gbfa::sniff;

using gbfa::testing::exhaustive_ctc;
using gbfa::testing::recursive_edit;

namespace {

using L = LayerLabel;

std::vector<LayerSpec> gcn2() {
    return {{LayerKind::GCNConv, 1433, 16, Activation::ReLU}, {LayerKind::GCNConv, 16, 7, Activation::None}};
}

std::vector<int> random_seq(Rng& rng, std::size_t max_len, int alphabet) {
    std::vector<int> s(rng.below(max_len + 1));
    for (auto& x : s) x = static_cast<int>(rng.below(static_cast<std::uint64_t>(alphabet)));
    return s;
}

KernelFeature feature(double v) { return {std::expm1(v), std::expm1(v), std::expm1(v), std::expm1(v), std::expm1(v)}; }

HmmParams manual_hmm(std::vector<L> states, std::vector<double> init, std::vector<std::vector<double>> trans,
                     std::vector<double> centers) {
    HmmParams h;
    h.states = std::move(states);
    h.initial = std::move(init);
    h.transition = std::move(trans);
    for (double c : centers) {
        std::array<double, KernelFeature::kDim> m{}, v{};
        m.fill(c);
        v.fill(1.0);
        h.mean.push_back(m);
        h.var.push_back(v);
    }
    h.feature_mean.fill(0.0);
    h.feature_std.fill(1.0);
    return h;
}

double corpus_ler(double noise, std::uint64_t base, std::size_t count, const HmmParams& hmm) {
    std::vector<std::vector<L>> pred, truth;
    for (std::size_t i = 0; i < count; ++i) {
        const auto spec = random_trace_spec(base + i, noise, ModelKind::GCN);
        const auto tr = synthesize_trace(spec.arch, spec.opts);
        pred.push_back(ctc_beam_decode(posteriors(hmm, tr), 16).labels);
        truth.push_back(tr.sequence());
    }
    return mean_ler(pred, truth);
}

HmmParams fit_corpus(double noise, std::size_t count) {
    std::vector<KernelTrace> train;
    for (std::size_t i = 0; i < count; ++i) {
        const auto spec = random_trace_spec(100000 + i, noise, ModelKind::GCN);
        train.push_back(synthesize_trace(spec.arch, spec.opts));
    }
    return fit_hmm(train, {L::Blank, L::Aggregate, L::Transform, L::Output});
}

}  // namespace

TEST_CASE("two-layer GCN lowers to the documented sequence", "[sniffer]") {
    const auto tr = synthesize_trace(gcn2(), TraceOptions{});
    CHECK(tr.sequence() == std::vector<L>{L::Aggregate, L::Transform, L::Aggregate, L::Transform, L::Output});
    CHECK(tr.kernel_labels ==
          std::vector<L>{L::Aggregate, L::Transform, L::Blank, L::Aggregate, L::Transform, L::Output});
    CHECK(to_string(tr.sequence()) == "[Aggregate, Transform, Aggregate, Transform, Output]");
}

TEST_CASE("optional kernels and other layer kinds", "[sniffer]") {
    TraceOptions o;
    o.edge_update = true;
    o.readout = true;
    const auto tr = synthesize_trace(gcn2(), o);
    CHECK(tr.sequence() == std::vector<L>{L::EdgeUpdate, L::Aggregate, L::Transform, L::EdgeUpdate, L::Aggregate,
                                          L::Transform, L::Readout, L::Output});
    const std::vector<LayerSpec> mlp{{LayerKind::Linear, 500, 64, Activation::ReLU},
                                     {LayerKind::Linear, 64, 3, Activation::None}};
    CHECK(synthesize_trace(mlp, TraceOptions{}).sequence() == std::vector<L>{L::Transform, L::Transform, L::Output});
}

TEST_CASE("trace synthesis is deterministic and well formed", "[sniffer][property]") {
    TraceOptions o;
    o.noise = 0.0;
    const auto a = synthesize_trace(gcn2(), o);
    const auto b = synthesize_trace(gcn2(), o);
    REQUIRE(a.kernels.size() == b.kernels.size());
    for (std::size_t i = 0; i < a.kernels.size(); ++i) CHECK(a.kernels[i].as_array() == b.kernels[i].as_array());

    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto spec = random_trace_spec(seed, 0.2);
        const auto x = synthesize_trace(spec.arch, spec.opts);
        const auto y = synthesize_trace(spec.arch, spec.opts);
        REQUIRE(x.kernel_labels == y.kernel_labels);
        for (std::size_t i = 0; i < x.kernels.size(); ++i) {
            const auto& f = x.kernels[i];
            REQUIRE(f.as_array() == y.kernels[i].as_array());
            REQUIRE(f.r_v >= 0.0);
            REQUIRE(f.w_v >= 0.0);
            REQUIRE(f.io_ratio >= 0.0);
            REQUIRE(f.kdd >= 0.0);
            REQUIRE(f.kdd == std::round(f.kdd));
            REQUIRE(f.exe_lat >= 0.0);
        }
    }

    CHECK_THROWS_AS(synthesize_trace({}, TraceOptions{}), std::invalid_argument);
    o.noise = -0.1;
    CHECK_THROWS_AS(synthesize_trace(gcn2(), o), std::invalid_argument);
}

TEST_CASE("derived features follow the event graph", "[sniffer]") {
    std::vector<KernelEvent> ev(3);
    ev[0] = {L::Aggregate, 1000.0, 400.0, 100.0, {}};
    ev[1] = {L::Transform, 1000.0, 100.0, 50.0, {0}};
    ev[2] = {L::Output, 10.0, 50.0, 25.0, {0, 1}};
    const auto f = derive_features(ev, 0.0, 0, 800.0);
    CHECK(f[0].io_ratio == 8.0);
    CHECK(f[1].io_ratio == 2.0);
    CHECK(f[2].io_ratio == 2.0);
    CHECK(f[0].kdd == 0.0);
    CHECK(f[1].kdd == 1.0);
    CHECK(f[2].kdd == 2.0);
    CHECK(f[0].r_v == 400.0);
    CHECK(f[1].w_v == 50.0);
    CHECK(f[0].exe_lat > f[2].exe_lat);
}

TEST_CASE("fit_hmm reproduces observed bigram frequencies", "[sniffer]") {
    KernelTrace tr;
    const L seq[] = {L::Aggregate, L::Transform, L::Transform, L::Aggregate, L::Transform, L::Output};
    for (std::size_t i = 0; i < 6; ++i) {
        tr.kernels.push_back(feature(static_cast<double>(i)));
        tr.kernel_labels.push_back(seq[i]);
    }
    const std::vector<L> states{L::Aggregate, L::Transform, L::Output};
    const auto h = fit_hmm({tr}, states, 0.0);
    // A->T twice; T->T, T->A, T->O once each
    CHECK(h.transition[0] == std::vector<double>{0.0, 1.0, 0.0});
    CHECK(h.transition[1][0] == Catch::Approx(1.0 / 3.0));
    CHECK(h.transition[1][1] == Catch::Approx(1.0 / 3.0));
    CHECK(h.transition[1][2] == Catch::Approx(1.0 / 3.0));
    CHECK(h.transition[2] == std::vector<double>{0.0, 0.0, 1.0});  // never left
    CHECK(h.initial == std::vector<double>{1.0, 0.0, 0.0});

    const auto smoothed = fit_hmm({tr}, states);
    for (const auto& row : smoothed.transition) {
        double s = 0.0;
        for (double v : row) {
            CHECK(v > 0.0);
            s += v;
        }
        CHECK(std::abs(s - 1.0) < 1e-9);
    }
    for (const auto& v : smoothed.var)
        for (double x : v) CHECK(x > 0.0);
    CHECK(smoothed.transition[0][1] == Catch::Approx(3.0 / 5.0));
}

TEST_CASE("degenerate single-state HMM", "[sniffer]") {
    KernelTrace tr;
    for (int i = 0; i < 4; ++i) {
        tr.kernels.push_back(feature(1.0 + i));
        tr.kernel_labels.push_back(L::Transform);
    }
    const auto h = fit_hmm({tr}, {L::Transform});
    CHECK(h.transition == std::vector<std::vector<double>>{{1.0}});
    CHECK(h.initial == std::vector<double>{1.0});
    const auto h0 = fit_hmm({tr}, {L::Transform}, 0.0);
    CHECK(h0.transition == std::vector<std::vector<double>>{{1.0}});
}

TEST_CASE("fit_hmm error paths", "[sniffer]") {
    KernelTrace tr;
    tr.kernels.push_back(feature(1.0));
    tr.kernel_labels.push_back(L::Aggregate);
    CHECK_THROWS_AS(fit_hmm({tr}), std::invalid_argument);  // other labels absent
    CHECK_THROWS_AS(fit_hmm({tr}, {L::Transform}), std::invalid_argument);
    KernelTrace unlabeled;
    unlabeled.kernels.push_back(feature(1.0));
    CHECK_THROWS_AS(fit_hmm({unlabeled}, {L::Aggregate}), std::invalid_argument);
}

TEST_CASE("posteriors with identical emissions follow the prior", "[sniffer]") {
    const auto h = manual_hmm({L::Aggregate, L::Transform}, {0.3, 0.7}, {{0.9, 0.1}, {0.4, 0.6}}, {0.0, 0.0});
    KernelTrace tr;
    tr.kernels = {feature(1.0), feature(2.0), feature(0.5)};
    const auto p = posteriors(h, tr);
    CHECK(p.rows[0][0] == Catch::Approx(0.3));
    const double a1 = 0.3 * 0.9 + 0.7 * 0.4;
    CHECK(p.rows[1][0] == Catch::Approx(a1));
    CHECK(p.rows[2][0] == Catch::Approx(a1 * 0.9 + (1 - a1) * 0.4));

    const auto u = manual_hmm({L::Aggregate, L::Transform, L::Output}, {1.0 / 3, 1.0 / 3, 1.0 / 3},
                              {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}, {0.0, 0.0, 0.0});
    KernelTrace one;
    one.kernels = {feature(0.7)};
    const auto up = posteriors(u, one);
    for (double v : up.rows[0]) CHECK(v == Catch::Approx(1.0 / 3));

    KernelTrace bad;
    bad.kernels = {feature(1.0)};
    bad.kernels[0].kdd = std::nan("");
    CHECK_THROWS_AS(posteriors(h, bad), std::invalid_argument);
}

TEST_CASE("well separated toy emissions decode exactly", "[sniffer]") {
    std::vector<KernelTrace> traces;
    Rng rng(4);
    for (int n = 0; n < 20; ++n) {
        KernelTrace tr;
        const std::size_t len = 3 + rng.below(8);
        for (std::size_t t = 0; t < len; ++t) {
            const bool agg = rng.below(2) == 0;
            tr.kernels.push_back(feature((agg ? 2.0 : 12.0) + rng.uniform(-0.1, 0.1)));
            tr.kernel_labels.push_back(agg ? L::Aggregate : L::Transform);
        }
        traces.push_back(tr);
    }
    const auto h = fit_hmm(traces, {L::Aggregate, L::Transform});
    for (const auto& tr : traces) {
        const auto p = posteriors(h, tr);
        for (std::size_t t = 0; t < tr.kernels.size(); ++t) {
            const auto& row = p.rows[t];
            double s = 0.0;
            for (double v : row) {
                REQUIRE(v >= 0.0);
                s += v;
            }
            REQUIRE(std::abs(s - 1.0) < 1e-9);
            const std::size_t arg = row[0] >= row[1] ? 0 : 1;
            REQUIRE(p.labels[arg] == tr.kernel_labels[t]);
        }
        CHECK(ler(ctc_beam_decode(p, 8).labels, tr.sequence()) == 0.0);
    }
}

TEST_CASE("CTC collapse examples", "[sniffer]") {
    // columns: 0 = blank, 1 = A, 2 = B
    const std::vector<std::vector<double>> ab{{0.05, 0.9, 0.05}, {0.9, 0.05, 0.05}, {0.05, 0.05, 0.9}};
    CHECK(ctc_beam_search(ab, 0, 4).symbols == std::vector<std::size_t>{1, 2});
    const std::vector<std::vector<double>> aaa{{0.05, 0.9, 0.05}, {0.05, 0.9, 0.05}, {0.05, 0.9, 0.05}};
    CHECK(ctc_beam_search(aaa, 0, 4).symbols == std::vector<std::size_t>{1});
    CHECK_THROWS_AS(ctc_beam_search({}, 0, 4), std::invalid_argument);
    CHECK_THROWS_AS(ctc_beam_search(ab, 0, 0), std::invalid_argument);
}

TEST_CASE("unbounded beam equals exhaustive path enumeration", "[sniffer][property]") {
    Rng rng(99);
    for (int n = 0; n < 400; ++n) {
        const std::size_t t = 1 + rng.below(5);
        const std::size_t k = 2 + rng.below(3);
        std::vector<std::vector<double>> p(t, std::vector<double>(k));
        for (auto& row : p) {
            double s = 0.0;
            for (double& v : row) s += v = rng.uniform() + 1e-3;
            for (double& v : row) v /= s;
        }
        const std::size_t blank = rng.below(k);
        const auto [best, logp] = exhaustive_ctc(p, blank);
        const auto got = ctc_beam_search(p, blank, kUnboundedBeam);
        INFO("T " << t << " K " << k);
        REQUIRE(got.symbols == best);
        REQUIRE(got.log_prob == Catch::Approx(logp).epsilon(1e-9));
        const auto wide = ctc_beam_search(p, blank, 64);
        REQUIRE(wide.symbols == best);
        for (std::size_t i = 0; i < got.symbols.size(); ++i) REQUIRE(got.symbols[i] != blank);
    }
}

TEST_CASE("edit distance against the recursive definition", "[sniffer][property]") {
    Rng rng(5);
    for (int n = 0; n < 1000; ++n) {
        const auto a = random_seq(rng, 8, 4);
        const auto b = random_seq(rng, 8, 4);
        REQUIRE(edit_distance(a, b) == recursive_edit(a, 0, b, 0));
    }
    for (int n = 0; n < 300; ++n) {
        const auto a = random_seq(rng, 10, 3);
        const auto b = random_seq(rng, 10, 3);
        const auto c = random_seq(rng, 10, 3);
        REQUIRE(edit_distance(a, a) == 0);
        REQUIRE(edit_distance(a, b) == edit_distance(b, a));
        REQUIRE(edit_distance(a, c) <= edit_distance(a, b) + edit_distance(b, c));
        if (a != b) REQUIRE(edit_distance(a, b) > 0);
    }
    CHECK(edit_distance(std::vector<int>{1, 2, 3}, std::vector<int>{1, 2, 4}) == 1);
}

TEST_CASE("label error rate", "[sniffer][property]") {
    const std::vector<L> truth{L::Aggregate, L::Transform, L::Aggregate, L::Transform, L::Aggregate,
                               L::Transform, L::Aggregate, L::Transform, L::Readout, L::Output};
    CHECK(ler(truth, truth) == 0.0);
    auto one = truth;
    one[3] = L::EdgeUpdate;
    CHECK(ler(one, truth) == Catch::Approx(0.1));
    CHECK_THROWS_AS(ler(truth, {}), std::invalid_argument);

    // invariant under a consistent relabeling of the alphabet
    Rng rng(8);
    std::vector<L> perm{L::Aggregate, L::Transform, L::EdgeUpdate, L::Readout, L::Output};
    for (int n = 0; n < 200; ++n) {
        rng.shuffle(std::span<L>(perm));
        auto relabel = [&](const std::vector<L>& s) {
            std::vector<L> out;
            for (L x : s) out.push_back(perm[static_cast<std::size_t>(x) - 1]);
            return out;
        };
        std::vector<L> a, b;
        for (std::size_t i = 0, m = 1 + rng.below(8); i < m; ++i) a.push_back(static_cast<L>(1 + rng.below(5)));
        for (std::size_t i = 0, m = rng.below(8); i < m; ++i) b.push_back(static_cast<L>(1 + rng.below(5)));
        REQUIRE(ler(b, a) == ler(relabel(b), relabel(a)));
    }
}

TEST_CASE("trace files and HMM JSON round trip", "[sniffer]") {
    const auto spec = random_trace_spec(3, 0.05);
    const auto tr = synthesize_trace(spec.arch, spec.opts);
    const auto path = fs::temp_directory_path() / "gbfa-trace.jsonl";
    write_trace(tr, path);
    const auto back = read_trace(path);
    CHECK(back.kernel_labels == tr.kernel_labels);
    REQUIRE(back.kernels.size() == tr.kernels.size());
    for (std::size_t i = 0; i < tr.kernels.size(); ++i) CHECK(back.kernels[i].as_array() == tr.kernels[i].as_array());

    std::ofstream(path) << "{\"t\":0,\"exe_lat\":1}\n";
    CHECK_THROWS_AS(read_trace(path), DataError);
    std::ofstream(path) << "not json\n";
    CHECK_THROWS_AS(read_trace(path), DataError);

    const auto h = fit_corpus(0.05, 20);
    const auto h2 = hmm_from_json(to_json(h));
    CHECK(h2.states == h.states);
    CHECK(h2.transition == h.transition);
    CHECK(h2.mean == h.mean);
    CHECK(h2.var == h.var);
    CHECK(h2.feature_std == h.feature_std);
}

TEST_CASE("decoding error grows with trace noise", "[sniffer][property]") {
    const auto h = fit_corpus(0.05, 200);
    const double low = corpus_ler(0.05, 0, 100, h);
    const double high = corpus_ler(10.0, 0, 100, h);
    INFO("LER at 5% noise " << low << ", at 1000% noise " << high);
    CHECK(low <= 0.06);
    CHECK(high > low);
}
