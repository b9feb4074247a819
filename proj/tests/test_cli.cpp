// Copyright (c) 2026, The gbfa-sim Authors
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "gbfa/attack.hpp"
#include "gbfa/binary_io.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace gbfa;

namespace {

const fs::path& workdir() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / "gbfa-cli-test";
        fs::remove_all(d);
        fs::create_directories(d);
        Graph g = gbfa::testing::random_graph(120, 300, 16, 3, 5);
        g.name = "toy";
        save_graph(g, d / "toy");
        return d;
    }();
    return dir;
}

int run(const std::string& args) {
    const std::string cmd = std::string(GBFA_CLI_PATH) + " " + args + " >" + (workdir() / "last.log").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string p(const std::string& rel) { return (workdir() / rel).string(); }

std::string slurp(const std::string& rel) { return io::read_text(workdir() / rel); }

/// Trains the shared toy checkpoint once.
const std::string& checkpoint() {
    static const std::string ckpt = [] {
        REQUIRE(run("train --model gcn --dataset " + p("toy") + " --epochs 30 --seed 3 --out " + p("ckpt")) == 0);
        return p("ckpt");
    }();
    return ckpt;
}

}  // namespace

TEST_CASE("usage errors exit with 2", "[cli]") {
    CHECK(run("") == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("train --model gat --dataset " + p("toy") + " --out " + p("x")) == 2);
    CHECK(run("train --model gcn --dataset " + p("missing") + " --out " + p("x")) == 2);
    CHECK(run("train --model gcn --dataset " + p("toy")) == 2);  // no --out
    CHECK(run("attack --model " + checkpoint() + " --dataset " + p("toy") + " --layer 9 --out " + p("r.json")) == 2);
    CHECK(run("attack --model " + checkpoint() + " --dataset " + p("toy") + " --out " + p("r.json")) == 2);
    CHECK(run("attack --model " + checkpoint() + " --dataset " + p("toy") + " --layer 1 --ber 0 --out " + p("r.json")) == 2);
    CHECK(run("--jobs 0 report --in " + p("none.csv")) == 2);
    CHECK(run("sniff --traces " + p("toy")) == 2);
}

TEST_CASE("runtime failures exit with 1", "[cli]") {
    fs::create_directories(workdir() / "broken");
    fs::copy(checkpoint() + "/manifest.json", workdir() / "broken" / "manifest.json",
             fs::copy_options::overwrite_existing);
    CHECK(run("attack --model " + p("broken") + " --dataset " + p("toy") + " --layer 1 --out " + p("r.json")) == 1);
}

TEST_CASE("train writes a checkpoint and log, byte-identical per seed", "[cli]") {
    const auto& ckpt = checkpoint();
    REQUIRE(run("train --model gcn --dataset " + p("toy") + " --epochs 30 --seed 3 --out " + p("ckpt2")) == 0);
    CHECK(slurp("ckpt/weights.f32") == slurp("ckpt2/weights.f32"));
    CHECK(slurp("ckpt/manifest.json") == slurp("ckpt2/manifest.json"));
    CHECK(slurp("ckpt/train_log.csv") == slurp("ckpt2/train_log.csv"));
    const auto m = json::parse(slurp("ckpt/manifest.json"));
    CHECK(m.at("model") == "gcn");
    CHECK(m.at("seed") == 3);
    CHECK(m.at("layer_weight_counts").size() == 3);
    CHECK(fs::exists(fs::path(ckpt) / "train_log.csv"));
}

TEST_CASE("attack reports are reproducible from their echo", "[cli]") {
    const std::string base = "attack --model " + checkpoint() + " --dataset " + p("toy") + " --layer 2 --ber 0.1 --seed 4";
    REQUIRE(run(base + " --out " + p("a1.json")) == 0);
    REQUIRE(run(base + " --out " + p("a2.json")) == 0);
    CHECK(slurp("a1.json") == slurp("a2.json"));
    const auto r = json::parse(slurp("a1.json"));
    CHECK(r.at("report").at("attack") == "gbfa");
    CHECK(r.at("report").at("config").at("seed") == 4);
    CHECK(r.at("report").at("config").at("target_layer") == 2);
    CHECK(r.at("invocation").at("ber") == 0.1);

    REQUIRE(run("attack --model " + checkpoint() + " --dataset " + p("toy") + " --baseline random --ber 0.1 --out " +
                p("rnd.json")) == 0);
    CHECK(json::parse(slurp("rnd.json")).at("report").at("attack") == "random");
}

TEST_CASE("sweep, plot data and report", "[cli]") {
    json grid = {{"targets", {{{"checkpoint", "ckpt"}, {"dataset", "toy"}, {"name", "gcn"}}}},
                 {"attack", "gbfa"},
                 {"bers", {1e-2, 1e-1}},
                 {"num_seeds", 3}};
    std::ofstream(workdir() / "grid.json") << grid.dump();
    checkpoint();
    REQUIRE(run("--jobs 1 sweep --grid " + p("grid.json") + " --out " + p("s1.csv") + " --emit-plotdata " + p("plot.csv")) == 0);
    REQUIRE(run("--jobs 3 sweep --grid " + p("grid.json") + " --out " + p("s3.csv") + " --reports " + p("reports")) == 0);
    CHECK(slurp("s1.csv") == slurp("s3.csv"));
    const auto rows = parse_sweep_csv(slurp("s1.csv"));
    CHECK(rows.size() == 3 * 2 * 3);
    CHECK(fs::exists(workdir() / "reports"));
    const auto plot = slurp("plot.csv");
    CHECK(plot.rfind("model,dataset,attack,layer,ber,mean_pac,std_pac,mean_asr,mean_n_bit,runs", 0) == 0);

    REQUIRE(run("report --in " + p("s1.csv") + " --out " + p("summary.json")) == 0);
    const auto summary = json::parse(slurp("summary.json"));
    const auto stats = aggregate(rows);
    std::ostringstream dump;
    dump << summary;
    CHECK(dump.str().find("mean_pac") != std::string::npos);
    CHECK(stats.size() == 6);

    json bad = grid;
    bad["layers"] = {0};
    std::ofstream(workdir() / "bad.json") << bad.dump();
    CHECK(run("sweep --grid " + p("bad.json") + " --out " + p("bad.csv")) == 2);
}

TEST_CASE("traces and sniff produce ler.json", "[cli]") {
    REQUIRE(run("--seed 100 traces --count 40 --noise 0.05 --family gcn --out " + p("train_traces")) == 0);
    REQUIRE(run("--seed 0 traces --count 10 --noise 0.05 --family gcn --out " + p("test_traces")) == 0);
    REQUIRE(run("sniff --traces " + p("test_traces") + " --train " + p("train_traces") + " --fit --decode --save-hmm " +
                p("hmm.json") + " --out " + p("ler.json")) == 0);
    const auto r = json::parse(slurp("ler.json"));
    CHECK(r.at("num_traces") == 10);
    CHECK(r.at("mean_ler").get<double>() <= 0.2);
    REQUIRE(run("sniff --traces " + p("test_traces") + " --decode --hmm " + p("hmm.json") + " --out " + p("ler2.json")) == 0);
    CHECK(json::parse(slurp("ler2.json")).at("mean_ler") == r.at("mean_ler"));
}
