#include <fstream>
#include <sstream>

#include "doctest.h"
#include "rsma/cli.hpp"
#include "rsma/datagen.hpp"
#include "rsma/unfold.hpp"
#include "scratch_dir.hpp"

using namespace rsma;
using testing::ScratchDir;
using testing::slurp;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli_dispatch(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream is(text);
    for (std::string line; std::getline(is, line);) {
        out.push_back(line);
    }
    return out;
}

// Small U=2, M=4 workspace with a labeled dataset, shared by the slower cases.
struct Workspace {
    ScratchDir dir{"rsma-cli"};
    std::string config = dir.file("c.json");
    std::string data = dir.file("d.jsonl");

    Workspace() {
        std::ofstream(config) << R"({"num_users": 2, "num_antennas": 4})";
        const Run r = cli({"gen-data", "--config", config, "--n", "6", "--seed", "7", "--label", "--restarts", "1",
                           "--out", data});
        REQUIRE(r.code == kExitOk);
    }
};

Workspace& workspace() {
    static Workspace w;
    return w;
}

} // namespace

TEST_CASE("usage errors exit with 1") {
    CHECK(cli({}).code == kExitUsage);
    const Run unknown = cli({"gen-data", "--n", "2", "--out", "x", "--seed", "1", "--bogus"});
    CHECK(unknown.code == kExitUsage);
    CHECK(unknown.err.find("--bogus") != std::string::npos);
    CHECK(unknown.err.find("Usage") != std::string::npos);

    const Run no_seed = cli({"gen-data", "--n", "2", "--out", "x"});
    CHECK(no_seed.code == kExitUsage);
    CHECK(no_seed.err.find("--seed") != std::string::npos);

    CHECK(cli({"frobnicate", "--seed", "1"}).code == kExitUsage);
    CHECK(cli({"solve", "--solver", "cvx", "--in", workspace().data, "--out", "x", "--seed", "1"}).code ==
          kExitUsage);
    CHECK(cli({"ood", "--data", workspace().data, "--params", workspace().config, "--scenario", "snr5", "--seed",
               "1"})
              .code == kExitUsage);
    CHECK(cli({"eval", "--data", workspace().data, "--seed", "1"}).code == kExitUsage);
    CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("runtime failures exit with 2") {
    ScratchDir dir("rsma-cli-bad");
    const std::string junk = dir.file("junk.jsonl");
    std::ofstream(junk) << "{\"format\": \"rsma-dataset\", \"version\": \"9\"}\n";
    const Run r = cli({"eval", "--data", junk, "--oracle-solutions", "--seed", "1"});
    CHECK(r.code == kExitRuntime);
    CHECK(r.err.find("version") != std::string::npos);

    // An unlabeled dataset cannot be scored.
    const std::string raw = dir.file("raw.jsonl");
    REQUIRE(cli({"gen-data", "--n", "2", "--seed", "1", "--out", raw}).code == kExitOk);
    CHECK(cli({"eval", "--data", raw, "--oracle-solutions", "--seed", "1"}).code == kExitRuntime);

    // The budget shift leaves nothing above (U+1) p0.
    const std::string params = dir.file("p.json");
    save_params(params, init_params(2, 2, 0, InitScheme::random_small));
    const Run p = cli({"ood", "--data", workspace().data, "--params", params, "--scenario", "pmax-20", "--seed", "1"});
    CHECK(p.code == kExitRuntime);
    CHECK(p.err.find("record 0") != std::string::npos);
}

TEST_CASE("gen-data is a pure function of its flags") {
    Workspace& w = workspace();
    const std::string a = w.dir.file("a.jsonl");
    const std::string b = w.dir.file("b.jsonl");
    const std::string c = w.dir.file("c.jsonl");
    for (const auto& [path, seed] : {std::pair{a, "11"}, std::pair{b, "11"}, std::pair{c, "12"}}) {
        REQUIRE(cli({"gen-data", "--config", w.config, "--n", "5", "--seed", seed, "--out", path}).code == kExitOk);
    }
    CHECK(slurp(a) == slurp(b));
    CHECK(slurp(a) != slurp(c));
    CHECK(lines(slurp(a)).size() == 6);
}

TEST_CASE("label and eval of oracle solutions") {
    Workspace& w = workspace();
    const std::string raw = w.dir.file("raw.jsonl");
    const std::string l1 = w.dir.file("l1.jsonl");
    const std::string l2 = w.dir.file("l2.jsonl");
    REQUIRE(cli({"gen-data", "--config", w.config, "--n", "4", "--seed", "3", "--out", raw}).code == kExitOk);
    REQUIRE(cli({"label", "--in", raw, "--out", l1, "--seed", "3", "--restarts", "1"}).code == kExitOk);
    REQUIRE(cli({"label", "--in", raw, "--out", l2, "--seed", "3", "--restarts", "1"}).code == kExitOk);
    CHECK(slurp(l1) == slurp(l2));

    const Run r = cli({"eval", "--data", l1, "--oracle-solutions", "--seed", "0"});
    CHECK(r.code == kExitOk);
    CHECK(r.out == "ASR 1.0000\nsamples 4\n");
}

TEST_CASE("solve writes one row per record") {
    Workspace& w = workspace();
    const std::string fp = w.dir.file("fp.csv");
    const std::string pgd = w.dir.file("pgd.csv");
    const std::string trace = w.dir.file("trace.csv");
    REQUIRE(cli({"solve", "--in", w.data, "--out", fp, "--seed", "5"}).code == kExitOk);
    const auto rows = lines(slurp(fp));
    REQUIRE(rows.size() == 7);
    CHECK(rows[0] == "index,wsr,iterations,converged,feasible");
    CHECK(rows[3].rfind("2,", 0) == 0);
    CHECK(rows[3].back() == '1');

    REQUIRE(cli({"solve", "--solver", "pgd", "--in", w.data, "--index", "1", "--out", pgd, "--trace", trace,
                 "--step", "0.01", "--seed", "5"})
                .code == kExitOk);
    CHECK(lines(slurp(pgd)).size() == 2);
    CHECK(lines(slurp(trace)).size() > 2);

    CHECK(cli({"solve", "--in", w.data, "--out", pgd, "--trace", trace, "--seed", "5"}).code == kExitUsage);
    CHECK(cli({"solve", "--in", w.data, "--out", pgd, "--index", "6", "--seed", "5"}).code == kExitUsage);
}

TEST_CASE("train, eval, ood, bench and export-params") {
    Workspace& w = workspace();
    const std::string params = w.dir.file("p.json");
    const std::string history = w.dir.file("h.csv");
    const Run t = cli({"train", "--train", w.data, "--test", w.data, "--layers", "3", "--epochs", "2", "--batch", "3",
                       "--lr", "0.003", "--init", "mimic", "--out", params, "--history", history, "--seed", "4"});
    REQUIRE(t.code == kExitOk);
    CHECK(t.out.find("epochs 2, final loss ") == 0);
    CHECK(t.out.find("test ASR ") != std::string::npos);
    CHECK(lines(slurp(history)).size() == 3);
    CHECK(load_params(params).num_layers() == 3);

    const std::string per_layer = w.dir.file("layers.csv");
    const Run e = cli({"eval", "--data", w.data, "--params", params, "--per-layer", per_layer, "--seed", "4"});
    CHECK(e.code == kExitOk);
    CHECK(e.out.rfind("ASR 0.", 0) == 0);
    CHECK(lines(slurp(per_layer)).size() == 4);

    // Same oracle settings and seeds on an unshifted copy: the drop is exactly zero.
    const std::string table = w.dir.file("ood.csv");
    const Run o = cli({"ood", "--data", w.data, "--params", params, "--scenario", "snr+0", "--out", table, "--seed",
                       "4"});
    REQUIRE(o.code == kExitOk);
    const auto rows = lines(o.out);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == "scenario,n,in_dist_asr,ood_asr,drop_pp");
    CHECK(rows[1].rfind("snr+0,6,", 0) == 0);
    CHECK(rows[1].substr(rows[1].rfind(',') + 1) == "0");
    REQUIRE(cli({"ood", "--data", w.data, "--params", params, "--scenario", "pmax+1", "--out", table, "--seed", "4"})
                .code == kExitOk);
    const auto appended = lines(slurp(table));
    REQUIRE(appended.size() == 3);
    CHECK(appended[2].rfind("pmax+1,6,", 0) == 0);

    const std::string du = w.dir.file("du.csv");
    const Run b = cli({"bench", "--data", w.data, "--params", params, "--reps", "1", "--du-cdf", du, "--seed", "4"});
    CHECK(b.code == kExitOk);
    CHECK(b.out.rfind("solver,mean_s,median_s,p95_s\ndu,", 0) == 0);
    const auto cdf = lines(slurp(du));
    REQUIRE(cdf.size() == 7);
    CHECK(cdf.back().substr(cdf.back().find(',') + 1) == "1");

    const std::string csv = w.dir.file("p.csv");
    const std::string json = w.dir.file("p2.json");
    REQUIRE(cli({"export-params", "--params", params, "--out", csv, "--seed", "0"}).code == kExitOk);
    REQUIRE(cli({"export-params", "--params", params, "--format", "json", "--out", json, "--seed", "0"}).code ==
            kExitOk);
    CHECK(slurp(json) == slurp(params));
    const auto flat = lines(slurp(csv));
    CHECK(flat[0] == "layer,field,row,col,value");
    // Per layer: w0 (U+2), w (U x (U+2)), eta (U x (U+1)) for U = 2.
    CHECK(flat.size() == 1 + 3 * (4 + 8 + 6));
}
