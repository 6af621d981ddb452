#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

#include "cota/datasets.hpp"
#include "cota/model_io.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out, err;
};

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

const fs::path& work_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "cota_test_cli";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

Result cli(const std::string& args) {
    const fs::path out = work_dir() / "stdout.txt", err = work_dir() / "stderr.txt";
    std::string cmd = std::string("\"") + COTA_CLI_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                      err.string() + "\"";
    int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

int count_lines(const fs::path& p) {
    std::ifstream is(p);
    int n = 0;
    for (std::string l; std::getline(is, l);) ++n;
    return n;
}

}  // namespace

TEST_CASE("validate a shipped scenario") {
    Result r = cli("validate --scenario stc_np");
    CHECK(r.code == 0);
    CHECK(r.out.find("\"status\": \"ok\"") != std::string::npos);
    CHECK(r.out.find("\"maximal_chains\": 2") != std::string::npos);
}

TEST_CASE("validate model files") {
    const fs::path dir = work_dir() / "models";
    fs::create_directories(dir);
    Result ex = cli("export-scenario --scenario stc_np --out \"" + dir.string() + "\"");
    REQUIRE(ex.code == 0);
    const fs::path base = dir / "stc_np_base.json", abs = dir / "stc_np_abs.json";
    CHECK(cli("validate --base \"" + base.string() + "\" --abs \"" + abs.string() + "\"").code == 0);

    cota::Scenario sc = cota::scenario_by_name("stc_np");
    cota::OmegaMap collapsed{{0, 1, 1, 1, 1}};
    cota::save_model(dir / "collapsed.json", *sc.base, sc.base_set, collapsed);
    Result ns = cli("validate --base \"" + (dir / "collapsed.json").string() + "\" --abs \"" + abs.string() + "\"");
    CHECK(ns.code == 2);
    CHECK(ns.err.find("NotSurjective") != std::string::npos);

    std::ofstream(dir / "cycle.json") << R"({
  "variables": [{"name": "A", "domain": [0, 1]}, {"name": "B", "domain": [0, 1]}],
  "edges": [["A", "B"], ["B", "A"]],
  "cpts": {},
  "omega": [{"base": 0, "abs": 0}]
})";
    Result cy = cli("validate --base \"" + (dir / "cycle.json").string() + "\" --abs \"" + abs.string() + "\"");
    CHECK(cy.code == 2);
    CHECK(cy.err.find("CycleDetected") != std::string::npos);
    CHECK(cy.err.find("cycle.json:3:") != std::string::npos);

    Result missing = cli("validate --base \"" + (dir / "nope.json").string() + "\" --abs \"" + abs.string() + "\"");
    CHECK(missing.code == 4);
    CHECK(missing.err.find("\"error\":\"Io\"") != std::string::npos);
}

TEST_CASE("run is deterministic") {
    const fs::path a = work_dir() / "run_a", b = work_dir() / "run_b";
    const std::string args = "run --scenario stc_p --samples 800 --repetitions 2 --seed 4 --out ";
    Result ra = cli(args + "\"" + a.string() + "\"");
    Result rb = cli(args + "\"" + b.string() + "\"");
    REQUIRE(ra.code == 0);
    REQUIRE(rb.code == 0);
    CHECK(ra.out == rb.out);
    for (const char* f : {"eval.csv", "tau.csv", "solve_report.json", "plans/plan_0.csv"}) {
        CHECK(fs::exists(a / f));
        CHECK(slurp(a / f) == slurp(b / f));
    }
    CHECK(fs::exists(a / "config.json"));
    // One row per metric for COTA and the three baselines.
    CHECK(count_lines(a / "eval.csv") == 1 + 2 * 4);
}

TEST_CASE("grid run writes the surface") {
    const fs::path out = work_dir() / "grid";
    Result r = cli("run --scenario stc_p --samples 500 --repetitions 1 --grid 0.5 --out \"" + out.string() + "\"");
    REQUIRE(r.code == 0);
    CHECK(count_lines(out / "surface.csv") == 1 + 6);
    CHECK(slurp(out / "surface.csv").rfind("kappa,lambda,mu,error,std\n", 0) == 0);
}

TEST_CASE("downstream on the synthetic tables") {
    const fs::path out = work_dir() / "down";
    Result r = cli("downstream --synthetic --seed 2 --out \"" + out.string() + "\"");
    REQUIRE(r.code == 0);
    CHECK(count_lines(out / "downstream.csv") == 4);
    CHECK(fs::exists(out / "synthetic_lrcs.csv"));
    CHECK(r.out.find("task 3") != std::string::npos);
    CHECK(cli("downstream --out \"" + out.string() + "\"").code == 2);
}

TEST_CASE("sample exports pairs") {
    const fs::path out = work_dir() / "pairs";
    Result r = cli("sample --scenario stc_np --samples 100 --out \"" + out.string() + "\"");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("5 pairs") != std::string::npos);
    CHECK(fs::exists(out));
}

TEST_CASE("bad arguments") {
    CHECK(cli("").code != 0);
    CHECK(cli("frobnicate").code != 0);
    Result r = cli("run --scenario stc_p --method nope --out \"" + (work_dir() / "bad").string() + "\"");
    CHECK(r.code == 2);
    CHECK(r.err.find("InvalidConfig") != std::string::npos);
}
