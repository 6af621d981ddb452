#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"

#include "cota/config.hpp"
#include "cota/model_io.hpp"

using namespace cota;

namespace {

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

void write(const std::filesystem::path& p, const std::string& text) {
    std::ofstream os(p);
    os << text;
}

}  // namespace

TEST_CASE("defaults when the config is empty") {
    RunConfig c = parse_run_config("{}");
    CHECK(c.scenario == "stc_np");
    CHECK(c.spec.method == Method::CotaPlan);
    CHECK(c.spec.cost == CostKind::Omega);
    CHECK(c.experiment.repetitions == 10);
    CHECK(c.experiment.with_wass);
    CHECK_FALSE(c.grid_step);
    CHECK(c.baselines);
}

TEST_CASE("every field is read") {
    RunConfig c = parse_run_config(R"j({
      "scenario": "lucas",
      "method": "COTA(tau)",
      "cost": "hamming",
      "weights": {"kappa": 0.4, "lambda": 0.1, "lambda_prime": 0.2, "mu": 0.3},
      "grid": {"step": 0.25},
      "baselines": false,
      "out": "res",
      "samples": {"base": 123, "abs": 456},
      "repetitions": 4,
      "seed": 99,
      "jobs": 2,
      "bary_epsilon": 0.2,
      "metrics": ["JSD"],
      "solver": {"max_outer_iters": 7, "max_sinkhorn_iters": 8, "step_scale": 0.3, "marginal_tol": 1e-7,
                 "objective_tol": 1e-9, "epsilon": 0.01, "smoothing": 1e-6, "mode": "approx",
                 "z_source": "analytic", "divergence": "JSD"},
      "ebm": {"bins": 5, "synthetic": true}
    })j");
    CHECK(c.scenario == "lucas");
    CHECK(c.spec.method == Method::CotaMap);
    CHECK(c.spec.cost == CostKind::Hamming);
    CHECK(c.spec.weights.lambda_prime == 0.2);
    CHECK(*c.grid_step == 0.25);
    CHECK_FALSE(c.baselines);
    CHECK(c.out == "res");
    CHECK(c.experiment.n_base == 123);
    CHECK(c.experiment.n_abs == 456);
    CHECK(c.experiment.repetitions == 4);
    CHECK(c.experiment.seed == 99);
    CHECK(c.experiment.solver.seed == 99);
    CHECK(c.experiment.jobs == 2);
    CHECK(c.experiment.bary_epsilon == 0.2);
    CHECK_FALSE(c.experiment.with_wass);
    const SolverConfig& s = c.experiment.solver;
    CHECK(s.max_outer_iters == 7);
    CHECK(s.max_sinkhorn_iters == 8);
    CHECK(s.step_scale == 0.3);
    CHECK(s.marginal_tol == 1e-7);
    CHECK(s.objective_tol == 1e-9);
    CHECK(s.epsilon == 0.01);
    CHECK(s.smoothing == 1e-6);
    CHECK(s.mode == ConstraintMode::Approx);
    CHECK(s.z_source == ZSource::Analytic);
    CHECK(s.divergence == DivergenceKind::JSD);
    CHECK(c.bins == 5);
    CHECK(c.synthetic);
}

TEST_CASE("dump and parse round trip") {
    RunConfig c;
    c.scenario = "ebm";
    c.synthetic = true;
    c.bins = 7;
    c.spec = {Method::Bary, CostKind::Hamming, {0.5, 0.1, 0.1, 0.3}};
    c.grid_step = 0.2;
    c.experiment.seed = 5;
    c.experiment.solver.seed = 5;
    c.experiment.solver.mode = ConstraintMode::Approx;
    c.experiment.with_wass = false;
    c.alignment = {{"X'", {"X", "Y"}}};
    std::string text = dump_run_config(c);
    RunConfig d = parse_run_config(text);
    CHECK(dump_run_config(d) == text);
    CHECK(d.spec.method == Method::Bary);
    CHECK(d.bins == 7);
    CHECK(d.alignment == c.alignment);
}

TEST_CASE("malformed configs") {
    auto kind = [](const std::string& text) {
        try {
            parse_run_config(text, "c.json");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("c.json") != std::string::npos);
            return e.kind();
        }
        FAIL("config parsed without error");
        return ErrorKind::Io;
    };
    CHECK(kind("{") == ErrorKind::ParseError);
    CHECK(kind(R"({"method": "nope"})") == ErrorKind::InvalidConfig);
    CHECK(kind(R"({"repetitions": "ten"})") == ErrorKind::InvalidConfig);
    CHECK(kind(R"({"metrics": ["L2"]})") == ErrorKind::InvalidConfig);
    CHECK(kind(R"({"solver": {"z_source": "guess"}})") == ErrorKind::InvalidConfig);
    CHECK(kind(R"({"models": {"base": "b.json"}})") == ErrorKind::InvalidConfig);
}

TEST_CASE("relative paths resolve against the config directory") {
    TempDir dir("cota_test_config");
    std::filesystem::create_directories(dir.path / "sub");
    Scenario sc = scenario_by_name("stc_np");
    save_model(dir.path / "sub" / "base.json", *sc.base, sc.base_set, sc.omega);
    save_model(dir.path / "sub" / "abs.json", *sc.abs, sc.abs_set);
    write(dir.path / "sub" / "run.json",
          R"({"models": {"base": "base.json", "abs": "/abs/abs.json"}, "ebm": {"lrcs": "l.csv", "wmg": "w.csv"}})");
    RunConfig c = load_run_config(dir.path / "sub" / "run.json");
    CHECK(*c.base_model == dir.path / "sub" / "base.json");
    CHECK(*c.abs_model == "/abs/abs.json");
    CHECK(*c.lrcs_csv == dir.path / "sub" / "l.csv");

    write(dir.path / "sub" / "run.json", R"({"models": {"base": "base.json", "abs": "abs.json"}})");
    Scenario r = resolve_scenario(load_run_config(dir.path / "sub" / "run.json"));
    CHECK(r.name == "base");
    CHECK(r.base_set.size() == sc.base_set.size());
    CHECK(r.omega.image == sc.omega.image);
    // Shared variable names give the default alignment.
    CHECK(r.alignment.aligned.empty());

    try {
        load_run_config(dir.path / "missing.json");
        FAIL("expected an I/O error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Io);
    }
}

TEST_CASE("resolve named and EBM scenarios") {
    RunConfig c;
    c.scenario = "stc_p";
    CHECK(resolve_scenario(c).name == "stc_p");
    c.scenario = "ebm";
    c.experiment.seed = 3;
    Scenario e = resolve_scenario(c);
    REQUIRE(e.ebm);
    CHECK(e.base_set.size() == 5);
    c.scenario = "unknown";
    CHECK_THROWS_AS(resolve_scenario(c), Error);
}
