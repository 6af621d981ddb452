#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "cota/config.hpp"
#include "cota/model_io.hpp"

namespace {

using namespace cota;

enum class Level { Error = 0, Info = 1, Debug = 2 };

Level log_level() {
    const char* env = std::getenv("COTA_LOG");
    std::string s = env ? env : "error";
    if (s == "debug") return Level::Debug;
    if (s == "info") return Level::Info;
    return Level::Error;
}

void log(Level at, const std::string& msg) {
    static const Level level = log_level();
    if (at <= level) std::cerr << (at == Level::Debug ? "[debug] " : "[info] ") << msg << "\n";
}

int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::NoConvergence: return 3;
        case ErrorKind::Io:
        case ErrorKind::EmptyFile: return 4;
        default: return 2;
    }
}

int report_error(const Error& e) {
    nlohmann::json j = {{"error", kind_name(e.kind())}, {"message", e.what()}};
    std::cerr << j.dump() << "\n";
    return exit_code(e.kind());
}

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream os(p);
    if (!os) throw Error(ErrorKind::Io, "cannot write " + p.string());
    os << text;
}

struct Common {
    std::string config, scenario, out;
    std::int64_t seed = -1;
    int jobs = 0;
    bool synthetic = false;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "experiment JSON file");
    cmd->add_option("--scenario", c.scenario, "stc_np, stc_p, lucas, ebm or stc_identity");
    cmd->add_option("--seed", c.seed, "master seed");
    cmd->add_option("--jobs", c.jobs, "worker threads");
    cmd->add_option("--out", c.out, "output directory");
    cmd->add_flag("--synthetic", c.synthetic, "use the synthetic EBM stand-in");
}

RunConfig base_config(const Common& c) {
    RunConfig cfg = c.config.empty() ? RunConfig{} : load_run_config(c.config);
    if (!c.scenario.empty()) {
        cfg.scenario = c.scenario;
        cfg.base_model.reset();
        cfg.abs_model.reset();
    }
    if (c.seed >= 0) {
        cfg.experiment.seed = static_cast<std::uint64_t>(c.seed);
        cfg.experiment.solver.seed = cfg.experiment.seed;
    }
    if (c.jobs > 0) cfg.experiment.jobs = c.jobs;
    if (!c.out.empty()) cfg.out = c.out;
    if (c.synthetic) cfg.synthetic = true;
    return cfg;
}

int cmd_validate(const Common& c, const std::string& base, const std::string& abs) {
    Scenario sc;
    if (!base.empty() || !abs.empty()) {
        if (base.empty() || abs.empty()) throw Error(ErrorKind::InvalidConfig, "--base and --abs go together");
        RunConfig cfg;
        cfg.base_model = base;
        cfg.abs_model = abs;
        sc = resolve_scenario(cfg);
    } else {
        sc = resolve_scenario(base_config(c));
    }
    nlohmann::json j = {{"status", "ok"},
                        {"scenario", sc.name},
                        {"base_variables", sc.base->num_variables()},
                        {"abs_variables", sc.abs->num_variables()},
                        {"interventions", sc.base_set.size()},
                        {"abs_interventions", sc.abs_set.size()},
                        {"maximal_chains", maximal_chains(sc.base_set).size()}};
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_run(const Common& c, double grid_step, const std::string& method, const std::string& cost,
            const std::string& mode, const std::string& divergence, int reps, long samples) {
    RunConfig cfg = base_config(c);
    if (grid_step > 0.0) cfg.grid_step = grid_step;
    if (!method.empty()) cfg.spec.method = parse_method(method);
    if (!cost.empty()) cfg.spec.cost = parse_cost(cost);
    if (!mode.empty()) cfg.experiment.solver.mode = parse_mode(mode);
    if (!divergence.empty()) cfg.experiment.solver.divergence = parse_divergence(divergence);
    if (reps > 0) cfg.experiment.repetitions = reps;
    if (samples > 0) cfg.experiment.n_base = cfg.experiment.n_abs = static_cast<std::size_t>(samples);

    Scenario sc = resolve_scenario(cfg);
    std::filesystem::create_directories(cfg.out);
    write_text(cfg.out / "config.json", dump_run_config(cfg));
    log(Level::Info, "scenario " + sc.name + ", " + std::to_string(sc.base_set.size()) + " interventions");

    std::vector<EvalReport> reports;
    MethodSpec spec = cfg.spec;
    if (cfg.grid_step) {
        log(Level::Info, "grid search, step " + std::to_string(*cfg.grid_step));
        GridResult g = grid_search(sc, default_grid(*cfg.grid_step), spec, cfg.experiment);
        write_surface_csv(cfg.out / "surface.csv", g);
        spec.weights = g.points[g.best];
        reports.push_back(g.reports[g.best]);
    } else {
        log(Level::Info, "leave-one-out for " + method_name(spec.method));
        reports.push_back(loo_evaluate(sc, spec, cfg.experiment));
    }
    if (cfg.baselines)
        for (Method m : {Method::Pwise, Method::Map, Method::Bary}) {
            log(Level::Info, "leave-one-out for " + method_name(m));
            reports.push_back(loo_evaluate(sc, {m, spec.cost, {}}, cfg.experiment));
        }
    write_eval_csv(cfg.out / "eval.csv", reports);

    // Final map on every pair with the selected weights.
    PairSet pairs = scenario_pairs(sc, cfg.experiment.n_base, cfg.experiment.n_abs, cfg.experiment.seed);
    std::vector<std::size_t> all(pairs.pairs.size());
    for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
    LearnedMap m = learn_map(sc, pairs, all, spec, cfg.experiment.solver, cfg.experiment.bary_epsilon);
    write_map_csv(cfg.out / "tau.csv", m.tau, *pairs.base_domain, *pairs.abs_domain);
    std::filesystem::create_directories(cfg.out / "plans");
    for (std::size_t i = 0; i < m.plans.size(); ++i)
        write_plan_csv(cfg.out / "plans" / ("plan_" + std::to_string(i) + ".csv"), m.plans[i]);
    std::string rep = "[";
    for (std::size_t i = 0; i < m.reports.size(); ++i) rep += (i ? ",\n" : "\n") + report_json(m.reports[i]);
    write_text(cfg.out / "solve_report.json", rep + "\n]\n");

    for (const auto& r : reports)
        std::cout << method_name(r.spec.method) << " " << cost_name(r.spec.cost) << " JSD " << r.jsd.mean << " +- "
                  << r.jsd.std << "\n";
    return 0;
}

int cmd_downstream(const Common& c, const std::string& lrcs, const std::string& wmg) {
    RunConfig cfg = base_config(c);
    cfg.scenario = "ebm";
    if (!lrcs.empty()) cfg.lrcs_csv = lrcs;
    if (!wmg.empty()) cfg.wmg_csv = wmg;
    if (!cfg.synthetic && !(cfg.lrcs_csv && cfg.wmg_csv))
        throw Error(ErrorKind::InvalidConfig, "downstream needs --lrcs and --wmg, or --synthetic");
    Scenario sc = resolve_scenario(cfg);
    std::filesystem::create_directories(cfg.out);
    if (cfg.synthetic)
        write_ebm_csv(sc.ebm->tables, cfg.out / "synthetic_lrcs.csv", cfg.out / "synthetic_wmg.csv");
    StochasticMap tau = downstream_map(sc, cfg.experiment.solver);
    auto base_dom = enumerate_domain(*sc.base), abs_dom = enumerate_domain(*sc.abs);
    write_map_csv(cfg.out / "tau.csv", tau, *base_dom, *abs_dom);
    auto rows = downstream_regression(sc, tau);
    write_downstream_csv(cfg.out / "downstream.csv", rows);
    for (std::size_t t = 0; t < rows.size(); ++t)
        std::cout << "task " << t + 1 << ": " << rows[t].train << " -> " << rows[t].test << "  MSE " << rows[t].mse_mean
                  << " +- " << rows[t].mse_std << "\n";
    return 0;
}

int cmd_export(const Common& c) {
    RunConfig cfg = base_config(c);
    Scenario sc = resolve_scenario(cfg);
    std::filesystem::create_directories(cfg.out);
    save_model(cfg.out / (sc.name + "_base.json"), *sc.base, sc.base_set, sc.omega);
    save_model(cfg.out / (sc.name + "_abs.json"), *sc.abs, sc.abs_set);
    std::cout << (cfg.out / (sc.name + "_base.json")).string() << "\n" << (cfg.out / (sc.name + "_abs.json")).string() << "\n";
    return 0;
}

int cmd_sample(const Common& c, long samples) {
    RunConfig cfg = base_config(c);
    Scenario sc = resolve_scenario(cfg);
    std::size_t n = samples > 0 ? static_cast<std::size_t>(samples) : cfg.experiment.n_base;
    PairSet pairs = scenario_pairs(sc, n, n, cfg.experiment.seed);
    export_pairs(cfg.out, pairs, sc.base_set);
    std::cout << pairs.pairs.size() << " pairs written to " << cfg.out.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Causal optimal transport of abstractions"};
    app.require_subcommand(1);

    Common validate_c, run_c, down_c, export_c, sample_c;
    std::string base, abs, method, cost, mode, divergence, lrcs, wmg;
    double grid_step = 0.0;
    int reps = 0;
    long samples = 0, sample_n = 0;

    auto* validate = app.add_subcommand("validate", "check a base/abstracted model pair and its omega map");
    add_common(validate, validate_c);
    validate->add_option("--base", base, "base model JSON (carries omega)");
    validate->add_option("--abs", abs, "abstracted model JSON");

    auto* run = app.add_subcommand("run", "learn a map and evaluate it by leave-one-pair-out");
    add_common(run, run_c);
    run->add_option("--grid", grid_step, "grid-search step over (kappa, lambda, mu)");
    run->add_option("--method", method, "cota_plan, cota_map, pwise, map or bary");
    run->add_option("--cost", cost, "omega or hamming");
    run->add_option("--mode", mode, "exact or approx");
    run->add_option("--divergence", divergence, "FRO or JSD");
    run->add_option("--repetitions", reps, "reseeded repetitions");
    run->add_option("--samples", samples, "samples per intervention");

    auto* down = app.add_subcommand("downstream", "EBM regression tasks with tau-abstracted rows");
    add_common(down, down_c);
    down->add_option("--lrcs", lrcs, "LRCS table (CG,ML)");
    down->add_option("--wmg", wmg, "WMG table (CG,ML1,ML2)");

    auto* exp = app.add_subcommand("export-scenario", "write a shipped scenario as model JSON files");
    add_common(exp, export_c);

    auto* smp = app.add_subcommand("sample", "draw the interventional pairs of a scenario to CSV");
    add_common(smp, sample_c);
    smp->add_option("--samples", sample_n, "samples per intervention");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*validate) return cmd_validate(validate_c, base, abs);
        if (*run) return cmd_run(run_c, grid_step, method, cost, mode, divergence, reps, samples);
        if (*down) return cmd_downstream(down_c, lrcs, wmg);
        if (*exp) return cmd_export(export_c);
        if (*smp) return cmd_sample(sample_c, sample_n);
    } catch (const Error& e) {
        return report_error(e);
    } catch (const std::filesystem::filesystem_error& e) {
        return report_error(Error(ErrorKind::Io, e.what()));
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json({{"error", "Internal"}, {"message", e.what()}}).dump() << "\n";
        return 1;
    }
    return 0;
}
