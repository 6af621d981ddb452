#include "cota/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "cota/model_io.hpp"

namespace cota {

namespace {

using nlohmann::json;

template <class T>
void read_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

std::string z_name(ZSource z) { return z == ZSource::Plan ? "plan" : "analytic"; }

ZSource parse_z(const std::string& s) {
    if (s == "plan") return ZSource::Plan;
    if (s == "analytic") return ZSource::Analytic;
    throw Error(ErrorKind::InvalidConfig, "unknown z_source '" + s + "'");
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text, const std::string& source) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::ParseError, source + ": " + e.what());
    }
    RunConfig c;
    try {
        read_if(j, "scenario", c.scenario);
        if (j.contains("models")) {
            c.base_model = j["models"].at("base").get<std::string>();
            c.abs_model = j["models"].at("abs").get<std::string>();
        }
        read_if(j, "alignment", c.alignment);
        if (j.contains("ebm")) {
            const json& e = j["ebm"];
            if (e.contains("lrcs")) c.lrcs_csv = e["lrcs"].get<std::string>();
            if (e.contains("wmg")) c.wmg_csv = e["wmg"].get<std::string>();
            read_if(e, "bins", c.bins);
            read_if(e, "synthetic", c.synthetic);
        }
        if (j.contains("method")) c.spec.method = parse_method(j["method"].get<std::string>());
        if (j.contains("cost")) c.spec.cost = parse_cost(j["cost"].get<std::string>());
        if (j.contains("weights")) {
            const json& w = j["weights"];
            read_if(w, "kappa", c.spec.weights.kappa);
            read_if(w, "lambda", c.spec.weights.lambda);
            read_if(w, "lambda_prime", c.spec.weights.lambda_prime);
            read_if(w, "mu", c.spec.weights.mu);
        }
        if (j.contains("grid")) c.grid_step = j["grid"].value("step", 0.1);
        read_if(j, "baselines", c.baselines);
        if (j.contains("out")) c.out = j["out"].get<std::string>();

        ExperimentConfig& x = c.experiment;
        if (j.contains("samples")) {
            read_if(j["samples"], "base", x.n_base);
            read_if(j["samples"], "abs", x.n_abs);
        }
        read_if(j, "repetitions", x.repetitions);
        read_if(j, "seed", x.seed);
        read_if(j, "jobs", x.jobs);
        read_if(j, "bary_epsilon", x.bary_epsilon);
        if (j.contains("metrics")) {
            x.with_wass = false;
            for (const auto& m : j["metrics"]) {
                std::string s = m.get<std::string>();
                if (s == "WASS") x.with_wass = true;
                else if (s != "JSD") throw Error(ErrorKind::InvalidConfig, source + ": unknown metric '" + s + "'");
            }
        }
        if (j.contains("solver")) {
            const json& s = j["solver"];
            SolverConfig& sc = x.solver;
            read_if(s, "max_outer_iters", sc.max_outer_iters);
            read_if(s, "max_sinkhorn_iters", sc.max_sinkhorn_iters);
            read_if(s, "step_scale", sc.step_scale);
            read_if(s, "marginal_tol", sc.marginal_tol);
            read_if(s, "objective_tol", sc.objective_tol);
            read_if(s, "epsilon", sc.epsilon);
            read_if(s, "smoothing", sc.smoothing);
            if (s.contains("mode")) sc.mode = parse_mode(s["mode"].get<std::string>());
            if (s.contains("z_source")) sc.z_source = parse_z(s["z_source"].get<std::string>());
            if (s.contains("divergence")) sc.divergence = parse_divergence(s["divergence"].get<std::string>());
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, source + ": " + e.what());
    } catch (const Error& e) {
        if (e.message().rfind(source, 0) == 0) throw;
        throw Error(e.kind(), source + ": " + e.message());
    }
    c.experiment.solver.seed = c.experiment.seed;
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    RunConfig c = parse_run_config(ss.str(), path.string());
    // Relative paths inside the file resolve against its directory.
    auto rebase = [&](std::optional<std::filesystem::path>& p) {
        if (p && p->is_relative()) p = path.parent_path() / *p;
    };
    rebase(c.base_model);
    rebase(c.abs_model);
    rebase(c.lrcs_csv);
    rebase(c.wmg_csv);
    return c;
}

std::string dump_run_config(const RunConfig& c) {
    const ExperimentConfig& x = c.experiment;
    const SolverConfig& s = x.solver;
    json j;
    j["scenario"] = c.scenario;
    if (c.base_model && c.abs_model) j["models"] = {{"base", c.base_model->string()}, {"abs", c.abs_model->string()}};
    if (!c.alignment.empty()) j["alignment"] = c.alignment;
    if (c.scenario == "ebm") {
        json e = {{"bins", c.bins}, {"synthetic", c.synthetic}};
        if (c.lrcs_csv) e["lrcs"] = c.lrcs_csv->string();
        if (c.wmg_csv) e["wmg"] = c.wmg_csv->string();
        j["ebm"] = e;
    }
    j["method"] = method_name(c.spec.method);
    j["cost"] = cost_name(c.spec.cost);
    j["weights"] = {{"kappa", c.spec.weights.kappa},
                    {"lambda", c.spec.weights.lambda},
                    {"lambda_prime", c.spec.weights.lambda_prime},
                    {"mu", c.spec.weights.mu}};
    if (c.grid_step) j["grid"] = {{"step", *c.grid_step}};
    j["baselines"] = c.baselines;
    j["out"] = c.out.string();
    j["samples"] = {{"base", x.n_base}, {"abs", x.n_abs}};
    j["repetitions"] = x.repetitions;
    j["seed"] = x.seed;
    j["jobs"] = x.jobs;
    j["bary_epsilon"] = x.bary_epsilon;
    j["metrics"] = x.with_wass ? json::array({"JSD", "WASS"}) : json::array({"JSD"});
    j["solver"] = {{"max_outer_iters", s.max_outer_iters},
                   {"max_sinkhorn_iters", s.max_sinkhorn_iters},
                   {"step_scale", s.step_scale},
                   {"marginal_tol", s.marginal_tol},
                   {"objective_tol", s.objective_tol},
                   {"epsilon", s.epsilon},
                   {"smoothing", s.smoothing},
                   {"mode", mode_name(s.mode)},
                   {"z_source", z_name(s.z_source)},
                   {"divergence", divergence_name(s.divergence)}};
    return j.dump(2) + "\n";
}

Scenario resolve_scenario(const RunConfig& cfg) {
    if (cfg.base_model && cfg.abs_model) {
        ModelFile b = load_model(*cfg.base_model), a = load_model(*cfg.abs_model);
        if (!b.omega) throw Error(ErrorKind::NotTotal, cfg.base_model->string() + ": no omega entries");
        Scenario sc;
        sc.name = cfg.base_model->stem().string();
        sc.base = b.scm;
        sc.abs = a.scm;
        sc.base_set = b.interventions;
        sc.abs_set = a.interventions;
        sc.omega = *b.omega;
        if (cfg.alignment.empty()) {
            for (const auto& v : sc.abs->variables())
                if (find_variable(sc.base->variables(), v.name) >= 0) sc.alignment.aligned[v.name] = {v.name};
        } else {
            sc.alignment.aligned = cfg.alignment;
        }
        sc.base_ordinal.assign(sc.base->num_variables(), false);
        sc.abs_ordinal.assign(sc.abs->num_variables(), false);
        sc.validate();
        return sc;
    }
    if (cfg.scenario == "ebm") {
        if (cfg.lrcs_csv && cfg.wmg_csv && !cfg.synthetic) return load_ebm(*cfg.lrcs_csv, *cfg.wmg_csv, cfg.bins);
        return load_ebm(synthetic_ebm(cfg.experiment.seed), cfg.bins);
    }
    return scenario_by_name(cfg.scenario, cfg.experiment.seed);
}

}  // namespace cota
