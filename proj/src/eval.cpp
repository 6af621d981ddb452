#include "cota/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <iomanip>
#include <mutex>
#include <set>
#include <thread>

#include "cota/rng.hpp"

namespace cota {

std::string method_name(Method m) {
    switch (m) {
        case Method::CotaPlan: return "COTA(P)";
        case Method::CotaMap: return "COTA(tau)";
        case Method::Pwise: return "Pwise";
        case Method::Map: return "Map";
        case Method::Bary: return "Bary";
    }
    return "?";
}

Method parse_method(const std::string& s) {
    for (Method m : {Method::CotaPlan, Method::CotaMap, Method::Pwise, Method::Map, Method::Bary})
        if (s == method_name(m)) return m;
    if (s == "cota_plan") return Method::CotaPlan;
    if (s == "cota_map") return Method::CotaMap;
    if (s == "pwise") return Method::Pwise;
    if (s == "map") return Method::Map;
    if (s == "bary") return Method::Bary;
    throw Error(ErrorKind::InvalidConfig, "unknown method '" + s + "'");
}

std::string cost_name(CostKind c) { return c == CostKind::Omega ? "omega" : "hamming"; }

CostKind parse_cost(const std::string& s) {
    if (s == "omega") return CostKind::Omega;
    if (s == "hamming") return CostKind::Hamming;
    throw Error(ErrorKind::InvalidConfig, "unknown cost '" + s + "'");
}

std::string divergence_name(DivergenceKind d) { return d == DivergenceKind::FRO ? "FRO" : "JSD"; }

DivergenceKind parse_divergence(const std::string& s) {
    if (s == "FRO" || s == "fro") return DivergenceKind::FRO;
    if (s == "JSD" || s == "jsd") return DivergenceKind::JSD;
    throw Error(ErrorKind::InvalidConfig, "unknown divergence '" + s + "'");
}

std::string mode_name(ConstraintMode m) { return m == ConstraintMode::Exact ? "exact" : "approx"; }

ConstraintMode parse_mode(const std::string& s) {
    if (s == "exact") return ConstraintMode::Exact;
    if (s == "approx") return ConstraintMode::Approx;
    throw Error(ErrorKind::InvalidConfig, "unknown mode '" + s + "'");
}

bool is_cota(Method m) { return m == Method::CotaPlan || m == Method::CotaMap; }

double metric_value(const ErrorMetric& metric, const Eigen::VectorXd& pushed, const Eigen::VectorXd& target) {
    if (pushed.size() != target.size()) throw Error(ErrorKind::DomainMismatch, "pushforward and target differ in size");
    if (metric.kind == MetricKind::JSD) return bregman_div(DivergenceKind::JSD, pushed, target);
    if (metric.ground.rows() != target.size() || metric.ground.cols() != target.size())
        throw Error(ErrorKind::DomainMismatch, "ground metric does not match the abstracted domain");
    Eigen::VectorXd a = pushed / pushed.sum(), b = target / target.sum();
    TransportPlan p = exact_transport(metric.ground, a, b);
    return std::max(0.0, p.cwiseProduct(metric.ground).sum());
}

std::vector<double> uniform_weights(std::size_t n) { return std::vector<double>(n, 1.0 / static_cast<double>(n)); }

double abstraction_error(const StochasticMap& tau, const PairSet& pairs, const ErrorMetric& metric,
                         const std::vector<double>& q) {
    if (q.size() != pairs.pairs.size()) throw Error(ErrorKind::LengthMismatch, "one weight per pair required");
    if (tau.cols() != static_cast<Eigen::Index>(pairs.base_domain->size()) ||
        tau.rows() != static_cast<Eigen::Index>(pairs.abs_domain->size()))
        throw Error(ErrorKind::DomainMismatch, "map shape does not match the pair domains");
    double e = 0.0;
    for (std::size_t k = 0; k < q.size(); ++k) {
        if (q[k] == 0.0) continue;
        e += q[k] * metric_value(metric, pushforward(tau, pairs.pairs[k].base.weights), pairs.pairs[k].abs.weights);
    }
    return e;
}

FoldLearner::FoldLearner(const Scenario& sc, const PairSet& pairs, std::vector<std::size_t> active, CostKind cost,
                         bool analytic_z)
    : sc_(&sc), pairs_(&pairs), active_(std::move(active)) {
    if (active_.empty()) throw Error(ErrorKind::InsufficientPairs, "no pairs to learn from");
    std::sort(active_.begin(), active_.end());
    const DomainIndex& bdom = *pairs.base_domain;
    const DomainIndex& adom = *pairs.abs_domain;

    InterventionPoset base_sub, abs_sub;
    OmegaMap omega_sub;
    std::set<std::size_t> images;
    for (std::size_t a : active_) images.insert(sc.omega.image.at(a));
    std::vector<std::size_t> abs_ids(images.begin(), images.end());
    for (std::size_t i : abs_ids) abs_sub.interventions.push_back(sc.abs_set[i]);
    for (std::size_t a : active_) {
        base_sub.interventions.push_back(sc.base_set[a]);
        auto it = std::lower_bound(abs_ids.begin(), abs_ids.end(), sc.omega.image[a]);
        omega_sub.image.push_back(static_cast<std::size_t>(it - abs_ids.begin()));
    }

    cost_ = cost == CostKind::Omega ? omega_cost(bdom, adom, base_sub, abs_sub, omega_sub)
                                    : hamming_cost(bdom, adom, sc.alignment);
    base_ground_ = ground_cost(bdom, sc.base_ordinal);
    abs_ground_ = ground_cost(adom, sc.abs_ordinal);

    for (const Chain& c : maximal_chains(base_sub)) {
        Chain full;
        std::vector<Intervention> bchain, achain;
        std::vector<Eigen::VectorXd> alpha, beta;
        for (std::size_t i : c) {
            std::size_t k = active_[i];
            full.push_back(k);
            bchain.push_back(sc.base_set[k]);
            achain.push_back(sc.abs_set[sc.omega.image[k]]);
            alpha.push_back(pairs.pairs.at(k).base.weights);
            beta.push_back(pairs.pairs.at(k).abs.weights);
        }
        problems_.push_back(make_chain_problem(*sc.base, *sc.abs, bdom, adom, bchain, achain, std::move(alpha),
                                               std::move(beta), cost_, analytic_z));
        chains_.push_back(std::move(full));
    }
}

LearnedMap FoldLearner::learn(const MethodSpec& spec, const SolverConfig& cfg, double bary_epsilon) const {
    LearnedMap out;
    const auto& pairs = pairs_->pairs;
    switch (spec.method) {
        case Method::CotaPlan:
        case Method::CotaMap: {
            for (const auto& prob : problems_) {
                CotaResult r = solve_cota(prob, spec.weights, cfg);
                for (auto& p : r.plans) out.plans.push_back(std::move(p));
                out.reports.push_back(std::move(r.report));
            }
            out.tau = aggregate(out.plans, spec.method == Method::CotaPlan ? AggregationMode::PlanAverage
                                                                          : AggregationMode::MapAverage);
            break;
        }
        case Method::Pwise:
        case Method::Map: {
            for (std::size_t k : active_)
                out.plans.push_back(sinkhorn(cost_, pairs[k].base.weights, pairs[k].abs.weights, cfg.epsilon,
                                             cfg.marginal_tol, cfg.max_sinkhorn_iters));
            out.tau = aggregate(out.plans, spec.method == Method::Pwise ? AggregationMode::PlanAverage
                                                                       : AggregationMode::MapAverage);
            break;
        }
        case Method::Bary: {
            std::vector<EmpiricalMeasure> bm, am;
            for (std::size_t k : active_) {
                bm.push_back(pairs[k].base);
                am.push_back(pairs[k].abs);
            }
            auto w = uniform_weights(active_.size());
            EmpiricalMeasure bb = wasserstein_barycenter(bm, base_ground_, bary_epsilon, w);
            EmpiricalMeasure ab = wasserstein_barycenter(am, abs_ground_, bary_epsilon, w);
            out.plans.push_back(
                sinkhorn(cost_, bb.weights, ab.weights, cfg.epsilon, cfg.marginal_tol, cfg.max_sinkhorn_iters));
            out.tau = plan_to_map(out.plans.back());
            break;
        }
    }
    return out;
}

LearnedMap learn_map(const Scenario& sc, const PairSet& pairs, const std::vector<std::size_t>& active,
                     const MethodSpec& spec, const SolverConfig& cfg, double bary_epsilon) {
    FoldLearner f(sc, pairs, active, spec.cost, cfg.z_source == ZSource::Analytic);
    return f.learn(spec, cfg, bary_epsilon);
}

namespace {

// Runs fn(0..n-1) on up to `jobs` threads; the first exception by index is rethrown.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n;) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> threads;
    for (int t = 0; t < std::min<int>(jobs, static_cast<int>(n)); ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

struct LooContext {
    std::vector<PairSet> pairs;                   // per repetition
    std::vector<std::vector<FoldLearner>> folds;  // [repetition][held-out]
    ErrorMetric wass;
};

LooContext make_context(const Scenario& sc, CostKind cost, const ExperimentConfig& exp) {
    if (sc.base_set.size() < 2) throw Error(ErrorKind::InsufficientPairs, "leave-one-out needs at least two pairs");
    if (exp.repetitions < 1) throw Error(ErrorKind::InvalidConfig, "repetitions must be positive");
    LooContext ctx;
    ctx.pairs.reserve(static_cast<std::size_t>(exp.repetitions));
    const bool analytic = exp.solver.z_source == ZSource::Analytic;
    for (int r = 0; r < exp.repetitions; ++r) {
        ctx.pairs.push_back(scenario_pairs(sc, exp.n_base, exp.n_abs, derive_seed(exp.seed, static_cast<std::uint64_t>(r), 2)));
        std::vector<FoldLearner> folds;
        for (std::size_t h = 0; h < sc.base_set.size(); ++h) {
            std::vector<std::size_t> active;
            for (std::size_t k = 0; k < sc.base_set.size(); ++k)
                if (k != h) active.push_back(k);
            folds.emplace_back(sc, ctx.pairs.back(), active, cost, analytic);
        }
        ctx.folds.push_back(std::move(folds));
    }
    ctx.wass = ErrorMetric::wass(ground_cost(*ctx.pairs.front().abs_domain, sc.abs_ordinal));
    return ctx;
}

void summarize(MetricSummary& m) {
    m.per_repetition.clear();
    for (const auto& row : m.per_heldout) {
        double s = 0.0;
        for (double e : row) s += e;
        m.per_repetition.push_back(s / static_cast<double>(row.size()));
    }
    const double n = static_cast<double>(m.per_repetition.size());
    m.mean = 0.0;
    for (double e : m.per_repetition) m.mean += e / n;
    double ss = 0.0;
    for (double e : m.per_repetition) ss += (e - m.mean) * (e - m.mean);
    m.std = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
    m.ci_half = 1.96 * m.std / std::sqrt(n);
}

EvalReport evaluate(const LooContext& ctx, const MethodSpec& spec, const ExperimentConfig& exp, int jobs) {
    const std::size_t reps = ctx.folds.size(), folds = ctx.folds.front().size();
    EvalReport rep;
    rep.spec = spec;
    rep.mode = exp.solver.mode;
    rep.divergence = exp.solver.divergence;
    rep.repetitions = static_cast<int>(reps);
    rep.jsd.per_heldout.assign(reps, std::vector<double>(folds, 0.0));
    rep.wass.per_heldout.assign(reps, std::vector<double>(folds, 0.0));
    parallel_for(reps * folds, jobs, [&](std::size_t t) {
        std::size_t r = t / folds, h = t % folds;
        SolverConfig cfg = exp.solver;
        cfg.seed = derive_seed(exp.seed, r, 3);
        LearnedMap m = ctx.folds[r][h].learn(spec, cfg, exp.bary_epsilon);
        const auto& pair = ctx.pairs[r].pairs[h];
        Eigen::VectorXd pushed = pushforward(m.tau, pair.base.weights);
        rep.jsd.per_heldout[r][h] = metric_value(ErrorMetric::jsd(), pushed, pair.abs.weights);
        if (exp.with_wass) rep.wass.per_heldout[r][h] = metric_value(ctx.wass, pushed, pair.abs.weights);
    });
    summarize(rep.jsd);
    summarize(rep.wass);
    return rep;
}

}  // namespace

EvalReport loo_evaluate(const Scenario& sc, const MethodSpec& spec, const ExperimentConfig& exp) {
    if (is_cota(spec.method)) spec.weights.validate();
    exp.solver.validate();
    LooContext ctx = make_context(sc, spec.cost, exp);
    return evaluate(ctx, spec, exp, exp.jobs);
}

std::vector<CotaWeights> default_grid(double step) {
    if (!(step > 0.0) || step > 1.0) throw Error(ErrorKind::InvalidConfig, "grid step must lie in (0, 1]");
    const int n = static_cast<int>(std::lround(1.0 / step));
    std::vector<CotaWeights> out;
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n - i; ++j) {
            int k = n - i - j;
            double lam = static_cast<double>(j) / n;
            out.push_back({static_cast<double>(i) / n, lam / 2.0, lam / 2.0, static_cast<double>(k) / n});
        }
    return out;
}

GridResult grid_search(const Scenario& sc, const std::vector<CotaWeights>& grid, const MethodSpec& spec,
                       const ExperimentConfig& exp) {
    if (grid.empty()) throw Error(ErrorKind::EmptyList, "empty weight grid");
    if (!is_cota(spec.method)) throw Error(ErrorKind::InvalidConfig, "grid search applies to COTA methods only");
    for (const auto& w : grid) w.validate();
    exp.solver.validate();
    LooContext ctx = make_context(sc, spec.cost, exp);
    GridResult out;
    out.points = grid;
    out.reports.resize(grid.size());
    parallel_for(grid.size(), exp.jobs, [&](std::size_t i) {
        MethodSpec s = spec;
        s.weights = grid[i];
        out.reports[i] = evaluate(ctx, s, exp, 1);
    });
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (out.reports[i].jsd.mean < out.reports[out.best].jsd.mean) out.best = i;
    return out;
}

StochasticMap baseline(Method kind, const Scenario& sc, const PairSet& pairs, CostKind cost, const SolverConfig& cfg,
                       double bary_epsilon) {
    if (is_cota(kind)) throw Error(ErrorKind::InvalidConfig, "not a baseline method");
    std::vector<std::size_t> all(pairs.pairs.size());
    for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
    return learn_map(sc, pairs, all, {kind, cost, {}}, cfg, bary_epsilon).tau;
}

RegressionData abstract_rows(const Scenario& ebm, const StochasticMap& tau) {
    if (!ebm.ebm) throw Error(ErrorKind::InvalidConfig, "scenario carries no regression tables");
    const EbmData& d = *ebm.ebm;
    DomainPtr bdom = enumerate_domain(*ebm.base), adom = enumerate_domain(*ebm.abs);
    if (tau.rows() != static_cast<Eigen::Index>(adom->size()) || tau.cols() != static_cast<Eigen::Index>(bdom->size()))
        throw Error(ErrorKind::DomainMismatch, "map shape does not match the EBM domains");
    const auto& avars = adom->variables();
    std::vector<double> cg_value, ml_value;
    for (std::size_t i = 0; i < adom->size(); ++i) {
        cg_value.push_back(std::stod(avars[0].domain[adom->value(i, 0)]));
        ml_value.push_back(d.ml.midpoint(adom->value(i, 1)));
    }
    RegressionData out;
    for (std::size_t r = 0; r < d.abs_rows.size(); ++r)
        out.lrcs.push_back({d.tables.lrcs_cg[r], d.tables.lrcs_ml[r], d.abs_rows[r][0]});
    for (const auto& x : d.base_rows) {
        auto col = tau.col(static_cast<Eigen::Index>(bdom->index_of(x)));
        RegressionRow row;
        for (Eigen::Index i = 0; i < col.size(); ++i) {
            row.control += col[i] * cg_value[i];
            row.outcome += col[i] * ml_value[i];
        }
        row.cls = static_cast<int>(ebm.omega.image[static_cast<std::size_t>(x[0]) + 1]) - 1;
        out.wmg.push_back(row);
    }
    return out;
}

namespace {

struct Line {
    double a = 0.0, b = 0.0;
    double operator()(double x) const { return a + b * x; }
};

Line ols(const std::vector<const RegressionRow*>& rows) {
    const double n = static_cast<double>(rows.size());
    double mx = 0.0, my = 0.0;
    for (auto* r : rows) {
        mx += r->control / n;
        my += r->outcome / n;
    }
    double sxx = 0.0, sxy = 0.0;
    for (auto* r : rows) {
        sxx += (r->control - mx) * (r->control - mx);
        sxy += (r->control - mx) * (r->outcome - my);
    }
    double b = sxx > 0.0 ? sxy / sxx : 0.0;
    return {my - b * mx, b};
}

double mse(const Line& f, const std::vector<const RegressionRow*>& rows) {
    double s = 0.0;
    for (auto* r : rows) s += (f(r->control) - r->outcome) * (f(r->control) - r->outcome);
    return s / static_cast<double>(rows.size());
}

}  // namespace

std::array<double, 3> downstream_task_mse(const RegressionData& data, int k) {
    std::vector<const RegressionRow*> lrcs_train, lrcs_test, wmg_train, wmg_test, wmg_all;
    for (const auto& r : data.lrcs) (r.cls == k ? lrcs_test : lrcs_train).push_back(&r);
    for (const auto& r : data.wmg) {
        (r.cls == k ? wmg_test : wmg_train).push_back(&r);
        wmg_all.push_back(&r);
    }
    if (lrcs_test.empty()) throw Error(ErrorKind::EmptyClass, "no LRCS rows in class " + std::to_string(k));
    if (lrcs_train.empty()) throw Error(ErrorKind::EmptyClass, "no LRCS training rows outside class " + std::to_string(k));

    auto join = [](std::vector<const RegressionRow*> a, const std::vector<const RegressionRow*>& b) {
        a.insert(a.end(), b.begin(), b.end());
        return a;
    };
    std::array<double, 3> out{};
    out[0] = mse(ols(lrcs_train), lrcs_test);
    out[1] = mse(ols(join(lrcs_train, wmg_all)), lrcs_test);
    out[2] = mse(ols(join(lrcs_train, wmg_train)), join(lrcs_test, wmg_test));
    return out;
}

std::vector<DownstreamRow> downstream_regression(const Scenario& ebm, const StochasticMap& tau) {
    RegressionData data = abstract_rows(ebm, tau);
    const int classes = static_cast<int>(ebm.abs_set.size()) - 1;
    // Reference MSEs of the alpha-abstraction learner on the real tables (mean, std).
    const double reference[3][2] = {{1.86, 1.75}, {0.22, 0.26}, {1.22, 0.95}};
    std::vector<DownstreamRow> rows(3);
    const char* sets[3][2] = {{"LRCS[CG!=k]", "LRCS[CG=k]"},
                              {"LRCS[CG!=k]+WMG", "LRCS[CG=k]"},
                              {"LRCS[CG!=k]+WMG[CG!=k]", "LRCS[CG=k]+WMG[CG=k]"}};
    for (int t = 0; t < 3; ++t) {
        rows[t].train = sets[t][0];
        rows[t].test = sets[t][1];
    }
    for (int k = 0; k < classes; ++k) {
        auto m = downstream_task_mse(data, k);
        for (int t = 0; t < 3; ++t) rows[t].per_class.push_back(m[t]);
    }
    for (int t = 0; t < 3; ++t) {
        auto& r = rows[t];
        const double n = static_cast<double>(r.per_class.size());
        for (double v : r.per_class) r.mse_mean += v / n;
        double ss = 0.0;
        for (double v : r.per_class) ss += (v - r.mse_mean) * (v - r.mse_mean);
        r.mse_std = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
        r.reference_mean = reference[t][0];
        r.reference_std = reference[t][1];
    }
    return rows;
}

StochasticMap downstream_map(const Scenario& ebm, const SolverConfig& cfg) {
    PairSet pairs = scenario_pairs(ebm, 0, 0, cfg.seed, false);
    std::vector<std::size_t> all(pairs.pairs.size());
    for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
    return learn_map(ebm, pairs, all, {Method::CotaPlan, CostKind::Omega, kDownstreamWeights}, cfg).tau;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw Error(ErrorKind::Io, "cannot write " + path.string());
    os << std::setprecision(12);
    return os;
}

}  // namespace

void write_eval_csv(const std::filesystem::path& path, const std::vector<EvalReport>& reports) {
    auto os = open_out(path);
    os << "method,divergence,cost,mode,kappa,lambda,lambda_prime,mu,metric,mean,std,ci_half,repetitions\n";
    for (const auto& r : reports) {
        const bool cota = is_cota(r.spec.method);
        for (int m = 0; m < 2; ++m) {
            const MetricSummary& s = m == 0 ? r.jsd : r.wass;
            os << method_name(r.spec.method) << "," << (cota ? divergence_name(r.divergence) : "-") << ","
               << cost_name(r.spec.cost) << "," << (cota ? mode_name(r.mode) : "-") << "," << r.spec.weights.kappa
               << "," << r.spec.weights.lambda << "," << r.spec.weights.lambda_prime << "," << r.spec.weights.mu
               << "," << (m == 0 ? "JSD" : "WASS") << "," << s.mean << "," << s.std << "," << s.ci_half << ","
               << r.repetitions << "\n";
        }
    }
}

void write_surface_csv(const std::filesystem::path& path, const GridResult& grid) {
    auto os = open_out(path);
    os << "kappa,lambda,mu,error,std\n";
    for (std::size_t i = 0; i < grid.points.size(); ++i) {
        const auto& w = grid.points[i];
        os << w.kappa << "," << w.lambda + w.lambda_prime << "," << w.mu << "," << grid.reports[i].jsd.mean << ","
           << grid.reports[i].jsd.std << "\n";
    }
}

void write_downstream_csv(const std::filesystem::path& path, const std::vector<DownstreamRow>& rows) {
    auto os = open_out(path);
    os << "task,train,test,reference_mse_mean,reference_mse_std,mse_mean,mse_std\n";
    for (std::size_t t = 0; t < rows.size(); ++t)
        os << t + 1 << "," << rows[t].train << "," << rows[t].test << "," << rows[t].reference_mean << ","
           << rows[t].reference_std << "," << rows[t].mse_mean << "," << rows[t].mse_std << "\n";
}

}  // namespace cota
