#include "cota/cota.hpp"

#include <cmath>
#include <limits>

#include "json.hpp"

namespace cota {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

void CotaWeights::validate() const {
    if (kappa < 0.0 || lambda < 0.0 || lambda_prime < 0.0 || mu < 0.0)
        throw Error(ErrorKind::InvalidWeights, "weights must be nonnegative");
    if (std::abs(kappa + lambda + lambda_prime + mu - 1.0) > 1e-9)
        throw Error(ErrorKind::InvalidWeights, "weights must sum to 1");
}

void SolverConfig::validate() const {
    if (max_outer_iters < 1 || max_sinkhorn_iters < 1)
        throw Error(ErrorKind::InvalidConfig, "iteration limits must be at least 1");
    if (!(marginal_tol > 0.0) || !(objective_tol > 0.0) || !(epsilon > 0.0) || !(step_scale > 0.0) ||
        !(smoothing > 0.0))
        throw Error(ErrorKind::InvalidConfig, "tolerances and scales must be positive");
}

ChainProblem make_chain_problem(const DiscreteScm& base, const DiscreteScm& abs, const DomainIndex& base_dom,
                                const DomainIndex& abs_dom, const std::vector<Intervention>& base_chain,
                                const std::vector<Intervention>& abs_chain, std::vector<Eigen::VectorXd> alpha,
                                std::vector<Eigen::VectorXd> beta, CostMatrix cost, bool with_analytic_z) {
    const std::size_t n = base_chain.size();
    if (n == 0) throw Error(ErrorKind::EmptyList, "empty chain");
    if (abs_chain.size() != n || alpha.size() != n || beta.size() != n)
        throw Error(ErrorKind::LengthMismatch, "chain inputs differ in length");
    for (std::size_t k = 0; k < n; ++k)
        if (alpha[k].size() != cost.cols() || beta[k].size() != cost.rows())
            throw Error(ErrorKind::ShapeMismatch, "marginal length does not match the cost matrix");
    ChainProblem p;
    p.alpha = std::move(alpha);
    p.beta = std::move(beta);
    p.cost = std::move(cost);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        p.links.push_back(compatibility_index_sets(base_dom, abs_dom, base, abs, base_chain[k], base_chain[k + 1],
                                                   abs_chain[k], abs_chain[k + 1]));
        if (with_analytic_z)
            p.analytic_z.push_back(analytic_normalizing_vectors(base_dom, abs_dom, base, abs, base_chain[k],
                                                                base_chain[k + 1], abs_chain[k], abs_chain[k + 1]));
    }
    return p;
}

std::vector<NormalizingVectors> chain_normalizers(const std::vector<TransportPlan>& plans, const ChainProblem& prob,
                                                  ZSource source, double smoothing) {
    if (source == ZSource::Analytic) {
        if (prob.analytic_z.size() != prob.links.size())
            throw Error(ErrorKind::InvalidConfig, "chain was built without analytic normalizers");
        return prob.analytic_z;
    }
    std::vector<NormalizingVectors> z;
    z.reserve(prob.links.size());
    for (std::size_t k = 0; k < prob.links.size(); ++k) z.push_back(normalizing_vectors(plans[k], prob.links[k], smoothing));
    return z;
}

namespace {

void check_plans(const std::vector<TransportPlan>& plans, const ChainProblem& prob,
                 const std::vector<NormalizingVectors>& z) {
    if (plans.size() != prob.size()) throw Error(ErrorKind::ShapeMismatch, "one plan per chain element required");
    for (const auto& p : plans)
        if (p.rows() != prob.cost.rows() || p.cols() != prob.cost.cols())
            throw Error(ErrorKind::ShapeMismatch, "plan shape differs from the cost matrix");
    if (z.size() != prob.links.size()) throw Error(ErrorKind::ShapeMismatch, "one normalizer per link required");
}

}  // namespace

ObjectiveTerms cota_objective(const std::vector<TransportPlan>& plans, const ChainProblem& prob, const CotaWeights& w,
                              ConstraintMode mode, DivergenceKind d, const std::vector<NormalizingVectors>& z) {
    check_plans(plans, prob, z);
    ObjectiveTerms t;
    for (const auto& p : plans) {
        t.transport += prob.cost.cwiseProduct(p).sum();
        t.entropy += entropy(p);
    }
    for (std::size_t k = 0; k < prob.links.size(); ++k) {
        const auto& s = prob.links[k];
        if (mode == ConstraintMode::Exact) {
            t.delta += delta_base(plans[k], plans[k + 1], z[k].z_base, d, s);
            t.delta_abs += delta_abs(plans[k], plans[k + 1], z[k].z_abs, d, s);
        } else {
            t.delta += delta_approx(plans[k], plans[k + 1], z[k].z_base, z[k].z_abs, d, s);
        }
    }
    if (mode == ConstraintMode::Exact)
        t.total = w.kappa * t.transport + w.lambda * t.delta + w.lambda_prime * t.delta_abs - w.mu * t.entropy;
    else
        t.total = w.kappa * t.transport + (w.lambda + w.lambda_prime) * t.delta - w.mu * t.entropy;
    return t;
}

std::vector<Eigen::MatrixXd> cota_gradient(const std::vector<TransportPlan>& plans, const ChainProblem& prob,
                                           const CotaWeights& w, ConstraintMode mode, DivergenceKind d,
                                           const std::vector<NormalizingVectors>& z) {
    check_plans(plans, prob, z);
    std::vector<Eigen::MatrixXd> g(plans.size());
    for (std::size_t n = 0; n < plans.size(); ++n) {
        g[n] = w.kappa * prob.cost;
        if (w.mu != 0.0)
            for (Eigen::Index j = 0; j < g[n].cols(); ++j)
                for (Eigen::Index i = 0; i < g[n].rows(); ++i)
                    if (plans[n](i, j) > 0.0) g[n](i, j) += w.mu * std::log(plans[n](i, j));
    }
    for (std::size_t k = 0; k < prob.links.size(); ++k) {
        const auto& s = prob.links[k];
        if (mode == ConstraintMode::Exact) {
            if (w.lambda != 0.0) delta_base_grad(plans[k], plans[k + 1], z[k].z_base, d, s, w.lambda, g[k], g[k + 1]);
            if (w.lambda_prime != 0.0)
                delta_abs_grad(plans[k], plans[k + 1], z[k].z_abs, d, s, w.lambda_prime, g[k], g[k + 1]);
        } else if (w.lambda + w.lambda_prime != 0.0) {
            delta_approx_grad(plans[k], plans[k + 1], z[k].z_base, z[k].z_abs, d, s, w.lambda + w.lambda_prime, g[k],
                              g[k + 1]);
        }
    }
    return g;
}

namespace {

// Curvature of the element-wise constraint terms relative to the entropy
// geometry. The exact-mode terms depend on plan marginals only, which are
// fixed on the feasible set, so they add nothing there.
double constraint_curvature(const std::vector<TransportPlan>& plans, const ChainProblem& prob, const CotaWeights& w,
                            const SolverConfig& cfg, const std::vector<NormalizingVectors>& z) {
    if (cfg.mode == ConstraintMode::Exact || prob.links.empty()) return 0.0;
    double phi_min = 1.0, pmax = 0.0;
    for (std::size_t k = 0; k < prob.links.size(); ++k) {
        for (std::size_t j : prob.links[k].c_base) phi_min = std::min(phi_min, z[k].z_base[static_cast<Eigen::Index>(j)]);
        for (std::size_t i : prob.links[k].c_abs) phi_min = std::min(phi_min, z[k].z_abs[static_cast<Eigen::Index>(i)]);
    }
    for (const auto& p : plans) pmax = std::max(pmax, p.maxCoeff());
    const double lam = w.lambda + w.lambda_prime;
    // Each plan sits in at most two links.
    if (cfg.divergence == DivergenceKind::FRO) return 2.0 * lam * 2.0 * (1.0 + 1.0 / (phi_min * phi_min)) * pmax;
    return 2.0 * lam * (1.0 / phi_min + 1.0) / (2.0 * std::log(2.0));
}

}  // namespace

CotaResult solve_cota(const ChainProblem& prob, const CotaWeights& w, const SolverConfig& cfg) {
    w.validate();
    cfg.validate();
    const std::size_t N = prob.size();
    const double inner_tol = std::min(cfg.marginal_tol * 1e-3, 1e-9);
    const int inner_iters = std::max(cfg.max_sinkhorn_iters, 1) * 10;

    std::vector<Eigen::MatrixXd> logp(N);
    std::vector<TransportPlan> plans(N);
    std::vector<ScalingState> warm(N);
    for (std::size_t n = 0; n < N; ++n) {
        plans[n] = product_coupling(prob.alpha[n], prob.beta[n]);
        logp[n] = plans[n].unaryExpr([](double x) { return x > 0.0 ? std::log(x) : kNegInf; });
    }
    CotaWeights w_rest = w;
    w_rest.mu = 0.0;
    const double cmax = prob.cost.size() ? prob.cost.cwiseAbs().maxCoeff() : 0.0;
    const double l_floor = std::max(0.05 * w.kappa * cmax, 1e-6);

    auto z = chain_normalizers(plans, prob, cfg.z_source, cfg.smoothing);
    double f = cota_objective(plans, prob, w, cfg.mode, cfg.divergence, z).total;
    CotaResult res;
    res.report.trace.push_back(f);

    bool converged = false;
    int it = 0;
    for (; it < cfg.max_outer_iters && !converged; ++it) {
        auto g = cota_gradient(plans, prob, w_rest, cfg.mode, cfg.divergence, z);
        double lip = std::max(w.mu + constraint_curvature(plans, prob, w, cfg, z), l_floor);
        double step = cfg.step_scale / lip;

        bool accepted = false;
        for (int halving = 0; halving < 40 && !accepted; ++halving, step *= 0.5) {
            std::vector<TransportPlan> trial(N);
            std::vector<ScalingState> trial_warm = warm;
            bool ok = true;
            for (std::size_t n = 0; n < N && ok; ++n) {
                Eigen::MatrixXd lk = logp[n];
                const double shrink = 1.0 - step * w.mu;
                for (Eigen::Index j = 0; j < lk.cols(); ++j)
                    for (Eigen::Index i = 0; i < lk.rows(); ++i)
                        if (lk(i, j) != kNegInf) lk(i, j) = shrink * lk(i, j) - step * g[n](i, j);
                auto sr = scale_to_marginals(lk, prob.alpha[n], prob.beta[n], inner_tol, inner_iters, &trial_warm[n]);
                ok = sr.violation <= cfg.marginal_tol;
                trial[n] = std::move(sr.plan);
            }
            if (!ok) continue;
            auto z_new = chain_normalizers(trial, prob, cfg.z_source, cfg.smoothing);
            double f_new = cota_objective(trial, prob, w, cfg.mode, cfg.divergence, z_new).total;
            if (!(f_new <= f + 1e-12 * std::max(1.0, std::abs(f)))) continue;
            accepted = true;
            const double decrease = f - f_new;
            plans = std::move(trial);
            warm = std::move(trial_warm);
            for (std::size_t n = 0; n < N; ++n)
                logp[n] = plans[n].unaryExpr([](double x) { return x > 0.0 ? std::log(x) : kNegInf; });
            z = std::move(z_new);
            f = f_new;
            res.report.trace.push_back(f);
            if (decrease < cfg.objective_tol) converged = true;
        }
        // No descent direction left at working precision.
        if (!accepted) converged = true;
    }
    res.report.iterations = it;
    res.report.converged = converged;
    res.report.terms = cota_objective(plans, prob, w, cfg.mode, cfg.divergence, z);
    for (std::size_t n = 0; n < N; ++n)
        res.report.max_violation =
            std::max(res.report.max_violation, marginal_violation(plans[n], prob.alpha[n], prob.beta[n]));
    res.plans = std::move(plans);
    return res;
}

std::string report_json(const SolveReport& r, int indent) {
    nlohmann::json j;
    j["objective"] = r.terms.total;
    j["terms"] = {{"transport", r.terms.transport},
                  {"delta", r.terms.delta},
                  {"delta_abs", r.terms.delta_abs},
                  {"entropy", r.terms.entropy}};
    j["trace"] = r.trace;
    j["max_marginal_violation"] = r.max_violation;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    return j.dump(indent);
}

}  // namespace cota
