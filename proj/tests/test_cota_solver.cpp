#include "doctest.h"
#include "support.hpp"

#include "cota/cota.hpp"
#include "cota/datasets.hpp"

using namespace cota;

namespace {

struct ChainFixture {
    Scenario sc;
    PairSet pairs;
    std::vector<ChainProblem> problems;

    explicit ChainFixture(const std::string& name, std::uint64_t seed = 1, std::size_t n = 1000)
        : sc(scenario_by_name(name, seed)), pairs(scenario_pairs(sc, n, n, seed)) {
        CostMatrix c = omega_cost(*pairs.base_domain, *pairs.abs_domain, sc.base_set, sc.abs_set, sc.omega);
        for (const auto& chain : maximal_chains(sc.base_set)) {
            std::vector<Intervention> bc, ac;
            std::vector<Eigen::VectorXd> al, be;
            for (std::size_t k : chain) {
                bc.push_back(sc.base_set[k]);
                ac.push_back(sc.abs_set[sc.omega.image[k]]);
                al.push_back(pairs.pairs[k].base.weights);
                be.push_back(pairs.pairs[k].abs.weights);
            }
            problems.push_back(make_chain_problem(*sc.base, *sc.abs, *pairs.base_domain, *pairs.abs_domain, bc, ac,
                                                  al, be, c, true));
        }
    }
};

std::vector<TransportPlan> random_tuple(Rng& rng, const ChainProblem& p) {
    std::vector<TransportPlan> out;
    for (std::size_t n = 0; n < p.size(); ++n) out.push_back(testing::random_feasible(rng, p.alpha[n], p.beta[n]));
    return out;
}

// Interior plans with every entry positive, for entropy derivatives.
std::vector<TransportPlan> random_positive_tuple(Rng& rng, const ChainProblem& p) {
    std::vector<TransportPlan> out;
    for (std::size_t n = 0; n < p.size(); ++n) {
        Eigen::MatrixXd m = testing::random_positive(rng, p.cost.rows(), p.cost.cols());
        out.push_back(m / m.sum());
    }
    return out;
}

}  // namespace

TEST_CASE("weights and solver settings are validated") {
    CHECK_NOTHROW(CotaWeights{0.5, 0.25, 0.25, 0.0}.validate());
    CHECK_THROWS_AS(CotaWeights({0.5, 0.25, 0.25, 0.1}).validate(), Error);
    CHECK_THROWS_AS(CotaWeights({1.2, -0.2, 0.0, 0.0}).validate(), Error);
    SolverConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.marginal_tol = 0.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("objective degenerates to the transport cost") {
    ChainFixture fx("stc_np");
    Rng rng(1);
    for (const auto& prob : fx.problems) {
        auto plans = random_tuple(rng, prob);
        auto z = chain_normalizers(plans, prob, ZSource::Plan, kDefaultSmoothing);
        double want = 0.0;
        for (const auto& p : plans) want += (prob.cost.array() * p.array()).sum();
        for (auto mode : {ConstraintMode::Exact, ConstraintMode::Approx}) {
            auto t = cota_objective(plans, prob, {1, 0, 0, 0}, mode, DivergenceKind::FRO, z);
            CHECK(t.total == doctest::Approx(want).epsilon(1e-14));
            auto g = cota_gradient(plans, prob, {1, 0, 0, 0}, mode, DivergenceKind::FRO, z);
            for (const auto& gn : g) CHECK(gn == prob.cost);
        }
        // one-element chain: no constraint term at all
        ChainProblem single = prob;
        single.alpha.resize(1);
        single.beta.resize(1);
        single.links.clear();
        single.analytic_z.clear();
        std::vector<TransportPlan> one{plans[0]};
        auto t = cota_objective(one, single, {0.5, 0.25, 0.25, 0.0}, ConstraintMode::Exact, DivergenceKind::JSD, {});
        CHECK(t.delta == 0.0);
        CHECK(t.total == doctest::Approx(0.5 * (prob.cost.array() * plans[0].array()).sum()));
    }
}

TEST_CASE("constraint terms vanish for exact distributions with table normalizers") {
    for (const char* name : {"stc_np", "stc_p", "lucas"}) {
        CAPTURE(name);
        Scenario sc = scenario_by_name(name);
        DomainIndex bd(sc.base->variables()), ad(sc.abs->variables());
        CostMatrix c = omega_cost(bd, ad, sc.base_set, sc.abs_set, sc.omega);
        for (const auto& chain : maximal_chains(sc.base_set)) {
            std::vector<Intervention> bc, ac;
            std::vector<Eigen::VectorXd> al, be;
            std::vector<TransportPlan> plans;
            for (std::size_t k : chain) {
                bc.push_back(sc.base_set[k]);
                ac.push_back(sc.abs_set[sc.omega.image[k]]);
                al.push_back(exact_distribution(*sc.base, bc.back()).probs);
                be.push_back(exact_distribution(*sc.abs, ac.back()).probs);
                plans.push_back(product_coupling(al.back(), be.back()));
            }
            ChainProblem prob = make_chain_problem(*sc.base, *sc.abs, bd, ad, bc, ac, al, be, c, true);
            auto z = chain_normalizers(plans, prob, ZSource::Analytic, kDefaultSmoothing);
            for (auto d : {DivergenceKind::FRO, DivergenceKind::JSD}) {
                auto t = cota_objective(plans, prob, {0.5, 0.25, 0.25, 0.0}, ConstraintMode::Exact, d, z);
                CHECK(t.delta <= 1e-6);
                CHECK(t.delta_abs <= 1e-6);
            }
        }
    }
}

TEST_CASE("analytic gradient matches central differences") {
    ChainFixture fx("stc_p", 2);
    ChainFixture lx("stc_np", 3);
    Rng rng(4);
    int points = 0;
    for (auto mode : {ConstraintMode::Exact, ConstraintMode::Approx})
        for (auto d : {DivergenceKind::FRO, DivergenceKind::JSD})
            for (const auto* fix : {&fx, &lx})
                for (const auto& prob : fix->problems) {
                    for (int rep = 0; rep < 2; ++rep, ++points) {
                        auto plans = random_positive_tuple(rng, prob);
                        auto z = chain_normalizers(plans, prob, ZSource::Plan, kDefaultSmoothing);
                        CotaWeights w{0.4, 0.2, 0.25, 0.15};
                        auto g = cota_gradient(plans, prob, w, mode, d, z);
                        auto f = [&](const std::vector<Eigen::MatrixXd>& x) {
                            return cota_objective(x, prob, w, mode, d, z).total;
                        };
                        for (std::size_t n = 0; n < plans.size(); ++n)
                            for (Eigen::Index i = 0; i < plans[n].rows(); ++i)
                                for (Eigen::Index j = 0; j < plans[n].cols(); ++j) {
                                    double fd = testing::central_difference(f, plans, n, i, j, 1e-6);
                                    double err = std::abs(g[n](i, j) - fd) / std::max(1.0, std::abs(fd));
                                    CHECK(err < 1e-4);
                                }
                    }
                }
    CHECK(points >= 20);
}

TEST_CASE("product coupling is stationary for constant cost and pure entropy") {
    Rng rng(5);
    Eigen::VectorXd alpha = testing::random_simplex(rng, 8, 0.1), beta = testing::random_simplex(rng, 4, 0.1);
    ChainProblem prob;
    prob.alpha = {alpha};
    prob.beta = {beta};
    prob.cost = CostMatrix::Constant(4, 8, 3.0);
    std::vector<TransportPlan> plans{product_coupling(alpha, beta)};
    auto g = cota_gradient(plans, prob, {0.7, 0, 0, 0.3}, ConstraintMode::Exact, DivergenceKind::FRO, {})[0];
    // projection onto matrices with zero row and column sums
    Eigen::MatrixXd proj = g;
    Eigen::VectorXd rm = g.rowwise().mean(), cm = g.colwise().mean().transpose();
    const double all = g.mean();
    for (Eigen::Index i = 0; i < g.rows(); ++i)
        for (Eigen::Index j = 0; j < g.cols(); ++j) proj(i, j) = g(i, j) - rm[i] - cm[j] + all;
    CHECK(proj.cwiseAbs().maxCoeff() < 1e-12);

    SolverConfig cfg;
    auto res = solve_cota(prob, {0.7, 0, 0, 0.3}, cfg);
    CHECK((res.plans[0] - plans[0]).cwiseAbs().sum() < 1e-9);
}

TEST_CASE("entropy-only weights reproduce per-pair sinkhorn") {
    ChainFixture fx("stc_np", 7);
    SolverConfig cfg;
    for (double mu0 : {0.02, 0.1}) {
        CotaWeights w{1 - mu0, 0, 0, mu0};
        const double eps = mu0 / (1 - mu0);
        for (const auto& prob : fx.problems) {
            auto res = solve_cota(prob, w, cfg);
            for (std::size_t n = 0; n < prob.size(); ++n) {
                TransportPlan ref = sinkhorn(prob.cost, prob.alpha[n], prob.beta[n], eps, 1e-10, 100000);
                CHECK((res.plans[n] - ref).cwiseAbs().sum() < 1e-4);
            }
        }
    }
}

TEST_CASE("solver output is feasible, descending and deterministic") {
    for (auto mode : {ConstraintMode::Exact, ConstraintMode::Approx})
        for (auto d : {DivergenceKind::FRO, DivergenceKind::JSD}) {
            ChainFixture fx("stc_np", 11);
            SolverConfig cfg;
            cfg.mode = mode;
            cfg.divergence = d;
            for (const auto& prob : fx.problems) {
                CotaWeights w{0.6, 0.15, 0.15, 0.1};
                auto a = solve_cota(prob, w, cfg);
                auto b = solve_cota(prob, w, cfg);
                CHECK(a.report.max_violation <= 1e-6);
                for (std::size_t n = 0; n < prob.size(); ++n) {
                    CHECK(marginal_violation(a.plans[n], prob.alpha[n], prob.beta[n]) <= 1e-6);
                    CHECK(a.plans[n] == b.plans[n]);
                }
                CHECK(report_json(a.report) == report_json(b.report));
                for (std::size_t k = 1; k < a.report.trace.size(); ++k)
                    CHECK(a.report.trace[k] <= a.report.trace[k - 1] + 1e-7);
                CHECK(a.report.trace.back() <= a.report.trace.front());
            }
        }
}

TEST_CASE("constraint weight lowers the constraint-inclusive objective in approximate mode") {
    ChainFixture fx("stc_np", 13);
    SolverConfig cfg;
    cfg.mode = ConstraintMode::Approx;
    const CotaWeights w{0.81, 0.085, 0.085, 0.02};
    const CotaWeights w0{0.81 / 0.83, 0, 0, 0.02 / 0.83};
    for (const auto& prob : fx.problems) {
        auto with = solve_cota(prob, w, cfg);
        auto without = solve_cota(prob, w0, cfg);
        auto z = chain_normalizers(without.plans, prob, cfg.z_source, cfg.smoothing);
        double f0 = cota_objective(without.plans, prob, w, cfg.mode, cfg.divergence, z).total;
        CHECK(with.report.terms.total < f0);
    }
}

TEST_CASE("objective is convex along chords of feasible plan tuples") {
    for (const char* name : {"stc_np", "stc_p", "lucas"}) {
        CAPTURE(name);
        ChainFixture fx(name, 17, 2000);
        Rng rng(23);
        for (auto mode : {ConstraintMode::Exact, ConstraintMode::Approx})
            for (auto d : {DivergenceKind::FRO, DivergenceKind::JSD}) {
                for (const auto& prob : fx.problems) {
                    auto z = chain_normalizers(random_tuple(rng, prob), prob, ZSource::Plan, kDefaultSmoothing);
                    for (int t = 0; t < 50; ++t) {
                        auto A = random_tuple(rng, prob), B = random_tuple(rng, prob);
                        for (double s : {0.25, 0.5, 0.75}) {
                            std::vector<TransportPlan> M(A.size());
                            for (std::size_t n = 0; n < A.size(); ++n) M[n] = s * A[n] + (1 - s) * B[n];
                            for (const CotaWeights& w :
                                 {CotaWeights{0.5, 0.25, 0.25, 0.0}, CotaWeights{0.4, 0.25, 0.25, 0.1}}) {
                                double fa = cota_objective(A, prob, w, mode, d, z).total;
                                double fb = cota_objective(B, prob, w, mode, d, z).total;
                                double fm = cota_objective(M, prob, w, mode, d, z).total;
                                CHECK(fm <= s * fa + (1 - s) * fb + 1e-8);
                                if (w.mu > 0) CHECK(s * fa + (1 - s) * fb - fm > 0.0);
                            }
                        }
                    }
                }
            }
    }
}
