#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cota/cost.hpp"
#include "cota/docalc.hpp"
#include "cota/transport.hpp"

namespace cota {

struct CotaWeights {
    double kappa = 1.0;
    double lambda = 0.0;
    double lambda_prime = 0.0;
    double mu = 0.0;

    void validate() const;  // nonnegative, summing to 1 within 1e-9
};

enum class ConstraintMode { Exact, Approx };
enum class ZSource { Plan, Analytic };

struct SolverConfig {
    int max_outer_iters = 500;
    int max_sinkhorn_iters = 1000;
    double step_scale = 0.5;  // step = step_scale / Lipschitz estimate
    double marginal_tol = 1e-6;
    double objective_tol = 1e-8;
    double epsilon = 5e-3;  // entropic scale of the single-pair baselines
    ConstraintMode mode = ConstraintMode::Exact;
    ZSource z_source = ZSource::Plan;
    DivergenceKind divergence = DivergenceKind::FRO;
    double smoothing = kDefaultSmoothing;
    std::uint64_t seed = 0;

    void validate() const;
};

// One maximal chain: its interventions in ascending order, the pair
// marginals, and the index sets of every consecutive link.
struct ChainProblem {
    std::vector<Eigen::VectorXd> alpha;  // base marginals, length D
    std::vector<Eigen::VectorXd> beta;   // abstracted marginals, length D'
    CostMatrix cost;
    std::vector<IndexSets> links;                   // links[n] relates elements n and n+1
    std::vector<NormalizingVectors> analytic_z;     // per link; empty unless requested

    std::size_t size() const { return alpha.size(); }
};

ChainProblem make_chain_problem(const DiscreteScm& base, const DiscreteScm& abs, const DomainIndex& base_dom,
                                const DomainIndex& abs_dom, const std::vector<Intervention>& base_chain,
                                const std::vector<Intervention>& abs_chain, std::vector<Eigen::VectorXd> alpha,
                                std::vector<Eigen::VectorXd> beta, CostMatrix cost, bool with_analytic_z);

struct ObjectiveTerms {
    double total = 0.0;
    double transport = 0.0;   // sum <C, P_n>
    double delta = 0.0;       // sum of base-side constraint terms (approx mode: element-wise terms)
    double delta_abs = 0.0;   // sum of abstracted-side terms (zero in approx mode)
    double entropy = 0.0;     // sum H(P_n)
};

// Normalizing vectors of every link, from the plans or from the tables.
std::vector<NormalizingVectors> chain_normalizers(const std::vector<TransportPlan>& plans, const ChainProblem& prob,
                                                  ZSource source, double smoothing);

ObjectiveTerms cota_objective(const std::vector<TransportPlan>& plans, const ChainProblem& prob, const CotaWeights& w,
                              ConstraintMode mode, DivergenceKind d, const std::vector<NormalizingVectors>& z);

// Partial derivatives w.r.t. every entry with z frozen. The entropy part
// mu * log P is left at 0 on zero entries.
std::vector<Eigen::MatrixXd> cota_gradient(const std::vector<TransportPlan>& plans, const ChainProblem& prob,
                                           const CotaWeights& w, ConstraintMode mode, DivergenceKind d,
                                           const std::vector<NormalizingVectors>& z);

struct SolveReport {
    ObjectiveTerms terms;
    std::vector<double> trace;  // objective after every accepted outer step, starting at the initial point
    double max_violation = 0.0;
    int iterations = 0;
    bool converged = false;
};

struct CotaResult {
    std::vector<TransportPlan> plans;
    SolveReport report;
};

CotaResult solve_cota(const ChainProblem& prob, const CotaWeights& w, const SolverConfig& cfg);

std::string report_json(const SolveReport& r, int indent = 2);

}  // namespace cota
