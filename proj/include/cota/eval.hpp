#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cota/abstraction.hpp"
#include "cota/cota.hpp"
#include "cota/datasets.hpp"

namespace cota {

enum class Method { CotaPlan, CotaMap, Pwise, Map, Bary };
enum class CostKind { Omega, Hamming };
enum class MetricKind { JSD, WASS };

std::string method_name(Method m);  // "COTA(P)", "COTA(tau)", "Pwise", "Map", "Bary"
Method parse_method(const std::string& s);
std::string cost_name(CostKind c);  // "omega" / "hamming"
CostKind parse_cost(const std::string& s);
std::string divergence_name(DivergenceKind d);
DivergenceKind parse_divergence(const std::string& s);
std::string mode_name(ConstraintMode m);
ConstraintMode parse_mode(const std::string& s);

bool is_cota(Method m);

struct ErrorMetric {
    MetricKind kind = MetricKind::JSD;
    CostMatrix ground;  // abstracted-domain ground cost, used by WASS only

    static ErrorMetric jsd() { return {}; }
    static ErrorMetric wass(CostMatrix ground) { return {MetricKind::WASS, std::move(ground)}; }
};

// D(pushed, target): base-2 JSD, or exact optimal transport cost under the ground metric.
double metric_value(const ErrorMetric& metric, const Eigen::VectorXd& pushed, const Eigen::VectorXd& target);

// sum_k q_k D(tau # base_k, abs_k). Throws DomainMismatch on shape errors.
double abstraction_error(const StochasticMap& tau, const PairSet& pairs, const ErrorMetric& metric,
                         const std::vector<double>& q);
std::vector<double> uniform_weights(std::size_t n);

struct MethodSpec {
    Method method = Method::CotaPlan;
    CostKind cost = CostKind::Omega;
    CotaWeights weights;  // COTA methods only
};

struct ExperimentConfig {
    std::size_t n_base = kDefaultSamples;
    std::size_t n_abs = kDefaultSamples;
    int repetitions = 10;
    std::uint64_t seed = 0;
    SolverConfig solver;
    double bary_epsilon = 0.05;  // entropic scale of the barycenters over the ground metric
    int jobs = 1;
    bool with_wass = true;
};

struct LearnedMap {
    StochasticMap tau;
    std::vector<TransportPlan> plans;
    std::vector<SolveReport> reports;  // one per chain for COTA methods
};

// Learns a map from the pairs whose base intervention index is in `active`.
// Chains and the omega-cost are rebuilt on the active sub-poset.
class FoldLearner {
public:
    FoldLearner(const Scenario& sc, const PairSet& pairs, std::vector<std::size_t> active, CostKind cost,
                bool analytic_z = false);

    LearnedMap learn(const MethodSpec& spec, const SolverConfig& cfg, double bary_epsilon) const;

    const CostMatrix& cost() const { return cost_; }
    const std::vector<Chain>& chains() const { return chains_; }  // indices into the full base set
    const std::vector<ChainProblem>& problems() const { return problems_; }

private:
    const Scenario* sc_;
    const PairSet* pairs_;
    std::vector<std::size_t> active_;
    CostMatrix cost_;
    CostMatrix base_ground_, abs_ground_;
    std::vector<Chain> chains_;
    std::vector<ChainProblem> problems_;
};

LearnedMap learn_map(const Scenario& sc, const PairSet& pairs, const std::vector<std::size_t>& active,
                     const MethodSpec& spec, const SolverConfig& cfg, double bary_epsilon = 0.05);

struct MetricSummary {
    std::vector<std::vector<double>> per_heldout;  // [repetition][held-out index]
    std::vector<double> per_repetition;            // mean over held-out pairs
    double mean = 0.0, std = 0.0, ci_half = 0.0;
};

struct EvalReport {
    MethodSpec spec;
    ConstraintMode mode = ConstraintMode::Exact;
    DivergenceKind divergence = DivergenceKind::FRO;
    int repetitions = 0;
    MetricSummary jsd, wass;
};

EvalReport loo_evaluate(const Scenario& sc, const MethodSpec& spec, const ExperimentConfig& exp);

// Integer-lattice convex combinations of (kappa, lambda, mu) with the given
// step, lambda split evenly between both sides.
std::vector<CotaWeights> default_grid(double step = 0.1);

struct GridResult {
    std::vector<CotaWeights> points;
    std::vector<EvalReport> reports;
    std::size_t best = 0;  // argmin of the mean JSD error
};

GridResult grid_search(const Scenario& sc, const std::vector<CotaWeights>& grid, const MethodSpec& spec,
                       const ExperimentConfig& exp);

// Baseline map learned on every pair of `pairs`.
StochasticMap baseline(Method kind, const Scenario& sc, const PairSet& pairs, CostKind cost,
                       const SolverConfig& cfg, double bary_epsilon = 0.05);

// Downstream regression on EBM-style tables.
struct RegressionRow {
    double control = 0.0, outcome = 0.0;
    int cls = 0;  // index of the abstracted comma-gap class
};

struct RegressionData {
    std::vector<RegressionRow> lrcs, wmg;  // wmg rows already abstracted through tau
};

RegressionData abstract_rows(const Scenario& ebm, const StochasticMap& tau);

// MSE of tasks 1..3 with class k held out.
std::array<double, 3> downstream_task_mse(const RegressionData& data, int k);

struct DownstreamRow {
    std::string train, test;
    double mse_mean = 0.0, mse_std = 0.0;
    double reference_mean = 0.0, reference_std = 0.0;
    std::vector<double> per_class;
};

std::vector<DownstreamRow> downstream_regression(const Scenario& ebm, const StochasticMap& tau);

// Map used for augmentation: COTA(P) on every pair, omega-cost.
StochasticMap downstream_map(const Scenario& ebm, const SolverConfig& cfg);
constexpr CotaWeights kDownstreamWeights{0.2, 0.125, 0.125, 0.55};

void write_eval_csv(const std::filesystem::path& path, const std::vector<EvalReport>& reports);
void write_surface_csv(const std::filesystem::path& path, const GridResult& grid);
void write_downstream_csv(const std::filesystem::path& path, const std::vector<DownstreamRow>& rows);

}  // namespace cota
