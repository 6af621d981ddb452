#pragma once

#include <vector>

#include <Eigen/Dense>

#include "cota/cost.hpp"
#include "cota/measures.hpp"

namespace cota {

// Rows: abstracted domain (marginal beta); columns: base domain (marginal alpha).
using TransportPlan = Eigen::MatrixXd;

// -sum P (log P - 1) with 0 log 0 = 0.
double entropy(const TransportPlan& p);

// Larger of the two L1 marginal violations.
double marginal_violation(const TransportPlan& p, const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta);

TransportPlan product_coupling(const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta);

// Dual potentials of a log-domain scaling run; reusable as a warm start.
struct ScalingState {
    Eigen::VectorXd f;  // rows
    Eigen::VectorXd g;  // columns
};

struct ScalingResult {
    TransportPlan plan;
    int iterations = 0;
    double violation = 0.0;
    bool converged = false;
};

// KL projection of exp(log_kernel) onto U(alpha, beta) by alternating
// marginal scalings in the log domain. Entries of log_kernel may be -inf.
ScalingResult scale_to_marginals(const Eigen::MatrixXd& log_kernel, const Eigen::VectorXd& alpha,
                                 const Eigen::VectorXd& beta, double tol, int max_iter,
                                 ScalingState* warm = nullptr);

// Entropic OT (<C,P> - eps H(P)). Throws NoConvergence or ZeroMassMarginal.
TransportPlan sinkhorn(const CostMatrix& cost, const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
                       double eps, double tol = 1e-6, int max_iter = 1000);
TransportPlan sinkhorn(const CostMatrix& cost, const EmpiricalMeasure& alpha, const EmpiricalMeasure& beta,
                       double eps, double tol = 1e-6, int max_iter = 1000);

// Exact minimizer of <C,P> over U(alpha, beta) by the simplex method.
TransportPlan exact_transport(const CostMatrix& cost, const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta);

// Same, restricted to small instances (D * D' <= 400) for use as a test oracle.
TransportPlan lp_ot_oracle(const CostMatrix& cost, const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta);

// Fixed-support debiased entropic barycenter by iterative Bregman projections;
// identical inputs are a fixed point. A single input is returned unchanged.
EmpiricalMeasure wasserstein_barycenter(const std::vector<EmpiricalMeasure>& measures, const CostMatrix& ground,
                                        double eps, const std::vector<double>& weights, double tol = 1e-9,
                                        int max_iter = 50000);

}  // namespace cota
