#pragma once

#include <vector>

#include <Eigen/Dense>

#include "cota/scm.hpp"

namespace cota {

enum class DivergenceKind { FRO, JSD };

struct IndexSets {
    std::vector<std::size_t> c_base;  // columns compatible with eta
    std::vector<std::size_t> c_abs;   // rows compatible with omega(eta)
    // Parent-configuration code of every column / row; one code per configuration rho.
    std::vector<std::size_t> rho_base, rho_abs;
    std::size_t n_rho_base = 1, n_rho_abs = 1;
    // O / Omega sets per rho.
    std::vector<std::vector<std::size_t>> o_base, o_abs, omega_base, omega_abs;
    bool base_has_parents = false, abs_has_parents = false;
    std::vector<bool> in_c_base, in_c_abs;
};

// B is the set of variables intervened by eta (resp. omega(eta)); PA_B the
// union of their parents minus B. Throws NotComparable unless iota <= eta.
IndexSets compatibility_index_sets(const DomainIndex& base_dom, const DomainIndex& abs_dom,
                                   const DiscreteScm& base, const DiscreteScm& abs, const Intervention& iota,
                                   const Intervention& eta, const Intervention& abs_iota,
                                   const Intervention& abs_eta);

struct NormalizingVectors {
    Eigen::VectorXd z_base;  // length D
    Eigen::VectorXd z_abs;   // length D'
};

constexpr double kDefaultSmoothing = 1e-8;

NormalizingVectors normalizing_vectors(const Eigen::MatrixXd& plan_iota, const IndexSets& sets,
                                       double smoothing = kDefaultSmoothing);

// Closed form from the tables: product over intervened variables of
// P(b_v | parents at x) in the model mutilated by iota.
NormalizingVectors analytic_normalizing_vectors(const DomainIndex& base_dom, const DomainIndex& abs_dom,
                                                const DiscreteScm& base, const DiscreteScm& abs,
                                                const Intervention& iota, const Intervention& eta,
                                                const Intervention& abs_iota, const Intervention& abs_eta);

// FRO on raw vectors; JSD (base 2) after renormalizing both to the simplex.
double bregman_div(DivergenceKind kind, const Eigen::VectorXd& u, const Eigen::VectorXd& v);

// Generalized JSD on nonnegative vectors without renormalization. It matches
// the base-2 JSD on the simplex and stays jointly convex off it.
double generalized_jsd(const Eigen::VectorXd& u, const Eigen::VectorXd& v);

double delta_base(const Eigen::MatrixXd& p_iota, const Eigen::MatrixXd& p_eta, const Eigen::VectorXd& z_base,
                  DivergenceKind d, const IndexSets& sets);
double delta_abs(const Eigen::MatrixXd& p_iota, const Eigen::MatrixXd& p_eta, const Eigen::VectorXd& z_abs,
                 DivergenceKind d, const IndexSets& sets);
double delta_approx(const Eigen::MatrixXd& p_iota, const Eigen::MatrixXd& p_eta, const Eigen::VectorXd& z_base,
                    const Eigen::VectorXd& z_abs, DivergenceKind d, const IndexSets& sets);

// Gradients of the three terms w.r.t. both plans with Z frozen; results are
// accumulated (scaled by weight) into g_iota / g_eta.
void delta_base_grad(const Eigen::MatrixXd& p_iota, const Eigen::MatrixXd& p_eta, const Eigen::VectorXd& z_base,
                     DivergenceKind d, const IndexSets& sets, double weight, Eigen::MatrixXd& g_iota,
                     Eigen::MatrixXd& g_eta);
void delta_abs_grad(const Eigen::MatrixXd& p_iota, const Eigen::MatrixXd& p_eta, const Eigen::VectorXd& z_abs,
                    DivergenceKind d, const IndexSets& sets, double weight, Eigen::MatrixXd& g_iota,
                    Eigen::MatrixXd& g_eta);
void delta_approx_grad(const Eigen::MatrixXd& p_iota, const Eigen::MatrixXd& p_eta, const Eigen::VectorXd& z_base,
                       const Eigen::VectorXd& z_abs, DivergenceKind d, const IndexSets& sets, double weight,
                       Eigen::MatrixXd& g_iota, Eigen::MatrixXd& g_eta);

}  // namespace cota
