#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cota/rng.hpp"
#include "cota/scm.hpp"
#include "cota/transport.hpp"

namespace testing {

inline cota::VariableSpec binary(const std::string& name) { return {name, {"0", "1"}}; }

// Smoking -> Tar -> Cancer chain with the given probabilities of the value 1.
inline cota::DiscreteScm stc_chain(double p_s1, double t_s0, double t_s1, double c_t0, double c_t1) {
    cota::CausalDag dag{{binary("S"), binary("T"), binary("C")}, {{}, {"S"}, {"T"}}};
    std::vector<cota::Cpt> cpts = {
        {{{1 - p_s1, p_s1}}},
        {{{1 - t_s0, t_s0}, {1 - t_s1, t_s1}}},
        {{{1 - c_t0, c_t0}, {1 - c_t1, c_t1}}},
    };
    return cota::DiscreteScm(dag, cpts);
}

inline cota::Intervention iv(const std::vector<std::pair<std::string, int>>& kv) {
    cota::Intervention out;
    for (const auto& [k, v] : kv) out.assignments[k] = v;
    return out;
}

inline Eigen::VectorXd random_simplex(cota::Rng& rng, Eigen::Index n, double floor = 0.0) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = floor + rng.uniform();
    return v / v.sum();
}

inline Eigen::MatrixXd random_positive(cota::Rng& rng, Eigen::Index r, Eigen::Index c) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = 0.05 + rng.uniform();
    return m;
}

// Random interior point of U(alpha, beta): a positive kernel scaled onto the marginals.
inline Eigen::MatrixXd random_feasible(cota::Rng& rng, const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta) {
    Eigen::MatrixXd k = random_positive(rng, beta.size(), alpha.size());
    auto r = cota::scale_to_marginals(k.array().log().matrix(), alpha, beta, 1e-13, 100000);
    return r.plan;
}

// Central finite-difference derivative of f along entry (i, j) of the k-th matrix.
inline double central_difference(const std::function<double(const std::vector<Eigen::MatrixXd>&)>& f,
                                  std::vector<Eigen::MatrixXd> x, std::size_t k, Eigen::Index i, Eigen::Index j,
                                  double h) {
    const double x0 = x[k](i, j);
    x[k](i, j) = x0 + h;
    const double up = f(x);
    x[k](i, j) = x0 - h;
    const double down = f(x);
    return (up - down) / (2 * h);
}

}  // namespace testing
