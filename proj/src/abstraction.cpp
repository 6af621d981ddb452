#include "cota/abstraction.hpp"

#include <cmath>
#include <fstream>

namespace cota {

StochasticMap plan_to_map(const TransportPlan& p) {
    StochasticMap tau(p.rows(), p.cols());
    const double uniform = 1.0 / static_cast<double>(p.rows());
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
        double s = p.col(j).sum();
        if (s > 0.0)
            tau.col(j) = p.col(j) / s;
        else
            tau.col(j).setConstant(uniform);
    }
    return tau;
}

StochasticMap aggregate(const std::vector<TransportPlan>& plans, AggregationMode mode) {
    if (plans.empty()) throw Error(ErrorKind::EmptyList, "no plans to aggregate");
    for (const auto& p : plans)
        if (p.rows() != plans[0].rows() || p.cols() != plans[0].cols())
            throw Error(ErrorKind::ShapeMismatch, "plans differ in shape");
    const Eigen::Index rows = plans[0].rows(), cols = plans[0].cols();
    if (mode == AggregationMode::PlanAverage) {
        Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(rows, cols);
        for (const auto& p : plans) mean += p;
        mean /= static_cast<double>(plans.size());
        return plan_to_map(mean);
    }
    StochasticMap tau = Eigen::MatrixXd::Zero(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        int used = 0;
        for (const auto& p : plans) {
            double s = p.col(j).sum();
            if (s <= 0.0) continue;
            tau.col(j) += p.col(j) / s;
            ++used;
        }
        if (used)
            tau.col(j) /= static_cast<double>(used);
        else
            tau.col(j).setConstant(1.0 / static_cast<double>(rows));
    }
    if (!is_column_stochastic(tau, 1e-9)) throw Error(ErrorKind::ShapeMismatch, "aggregated map is not stochastic");
    return tau;
}

Eigen::VectorXd pushforward(const StochasticMap& tau, const Eigen::VectorXd& m) {
    if (tau.cols() != m.size()) throw Error(ErrorKind::DomainMismatch, "map and measure live on different domains");
    return tau * m;
}

EmpiricalMeasure pushforward(const StochasticMap& tau, const EmpiricalMeasure& m, const DomainPtr& abs_domain) {
    if (static_cast<std::size_t>(tau.rows()) != abs_domain->size())
        throw Error(ErrorKind::DomainMismatch, "map rows differ from the abstracted domain");
    return {abs_domain, pushforward(tau, m.weights)};
}

bool is_column_stochastic(const StochasticMap& tau, double tol) {
    if ((tau.array() < 0.0).any()) return false;
    for (Eigen::Index j = 0; j < tau.cols(); ++j)
        if (std::abs(tau.col(j).sum() - 1.0) > tol) return false;
    return true;
}

void write_map_csv(const std::filesystem::path& path, const StochasticMap& tau, const DomainIndex& base,
                   const DomainIndex& abs) {
    std::ofstream os(path);
    if (!os) throw Error(ErrorKind::Io, "cannot write " + path.string());
    os.precision(17);
    os << "base";
    for (std::size_t i = 0; i < abs.size(); ++i) os << "," << abs.label(i);
    os << "\n";
    for (Eigen::Index j = 0; j < tau.cols(); ++j) {
        os << base.label(static_cast<std::size_t>(j));
        for (Eigen::Index i = 0; i < tau.rows(); ++i) os << "," << tau(i, j);
        os << "\n";
    }
}

void write_plan_csv(const std::filesystem::path& path, const TransportPlan& p) {
    std::ofstream os(path);
    if (!os) throw Error(ErrorKind::Io, "cannot write " + path.string());
    os.precision(17);
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        for (Eigen::Index j = 0; j < p.cols(); ++j) os << (j ? "," : "") << p(i, j);
        os << "\n";
    }
}

}  // namespace cota
