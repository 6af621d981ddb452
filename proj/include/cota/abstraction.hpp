#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cota/measures.hpp"
#include "cota/transport.hpp"

namespace cota {

// D' x D; column j is a distribution over abstracted values given base value j.
using StochasticMap = Eigen::MatrixXd;

enum class AggregationMode { PlanAverage, MapAverage };

StochasticMap plan_to_map(const TransportPlan& p);

// PlanAverage normalizes the mean plan. MapAverage averages, per column, the
// maps of the plans that carry mass on that column; a column no plan covers
// falls back to uniform.
StochasticMap aggregate(const std::vector<TransportPlan>& plans, AggregationMode mode);

Eigen::VectorXd pushforward(const StochasticMap& tau, const Eigen::VectorXd& m);
EmpiricalMeasure pushforward(const StochasticMap& tau, const EmpiricalMeasure& m, const DomainPtr& abs_domain);

bool is_column_stochastic(const StochasticMap& tau, double tol = 1e-9);

// Rows are base assignments, columns abstracted assignments.
void write_map_csv(const std::filesystem::path& path, const StochasticMap& tau, const DomainIndex& base,
                   const DomainIndex& abs);
void write_plan_csv(const std::filesystem::path& path, const TransportPlan& p);

}  // namespace cota
