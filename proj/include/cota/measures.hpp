#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cota/scm.hpp"

namespace cota {

using DomainPtr = std::shared_ptr<const DomainIndex>;

struct EmpiricalMeasure {
    DomainPtr domain;
    Eigen::VectorXd weights;
};

struct DistributionPair {
    std::size_t intervention = 0;  // index into the base intervention set
    EmpiricalMeasure base;
    EmpiricalMeasure abs;
};

// One pair per base intervention, in the order of the base intervention set.
struct PairSet {
    DomainPtr base_domain;
    DomainPtr abs_domain;
    std::vector<DistributionPair> pairs;
};

DomainPtr enumerate_domain(const DiscreteScm& scm, std::size_t cap = DomainIndex::kDefaultCap);

EmpiricalMeasure empirical_from_samples(const std::vector<Assignment>& samples, const DomainPtr& domain);
EmpiricalMeasure to_measure(const Distribution& d);

constexpr std::size_t kDefaultSamples = 1000;

PairSet build_pairs(const DiscreteScm& base, const DiscreteScm& abs, const InterventionPoset& base_set,
                    const InterventionPoset& abs_set, const OmegaMap& omega, std::size_t n_base,
                    std::size_t n_abs, std::uint64_t seed);

double total_variation(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Samples CSV: header of variable names, one row of domain labels per sample.
void write_samples_csv(const std::filesystem::path& path, const std::vector<VariableSpec>& vars,
                       const std::vector<Assignment>& samples);
std::vector<Assignment> read_samples_csv(const std::filesystem::path& path, const std::vector<VariableSpec>& vars);

// Writes pair_<k>_base.csv / pair_<k>_abs.csv (index,label,weight) and manifest.json.
void export_pairs(const std::filesystem::path& dir, const PairSet& pairs, const InterventionPoset& base_set);

}  // namespace cota
