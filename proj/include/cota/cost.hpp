#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cota/scm.hpp"

namespace cota {

// Rows index the abstracted domain, columns the base domain.
using CostMatrix = Eigen::MatrixXd;

CostMatrix omega_cost(const DomainIndex& base, const DomainIndex& abs, const InterventionPoset& base_set,
                      const InterventionPoset& abs_set, const OmegaMap& omega);

enum class AlignmentRule { Designated, Majority };

struct HammingAlignment {
    // abstracted variable name -> aligned base variable names (first one is designated)
    std::map<std::string, std::vector<std::string>> aligned;
    AlignmentRule rule = AlignmentRule::Designated;
};

// Values are compared by their domain labels.
CostMatrix hamming_cost(const DomainIndex& base, const DomainIndex& abs, const HammingAlignment& alignment);

// Ground cost between two assignments of the same domain: per variable either
// 0/1 mismatch or absolute index distance for ordinal variables.
CostMatrix ground_cost(const DomainIndex& dom, const std::vector<bool>& ordinal);

void write_cost_csv(const std::filesystem::path& path, const CostMatrix& c);
CostMatrix read_cost_csv(const std::filesystem::path& path);

}  // namespace cota
