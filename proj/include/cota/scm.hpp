#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cota/error.hpp"

namespace cota {

struct VariableSpec {
    std::string name;
    std::vector<std::string> domain;
};

// A full assignment: one domain index per variable, in model variable order.
using Assignment = std::vector<int>;

struct CausalDag {
    std::vector<VariableSpec> variables;
    std::vector<std::vector<std::string>> parents;  // per variable, by name
};

// Throws CycleDetected / UnknownParent / InvalidModel.
void validate_dag(const CausalDag& dag);

int find_variable(const std::vector<VariableSpec>& vars, const std::string& name);
int find_value(const VariableSpec& v, const std::string& label);

// Conditional table: rows indexed by the mixed-radix code of the parent
// values (first parent most significant), each row a distribution.
struct Cpt {
    std::vector<std::vector<double>> rows;
};

// do-assignment as variable name -> value index. Empty map is the null intervention.
struct Intervention {
    std::map<std::string, int> assignments;

    bool empty() const { return assignments.empty(); }
    bool operator==(const Intervention& o) const { return assignments == o.assignments; }
    bool operator<(const Intervention& o) const { return assignments < o.assignments; }
};

std::string to_string(const Intervention& iv, const std::vector<VariableSpec>& vars);

// Enumerates the joint domain lexicographically: variable order, then domain
// order, last variable fastest.
class DomainIndex {
public:
    static constexpr std::size_t kDefaultCap = 1000000;

    explicit DomainIndex(std::vector<VariableSpec> vars, std::size_t cap = kDefaultCap);

    std::size_t size() const { return size_; }
    const std::vector<VariableSpec>& variables() const { return vars_; }
    std::size_t index_of(const Assignment& x) const;
    Assignment assignment(std::size_t idx) const;
    int value(std::size_t idx, std::size_t var) const {
        return static_cast<int>((idx / stride_[var]) % radix_[var]);
    }
    std::string label(std::size_t idx) const;

private:
    std::vector<VariableSpec> vars_;
    std::vector<std::size_t> radix_, stride_;
    std::size_t size_ = 1;
};

class DiscreteScm {
public:
    DiscreteScm(CausalDag dag, std::vector<Cpt> cpts);

    const CausalDag& dag() const { return dag_; }
    const std::vector<VariableSpec>& variables() const { return dag_.variables; }
    const std::vector<Cpt>& cpts() const { return cpts_; }
    const std::vector<std::vector<int>>& parent_indices() const { return parent_idx_; }
    const std::vector<int>& topo_order() const { return topo_; }
    std::size_t num_variables() const { return dag_.variables.size(); }

    // Row of variable v's table selected by the parent values inside x.
    const std::vector<double>& cpt_row(std::size_t v, const Assignment& x) const;

private:
    CausalDag dag_;
    std::vector<Cpt> cpts_;
    std::vector<std::vector<int>> parent_idx_;
    std::vector<int> topo_;
};

struct Distribution {
    std::shared_ptr<const DomainIndex> domain;
    Eigen::VectorXd probs;
};

void check_intervention(const std::vector<VariableSpec>& vars, const Intervention& iv);
DiscreteScm apply_do(const DiscreteScm& scm, const Intervention& iv);
Distribution exact_distribution(const DiscreteScm& scm, const Intervention& iv,
                                std::size_t cap = DomainIndex::kDefaultCap);
std::vector<Assignment> sample(const DiscreteScm& scm, const Intervention& iv, std::size_t n,
                               std::uint64_t seed);

bool is_compatible(const std::vector<VariableSpec>& vars, const Assignment& x,
                   const Intervention& iv);
bool is_compatible(const DomainIndex& dom, std::size_t idx, const Intervention& iv);

bool poset_leq(const Intervention& a, const Intervention& b);

struct InterventionPoset {
    std::vector<Intervention> interventions;

    std::size_t size() const { return interventions.size(); }
    const Intervention& operator[](std::size_t i) const { return interventions[i]; }
    std::optional<std::size_t> find(const Intervention& iv) const;
};

// Throws InvalidModel for duplicates or a missing null intervention.
void validate_poset(const InterventionPoset& poset);

using Chain = std::vector<std::size_t>;  // indices into the poset, ascending order

constexpr std::size_t kDefaultPosetCap = 64;
std::vector<Chain> maximal_chains(const InterventionPoset& poset,
                                  std::size_t cap = kDefaultPosetCap);

// image[k] = index into I' of the image of I[k]; kNoImage marks a missing image.
struct OmegaMap {
    static constexpr std::size_t kNoImage = static_cast<std::size_t>(-1);
    std::vector<std::size_t> image;
};

class OrderViolation : public Error {
public:
    OrderViolation(std::size_t lower, std::size_t upper, const std::string& msg)
        : Error(ErrorKind::NotOrderPreserving, msg), lower(lower), upper(upper) {}
    std::size_t lower, upper;  // base indices with I[lower] <= I[upper]
};

// Throws NotTotal / NotSurjective, or OrderViolation carrying the witness pair.
void validate_omega(const OmegaMap& omega, const InterventionPoset& base,
                    const InterventionPoset& abs);

}  // namespace cota
