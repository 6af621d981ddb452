#include "cota/scm.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

#include "cota/rng.hpp"

namespace cota {

int find_variable(const std::vector<VariableSpec>& vars, const std::string& name) {
    for (std::size_t i = 0; i < vars.size(); ++i)
        if (vars[i].name == name) return static_cast<int>(i);
    return -1;
}

int find_value(const VariableSpec& v, const std::string& label) {
    for (std::size_t i = 0; i < v.domain.size(); ++i)
        if (v.domain[i] == label) return static_cast<int>(i);
    return -1;
}

std::string to_string(const Intervention& iv, const std::vector<VariableSpec>& vars) {
    if (iv.empty()) return "do()";
    std::ostringstream os;
    os << "do(";
    bool first = true;
    for (const auto& [name, val] : iv.assignments) {
        if (!first) os << ",";
        first = false;
        int v = find_variable(vars, name);
        os << name << "=";
        if (v >= 0 && val >= 0 && static_cast<std::size_t>(val) < vars[v].domain.size())
            os << vars[v].domain[val];
        else
            os << "#" << val;
    }
    os << ")";
    return os.str();
}

namespace {

std::vector<std::vector<int>> resolve_parents(const CausalDag& dag) {
    std::vector<std::vector<int>> out(dag.variables.size());
    for (std::size_t v = 0; v < dag.variables.size(); ++v) {
        for (const auto& p : dag.parents[v]) {
            int idx = find_variable(dag.variables, p);
            if (idx < 0)
                throw Error(ErrorKind::UnknownParent,
                            "variable '" + dag.variables[v].name + "' lists unknown parent '" + p + "'");
            out[v].push_back(idx);
        }
    }
    return out;
}

std::vector<int> topological_order(const CausalDag& dag, const std::vector<std::vector<int>>& pa) {
    std::size_t n = dag.variables.size();
    std::vector<int> state(n, 0), order, stack;
    std::function<void(int)> visit = [&](int v) {
        if (state[v] == 2) return;
        if (state[v] == 1) {
            auto it = std::find(stack.begin(), stack.end(), v);
            std::string cyc;
            for (; it != stack.end(); ++it) cyc += dag.variables[*it].name + " <- ";
            cyc += dag.variables[v].name;
            throw Error(ErrorKind::CycleDetected, "cycle " + cyc);
        }
        state[v] = 1;
        stack.push_back(v);
        for (int p : pa[v]) visit(p);
        stack.pop_back();
        state[v] = 2;
        order.push_back(v);
    };
    for (std::size_t v = 0; v < n; ++v) visit(static_cast<int>(v));
    return order;
}

}  // namespace

void validate_dag(const CausalDag& dag) {
    if (dag.parents.size() != dag.variables.size())
        throw Error(ErrorKind::InvalidModel, "parent list count differs from variable count");
    std::set<std::string> names;
    for (const auto& v : dag.variables) {
        if (v.name.empty()) throw Error(ErrorKind::InvalidModel, "empty variable name");
        if (!names.insert(v.name).second)
            throw Error(ErrorKind::InvalidModel, "duplicate variable '" + v.name + "'");
        if (v.domain.empty())
            throw Error(ErrorKind::InvalidModel, "variable '" + v.name + "' has an empty domain");
        std::set<std::string> vals(v.domain.begin(), v.domain.end());
        if (vals.size() != v.domain.size())
            throw Error(ErrorKind::InvalidModel, "variable '" + v.name + "' has duplicate domain values");
    }
    for (std::size_t v = 0; v < dag.variables.size(); ++v) {
        std::set<std::string> ps(dag.parents[v].begin(), dag.parents[v].end());
        if (ps.size() != dag.parents[v].size())
            throw Error(ErrorKind::InvalidModel,
                        "variable '" + dag.variables[v].name + "' has duplicate parents");
    }
    topological_order(dag, resolve_parents(dag));
}

DomainIndex::DomainIndex(std::vector<VariableSpec> vars, std::size_t cap) : vars_(std::move(vars)) {
    radix_.resize(vars_.size());
    stride_.resize(vars_.size());
    for (std::size_t v = vars_.size(); v-- > 0;) {
        radix_[v] = vars_[v].domain.size();
        if (radix_[v] == 0) throw Error(ErrorKind::InvalidModel, "empty domain for '" + vars_[v].name + "'");
        stride_[v] = size_;
        if (size_ > cap / radix_[v])
            throw Error(ErrorKind::DomainTooLarge,
                        "joint domain exceeds the enumeration cap of " + std::to_string(cap));
        size_ *= radix_[v];
    }
}

std::size_t DomainIndex::index_of(const Assignment& x) const {
    if (x.size() != vars_.size())
        throw Error(ErrorKind::SampleOutOfDomain, "assignment has wrong arity");
    std::size_t idx = 0;
    for (std::size_t v = 0; v < vars_.size(); ++v) {
        if (x[v] < 0 || static_cast<std::size_t>(x[v]) >= radix_[v])
            throw Error(ErrorKind::SampleOutOfDomain, "value out of domain for '" + vars_[v].name + "'");
        idx += static_cast<std::size_t>(x[v]) * stride_[v];
    }
    return idx;
}

Assignment DomainIndex::assignment(std::size_t idx) const {
    Assignment x(vars_.size());
    for (std::size_t v = 0; v < vars_.size(); ++v) x[v] = value(idx, v);
    return x;
}

std::string DomainIndex::label(std::size_t idx) const {
    std::string s;
    for (std::size_t v = 0; v < vars_.size(); ++v) {
        if (v) s += "|";
        s += vars_[v].domain[value(idx, v)];
    }
    return s;
}

DiscreteScm::DiscreteScm(CausalDag dag, std::vector<Cpt> cpts) : dag_(std::move(dag)), cpts_(std::move(cpts)) {
    validate_dag(dag_);
    parent_idx_ = resolve_parents(dag_);
    topo_ = topological_order(dag_, parent_idx_);
    if (cpts_.size() != dag_.variables.size())
        throw Error(ErrorKind::InvalidModel, "one table per variable is required");
    for (std::size_t v = 0; v < cpts_.size(); ++v) {
        const auto& var = dag_.variables[v];
        std::size_t rows = 1;
        for (int p : parent_idx_[v]) rows *= dag_.variables[p].domain.size();
        if (cpts_[v].rows.size() != rows)
            throw Error(ErrorKind::InvalidModel, "table of '" + var.name + "' has " +
                                                     std::to_string(cpts_[v].rows.size()) + " rows, expected " +
                                                     std::to_string(rows));
        for (std::size_t r = 0; r < rows; ++r) {
            const auto& row = cpts_[v].rows[r];
            if (row.size() != var.domain.size())
                throw Error(ErrorKind::InvalidModel, "table row of '" + var.name + "' has wrong length");
            double s = 0.0;
            for (double p : row) {
                if (!(p >= 0.0) || !std::isfinite(p))
                    throw Error(ErrorKind::InvalidModel, "negative or non-finite entry in table of '" + var.name + "'");
                s += p;
            }
            if (std::abs(s - 1.0) > 1e-9)
                throw Error(ErrorKind::InvalidModel, "table row of '" + var.name + "' sums to " + std::to_string(s));
        }
    }
}

const std::vector<double>& DiscreteScm::cpt_row(std::size_t v, const Assignment& x) const {
    std::size_t r = 0;
    for (int p : parent_idx_[v]) r = r * dag_.variables[p].domain.size() + static_cast<std::size_t>(x[p]);
    return cpts_[v].rows[r];
}

void check_intervention(const std::vector<VariableSpec>& vars, const Intervention& iv) {
    for (const auto& [name, val] : iv.assignments) {
        int v = find_variable(vars, name);
        if (v < 0) throw Error(ErrorKind::UnknownVariable, "intervention on unknown variable '" + name + "'");
        if (val < 0 || static_cast<std::size_t>(val) >= vars[v].domain.size())
            throw Error(ErrorKind::ValueOutOfDomain, "intervention value out of domain for '" + name + "'");
    }
}

DiscreteScm apply_do(const DiscreteScm& scm, const Intervention& iv) {
    check_intervention(scm.variables(), iv);
    CausalDag dag = scm.dag();
    std::vector<Cpt> cpts = scm.cpts();
    for (const auto& [name, val] : iv.assignments) {
        int v = find_variable(dag.variables, name);
        dag.parents[v].clear();
        std::vector<double> row(dag.variables[v].domain.size(), 0.0);
        row[val] = 1.0;
        cpts[v].rows = {row};
    }
    return DiscreteScm(std::move(dag), std::move(cpts));
}

Distribution exact_distribution(const DiscreteScm& scm, const Intervention& iv, std::size_t cap) {
    DiscreteScm m = apply_do(scm, iv);
    auto dom = std::make_shared<const DomainIndex>(m.variables(), cap);
    Eigen::VectorXd p(dom->size());
    for (std::size_t k = 0; k < dom->size(); ++k) {
        Assignment x = dom->assignment(k);
        double prob = 1.0;
        for (std::size_t v = 0; v < m.num_variables() && prob > 0.0; ++v) prob *= m.cpt_row(v, x)[x[v]];
        p[static_cast<Eigen::Index>(k)] = prob;
    }
    return {dom, p};
}

std::vector<Assignment> sample(const DiscreteScm& scm, const Intervention& iv, std::size_t n,
                               std::uint64_t seed) {
    DiscreteScm m = apply_do(scm, iv);
    Rng rng(seed);
    std::vector<Assignment> out;
    out.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
        Assignment x(m.num_variables(), 0);
        for (int v : m.topo_order()) {
            const auto& row = m.cpt_row(v, x);
            double u = rng.uniform(), acc = 0.0;
            int val = static_cast<int>(row.size()) - 1;
            for (std::size_t k = 0; k < row.size(); ++k) {
                acc += row[k];
                if (u < acc) {
                    val = static_cast<int>(k);
                    break;
                }
            }
            // Guard against rounding landing on a zero-probability tail value.
            while (val > 0 && row[val] == 0.0) --val;
            x[v] = val;
        }
        out.push_back(std::move(x));
    }
    return out;
}

bool is_compatible(const std::vector<VariableSpec>& vars, const Assignment& x, const Intervention& iv) {
    for (const auto& [name, val] : iv.assignments) {
        int v = find_variable(vars, name);
        if (v < 0 || x[v] != val) return false;
    }
    return true;
}

bool is_compatible(const DomainIndex& dom, std::size_t idx, const Intervention& iv) {
    for (const auto& [name, val] : iv.assignments) {
        int v = find_variable(dom.variables(), name);
        if (v < 0 || dom.value(idx, v) != val) return false;
    }
    return true;
}

bool poset_leq(const Intervention& a, const Intervention& b) {
    for (const auto& [name, val] : a.assignments) {
        auto it = b.assignments.find(name);
        if (it == b.assignments.end() || it->second != val) return false;
    }
    return true;
}

std::optional<std::size_t> InterventionPoset::find(const Intervention& iv) const {
    for (std::size_t i = 0; i < interventions.size(); ++i)
        if (interventions[i] == iv) return i;
    return std::nullopt;
}

void validate_poset(const InterventionPoset& poset) {
    std::set<Intervention> seen;
    bool has_null = false;
    for (const auto& iv : poset.interventions) {
        if (!seen.insert(iv).second) throw Error(ErrorKind::InvalidModel, "duplicate intervention in set");
        has_null |= iv.empty();
    }
    if (!has_null) throw Error(ErrorKind::InvalidModel, "intervention set lacks the null intervention");
}

std::vector<Chain> maximal_chains(const InterventionPoset& poset, std::size_t cap) {
    const std::size_t n = poset.size();
    if (n > cap)
        throw Error(ErrorKind::PosetTooLarge,
                    std::to_string(n) + " interventions exceed the cap of " + std::to_string(cap));
    auto lt = [&](std::size_t a, std::size_t b) {
        return a != b && poset_leq(poset[a], poset[b]) && !poset_leq(poset[b], poset[a]);
    };
    // Cover relation of the Hasse diagram; maximal chains are its source-to-sink paths.
    std::vector<std::vector<std::size_t>> covers(n);
    std::vector<bool> has_lower(n, false);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            if (!lt(a, b)) continue;
            has_lower[b] = true;
            bool direct = true;
            for (std::size_t c = 0; c < n && direct; ++c)
                if (lt(a, c) && lt(c, b)) direct = false;
            if (direct) covers[a].push_back(b);
        }
    std::vector<Chain> out;
    Chain path;
    std::function<void(std::size_t)> dfs = [&](std::size_t v) {
        path.push_back(v);
        if (covers[v].empty())
            out.push_back(path);
        else
            for (std::size_t w : covers[v]) dfs(w);
        path.pop_back();
    };
    for (std::size_t v = 0; v < n; ++v)
        if (!has_lower[v]) dfs(v);
    return out;
}

void validate_omega(const OmegaMap& omega, const InterventionPoset& base, const InterventionPoset& abs) {
    if (omega.image.size() != base.size())
        throw Error(ErrorKind::NotTotal, "omega defines " + std::to_string(omega.image.size()) +
                                             " images for " + std::to_string(base.size()) + " interventions");
    for (std::size_t k = 0; k < base.size(); ++k)
        if (omega.image[k] == OmegaMap::kNoImage || omega.image[k] >= abs.size())
            throw Error(ErrorKind::NotTotal, "intervention #" + std::to_string(k) + " has no valid image");
    std::vector<bool> hit(abs.size(), false);
    for (std::size_t t : omega.image) hit[t] = true;
    for (std::size_t t = 0; t < abs.size(); ++t)
        if (!hit[t])
            throw Error(ErrorKind::NotSurjective,
                        "abstract intervention #" + std::to_string(t) + " has no preimage");
    for (std::size_t a = 0; a < base.size(); ++a)
        for (std::size_t b = 0; b < base.size(); ++b)
            if (poset_leq(base[a], base[b]) && !poset_leq(abs[omega.image[a]], abs[omega.image[b]]))
                throw OrderViolation(a, b,
                            "interventions #" + std::to_string(a) + " <= #" + std::to_string(b) +
                                " but their images are not ordered");
}

}  // namespace cota
