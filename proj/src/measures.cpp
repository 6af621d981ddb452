#include "cota/measures.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "cota/csv.hpp"
#include "cota/rng.hpp"

namespace cota {

DomainPtr enumerate_domain(const DiscreteScm& scm, std::size_t cap) {
    return std::make_shared<const DomainIndex>(scm.variables(), cap);
}

EmpiricalMeasure empirical_from_samples(const std::vector<Assignment>& samples, const DomainPtr& domain) {
    if (samples.empty()) throw Error(ErrorKind::EmptyVector, "no samples");
    Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(domain->size()));
    for (const auto& x : samples) w[static_cast<Eigen::Index>(domain->index_of(x))] += 1.0;
    w /= static_cast<double>(samples.size());
    return {domain, w};
}

EmpiricalMeasure to_measure(const Distribution& d) { return {d.domain, d.probs}; }

PairSet build_pairs(const DiscreteScm& base, const DiscreteScm& abs, const InterventionPoset& base_set,
                    const InterventionPoset& abs_set, const OmegaMap& omega, std::size_t n_base,
                    std::size_t n_abs, std::uint64_t seed) {
    validate_omega(omega, base_set, abs_set);
    PairSet ps;
    ps.base_domain = enumerate_domain(base);
    ps.abs_domain = enumerate_domain(abs);
    for (std::size_t k = 0; k < base_set.size(); ++k) {
        DistributionPair p;
        p.intervention = k;
        p.base = empirical_from_samples(sample(base, base_set[k], n_base, derive_seed(seed, k, 0)), ps.base_domain);
        p.abs = empirical_from_samples(sample(abs, abs_set[omega.image[k]], n_abs, derive_seed(seed, k, 1)),
                                       ps.abs_domain);
        ps.pairs.push_back(std::move(p));
    }
    return ps;
}

double total_variation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) throw Error(ErrorKind::LengthMismatch, "total variation of unequal lengths");
    return 0.5 * (a - b).cwiseAbs().sum();
}

void write_samples_csv(const std::filesystem::path& path, const std::vector<VariableSpec>& vars,
                       const std::vector<Assignment>& samples) {
    std::ofstream os(path);
    if (!os) throw Error(ErrorKind::Io, "cannot write " + path.string());
    for (std::size_t v = 0; v < vars.size(); ++v) os << (v ? "," : "") << vars[v].name;
    os << "\n";
    for (const auto& x : samples) {
        for (std::size_t v = 0; v < vars.size(); ++v) os << (v ? "," : "") << vars[v].domain[x[v]];
        os << "\n";
    }
}

std::vector<Assignment> read_samples_csv(const std::filesystem::path& path, const std::vector<VariableSpec>& vars) {
    CsvTable t = read_csv(path);
    std::vector<int> col(vars.size());
    for (std::size_t v = 0; v < vars.size(); ++v) {
        col[v] = t.column(vars[v].name);
        if (col[v] < 0) throw Error(ErrorKind::MissingColumn, path.string() + ": no column '" + vars[v].name + "'");
    }
    std::vector<Assignment> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        Assignment x(vars.size());
        for (std::size_t v = 0; v < vars.size(); ++v) {
            x[v] = find_value(vars[v], t.rows[r][col[v]]);
            if (x[v] < 0)
                throw Error(ErrorKind::SampleOutOfDomain, path.string() + ":" + std::to_string(r + 2) + ": value '" +
                                                              t.rows[r][col[v]] + "' not in domain of '" +
                                                              vars[v].name + "'");
        }
        out.push_back(std::move(x));
    }
    return out;
}

namespace {

void write_measure(const std::filesystem::path& path, const EmpiricalMeasure& m) {
    std::ofstream os(path);
    if (!os) throw Error(ErrorKind::Io, "cannot write " + path.string());
    os.precision(17);
    os << "index,assignment,weight\n";
    for (std::size_t k = 0; k < m.domain->size(); ++k)
        os << k << "," << m.domain->label(k) << "," << m.weights[static_cast<Eigen::Index>(k)] << "\n";
}

}  // namespace

void export_pairs(const std::filesystem::path& dir, const PairSet& pairs, const InterventionPoset& base_set) {
    std::filesystem::create_directories(dir);
    nlohmann::json manifest;
    manifest["base_variables"] = nlohmann::json::array();
    for (const auto& v : pairs.base_domain->variables()) manifest["base_variables"].push_back(v.name);
    manifest["abs_variables"] = nlohmann::json::array();
    for (const auto& v : pairs.abs_domain->variables()) manifest["abs_variables"].push_back(v.name);
    manifest["pairs"] = nlohmann::json::array();
    for (std::size_t k = 0; k < pairs.pairs.size(); ++k) {
        const auto& p = pairs.pairs[k];
        std::string b = "pair_" + std::to_string(k) + "_base.csv", a = "pair_" + std::to_string(k) + "_abs.csv";
        write_measure(dir / b, p.base);
        write_measure(dir / a, p.abs);
        manifest["pairs"].push_back({{"index", k},
                                     {"intervention", to_string(base_set[p.intervention],
                                                                pairs.base_domain->variables())},
                                     {"base", b},
                                     {"abs", a}});
    }
    std::ofstream os(dir / "manifest.json");
    if (!os) throw Error(ErrorKind::Io, "cannot write manifest in " + dir.string());
    os << manifest.dump(2) << "\n";
}

}  // namespace cota
