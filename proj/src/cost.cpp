#include "cota/cost.hpp"

#include <fstream>
#include <sstream>

#include "cota/csv.hpp"

namespace cota {

CostMatrix omega_cost(const DomainIndex& base, const DomainIndex& abs, const InterventionPoset& base_set,
                      const InterventionPoset& abs_set, const OmegaMap& omega) {
    validate_omega(omega, base_set, abs_set);
    const auto D = static_cast<Eigen::Index>(base.size()), Dp = static_cast<Eigen::Index>(abs.size());
    CostMatrix c = CostMatrix::Constant(Dp, D, static_cast<double>(base_set.size()));
    std::vector<char> col(base.size()), row(abs.size());
    for (std::size_t k = 0; k < base_set.size(); ++k) {
        for (std::size_t j = 0; j < base.size(); ++j) col[j] = is_compatible(base, j, base_set[k]);
        for (std::size_t i = 0; i < abs.size(); ++i) row[i] = is_compatible(abs, i, abs_set[omega.image[k]]);
        for (Eigen::Index i = 0; i < Dp; ++i)
            if (row[i])
                for (Eigen::Index j = 0; j < D; ++j)
                    if (col[j]) c(i, j) -= 1.0;
    }
    return c;
}

CostMatrix hamming_cost(const DomainIndex& base, const DomainIndex& abs, const HammingAlignment& alignment) {
    const auto& bv = base.variables();
    const auto& av = abs.variables();
    std::vector<std::vector<int>> aligned(av.size());
    for (std::size_t a = 0; a < av.size(); ++a) {
        auto it = alignment.aligned.find(av[a].name);
        if (it == alignment.aligned.end() || it->second.empty())
            throw Error(ErrorKind::InvalidAlignment, "abstracted variable '" + av[a].name + "' is not aligned");
        for (const auto& name : it->second) {
            int b = find_variable(bv, name);
            if (b < 0) throw Error(ErrorKind::InvalidAlignment, "aligned base variable '" + name + "' does not exist");
            aligned[a].push_back(b);
        }
    }
    for (const auto& [name, _] : alignment.aligned)
        if (find_variable(av, name) < 0)
            throw Error(ErrorKind::InvalidAlignment, "alignment names unknown abstracted variable '" + name + "'");

    CostMatrix c(static_cast<Eigen::Index>(abs.size()), static_cast<Eigen::Index>(base.size()));
    for (std::size_t j = 0; j < base.size(); ++j) {
        // Compared base label per abstracted variable.
        std::vector<const std::string*> target(av.size());
        for (std::size_t a = 0; a < av.size(); ++a) {
            const auto& ids = aligned[a];
            target[a] = &bv[ids[0]].domain[base.value(j, ids[0])];
            if (alignment.rule == AlignmentRule::Majority && ids.size() > 1) {
                std::size_t best = 0;
                for (int b : ids) {
                    const std::string& lab = bv[b].domain[base.value(j, b)];
                    std::size_t cnt = 0;
                    for (int b2 : ids) cnt += bv[b2].domain[base.value(j, b2)] == lab;
                    // Ties keep the earlier (designated-first) label.
                    if (cnt > best) {
                        best = cnt;
                        target[a] = &lab;
                    }
                }
            }
        }
        for (std::size_t i = 0; i < abs.size(); ++i) {
            double d = 0.0;
            for (std::size_t a = 0; a < av.size(); ++a) d += av[a].domain[abs.value(i, a)] != *target[a];
            c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d;
        }
    }
    return c;
}

CostMatrix ground_cost(const DomainIndex& dom, const std::vector<bool>& ordinal) {
    const std::size_t n = dom.size(), nv = dom.variables().size();
    if (ordinal.size() != nv) throw Error(ErrorKind::LengthMismatch, "ordinal flags do not match variables");
    CostMatrix c(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            double d = 0.0;
            for (std::size_t v = 0; v < nv; ++v) {
                int x = dom.value(a, v), y = dom.value(b, v);
                d += ordinal[v] ? std::abs(x - y) : (x != y);
            }
            c(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = d;
        }
    return c;
}

void write_cost_csv(const std::filesystem::path& path, const CostMatrix& c) {
    std::ofstream os(path);
    if (!os) throw Error(ErrorKind::Io, "cannot write " + path.string());
    os.precision(17);
    for (Eigen::Index j = 0; j < c.cols(); ++j) os << (j ? "," : "") << j;
    os << "\n";
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
        for (Eigen::Index j = 0; j < c.cols(); ++j) os << (j ? "," : "") << c(i, j);
        os << "\n";
    }
}

CostMatrix read_cost_csv(const std::filesystem::path& path) {
    CsvTable t = read_csv(path);
    CostMatrix c(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.header.size()));
    for (std::size_t i = 0; i < t.rows.size(); ++i)
        for (std::size_t j = 0; j < t.header.size(); ++j) {
            double v = parse_double(t.rows[i][j], path.string() + ":" + std::to_string(i + 2));
            if (v < 0.0) throw Error(ErrorKind::InvalidModel, path.string() + ": negative cost entry");
            c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        }
    return c;
}

}  // namespace cota
