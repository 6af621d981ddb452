#include "cota/docalc.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace cota {

namespace {

constexpr double kLn2 = 0.69314718055994530942;
constexpr double kTiny = 1e-300;

struct SideSets {
    std::vector<std::size_t> c, rho;
    std::vector<bool> in_c;
    std::vector<std::vector<std::size_t>> o, omega;
    std::size_t n_rho = 1;
    bool has_parents = false;
};

SideSets side_sets(const DomainIndex& dom, const DiscreteScm& scm, const Intervention& eta) {
    const auto& vars = scm.variables();
    std::set<int> b;
    for (const auto& [name, _] : eta.assignments) b.insert(find_variable(vars, name));
    std::set<int> pa;
    for (int v : b)
        for (int p : scm.parent_indices()[v])
            if (!b.count(p)) pa.insert(p);
    SideSets s;
    s.has_parents = !pa.empty();
    for (int p : pa) s.n_rho *= vars[p].domain.size();
    s.rho.resize(dom.size());
    s.in_c.resize(dom.size());
    s.o.resize(s.n_rho);
    s.omega.resize(s.n_rho);
    for (std::size_t j = 0; j < dom.size(); ++j) {
        std::size_t code = 0;
        for (int p : pa) code = code * vars[p].domain.size() + static_cast<std::size_t>(dom.value(j, p));
        s.rho[j] = code;
        s.in_c[j] = is_compatible(dom, j, eta);
        s.o[code].push_back(j);
        if (s.in_c[j]) {
            s.c.push_back(j);
            s.omega[code].push_back(j);
        }
    }
    return s;
}

void require_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error(ErrorKind::ShapeMismatch, "plans differ in shape");
}

Eigen::VectorXd gather(const Eigen::VectorXd& x, const std::vector<std::size_t>& idx) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) out[static_cast<Eigen::Index>(k)] = x[static_cast<Eigen::Index>(idx[k])];
    return out;
}

// d(u, v) restricted to idx where u = marginal of p_eta, v = marginal of p_iota / z.
struct Restricted {
    Eigen::VectorXd u, v;
};

Restricted restrict_marginals(const Eigen::VectorXd& m_iota, const Eigen::VectorXd& m_eta, const Eigen::VectorXd& z,
                              const std::vector<std::size_t>& idx) {
    Restricted r{gather(m_eta, idx), gather(m_iota, idx)};
    for (std::size_t k = 0; k < idx.size(); ++k) r.v[static_cast<Eigen::Index>(k)] /= z[static_cast<Eigen::Index>(idx[k])];
    return r;
}

// Gradient of d(u, v) w.r.t. u and v.
void div_grad(DivergenceKind kind, const Eigen::VectorXd& u, const Eigen::VectorXd& v, Eigen::VectorXd& gu,
              Eigen::VectorXd& gv) {
    const Eigen::Index n = u.size();
    gu.resize(n);
    gv.resize(n);
    if (kind == DivergenceKind::FRO) {
        gu = 2.0 * (u - v);
        gv = -gu;
        return;
    }
    const double su = u.sum(), sv = v.sum();
    if (su <= 0.0 || sv <= 0.0) {
        gu.setZero();
        gv.setZero();
        return;
    }
    Eigen::VectorXd uh = u / su, vh = v / sv, hu(n), hv(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        double m = uh[k] + vh[k];
        hu[k] = m > 0.0 ? std::log(std::max(2.0 * uh[k], kTiny) / m) / (2.0 * kLn2) : 0.0;
        hv[k] = m > 0.0 ? std::log(std::max(2.0 * vh[k], kTiny) / m) / (2.0 * kLn2) : 0.0;
    }
    gu = (hu.array() - hu.dot(uh)) / su;
    gv = (hv.array() - hv.dot(vh)) / sv;
}

double gen_jsd_term(double a, double b) {
    double m = a + b, t = 0.0;
    if (a > 0.0) t += a * std::log(2.0 * a / m);
    if (b > 0.0) t += b * std::log(2.0 * b / m);
    return t / (2.0 * kLn2);
}

}  // namespace

IndexSets compatibility_index_sets(const DomainIndex& base_dom, const DomainIndex& abs_dom, const DiscreteScm& base,
                                   const DiscreteScm& abs, const Intervention& iota, const Intervention& eta,
                                   const Intervention& abs_iota, const Intervention& abs_eta) {
    if (!poset_leq(iota, eta))
        throw Error(ErrorKind::NotComparable, to_string(iota, base.variables()) + " is not below " +
                                                  to_string(eta, base.variables()));
    if (!poset_leq(abs_iota, abs_eta))
        throw Error(ErrorKind::NotComparable, "abstract images are not ordered");
    check_intervention(base.variables(), eta);
    check_intervention(abs.variables(), abs_eta);
    SideSets b = side_sets(base_dom, base, eta), a = side_sets(abs_dom, abs, abs_eta);
    IndexSets s;
    s.c_base = std::move(b.c);
    s.c_abs = std::move(a.c);
    s.rho_base = std::move(b.rho);
    s.rho_abs = std::move(a.rho);
    s.n_rho_base = b.n_rho;
    s.n_rho_abs = a.n_rho;
    s.o_base = std::move(b.o);
    s.o_abs = std::move(a.o);
    s.omega_base = std::move(b.omega);
    s.omega_abs = std::move(a.omega);
    s.base_has_parents = b.has_parents;
    s.abs_has_parents = a.has_parents;
    s.in_c_base = std::move(b.in_c);
    s.in_c_abs = std::move(a.in_c);
    return s;
}

namespace {

Eigen::VectorXd side_z(const Eigen::VectorXd& marg, const std::vector<std::size_t>& c, bool has_parents,
                       const std::vector<std::size_t>& rho, const std::vector<std::vector<std::size_t>>& o,
                       const std::vector<std::vector<std::size_t>>& om, double smoothing) {
    const Eigen::Index n = marg.size();
    if (!has_parents) {
        double s = 0.0;
        for (std::size_t j : c) s += marg[static_cast<Eigen::Index>(j)];
        return Eigen::VectorXd::Constant(n, std::max(s, smoothing));
    }
    std::vector<double> ratio(o.size());
    for (std::size_t r = 0; r < o.size(); ++r) {
        double num = 0.0, den = 0.0;
        for (std::size_t j : om[r]) num += marg[static_cast<Eigen::Index>(j)];
        for (std::size_t j : o[r]) den += marg[static_cast<Eigen::Index>(j)];
        ratio[r] = std::max(num, smoothing) / std::max(den, smoothing);
    }
    Eigen::VectorXd z(n);
    for (Eigen::Index j = 0; j < n; ++j) z[j] = ratio[rho[static_cast<std::size_t>(j)]];
    return z;
}

Eigen::VectorXd side_analytic(const DomainIndex& dom, const DiscreteScm& scm, const Intervention& iota,
                              const Intervention& eta) {
    const auto& vars = scm.variables();
    Eigen::VectorXd z = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(dom.size()));
    for (const auto& [name, val] : eta.assignments) {
        if (iota.assignments.count(name)) continue;
        int v = find_variable(vars, name);
        for (std::size_t j = 0; j < dom.size(); ++j) {
            Assignment x = dom.assignment(j);
            z[static_cast<Eigen::Index>(j)] *= scm.cpt_row(static_cast<std::size_t>(v), x)[val];
        }
    }
    return z;
}

}  // namespace

NormalizingVectors normalizing_vectors(const Eigen::MatrixXd& plan_iota, const IndexSets& sets, double smoothing) {
    if (static_cast<std::size_t>(plan_iota.cols()) != sets.rho_base.size() ||
        static_cast<std::size_t>(plan_iota.rows()) != sets.rho_abs.size())
        throw Error(ErrorKind::ShapeMismatch, "plan shape does not match the index sets");
    Eigen::VectorXd col = plan_iota.colwise().sum().transpose(), row = plan_iota.rowwise().sum();
    return {side_z(col, sets.c_base, sets.base_has_parents, sets.rho_base, sets.o_base, sets.omega_base, smoothing),
            side_z(row, sets.c_abs, sets.abs_has_parents, sets.rho_abs, sets.o_abs, sets.omega_abs, smoothing)};
}

NormalizingVectors analytic_normalizing_vectors(const DomainIndex& base_dom, const DomainIndex& abs_dom,
                                                const DiscreteScm& base, const DiscreteScm& abs,
                                                const Intervention& iota, const Intervention& eta,
                                                const Intervention& abs_iota, const Intervention& abs_eta) {
    return {side_analytic(base_dom, base, iota, eta), side_analytic(abs_dom, abs, abs_iota, abs_eta)};
}

double generalized_jsd(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    if (u.size() != v.size()) throw Error(ErrorKind::LengthMismatch, "divergence of unequal lengths");
    double s = 0.0;
    for (Eigen::Index k = 0; k < u.size(); ++k) s += gen_jsd_term(u[k], v[k]);
    return std::max(s, 0.0);
}

double bregman_div(DivergenceKind kind, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    if (u.size() != v.size()) throw Error(ErrorKind::LengthMismatch, "divergence of unequal lengths");
    if (u.size() == 0) throw Error(ErrorKind::EmptyVector, "divergence of empty vectors");
    if (kind == DivergenceKind::FRO) return (u - v).squaredNorm();
    const double su = u.sum(), sv = v.sum();
    Eigen::VectorXd uh = su > 0.0 ? Eigen::VectorXd(u / su) : Eigen::VectorXd::Zero(u.size());
    Eigen::VectorXd vh = sv > 0.0 ? Eigen::VectorXd(v / sv) : Eigen::VectorXd::Zero(v.size());
    return std::min(1.0, generalized_jsd(uh, vh));
}

double delta_base(const Eigen::MatrixXd& p_iota, const Eigen::MatrixXd& p_eta, const Eigen::VectorXd& z_base,
                  DivergenceKind d, const IndexSets& sets) {
    require_shape(p_iota, p_eta);
    if (sets.c_base.empty()) return 0.0;
    auto r = restrict_marginals(p_iota.colwise().sum().transpose(), p_eta.colwise().sum().transpose(), z_base,
                                sets.c_base);
    return bregman_div(d, r.u, r.v);
}

double delta_abs(const Eigen::MatrixXd& p_iota, const Eigen::MatrixXd& p_eta, const Eigen::VectorXd& z_abs,
                 DivergenceKind d, const IndexSets& sets) {
    require_shape(p_iota, p_eta);
    if (sets.c_abs.empty()) return 0.0;
    auto r = restrict_marginals(p_iota.rowwise().sum(), p_eta.rowwise().sum(), z_abs, sets.c_abs);
    return bregman_div(d, r.u, r.v);
}

double delta_approx(const Eigen::MatrixXd& p_iota, const Eigen::MatrixXd& p_eta, const Eigen::VectorXd& z_base,
                    const Eigen::VectorXd& z_abs, DivergenceKind d, const IndexSets& sets) {
    require_shape(p_iota, p_eta);
    double s = 0.0;
    for (std::size_t i : sets.c_abs)
        for (std::size_t j : sets.c_base) {
            auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
            double a = p_iota(ii, jj) / std::min(z_base[jj], z_abs[ii]), b = p_eta(ii, jj);
            s += d == DivergenceKind::FRO ? (a - b) * (a - b) : gen_jsd_term(a, b);
        }
    return std::max(s, 0.0);
}

void delta_base_grad(const Eigen::MatrixXd& p_iota, const Eigen::MatrixXd& p_eta, const Eigen::VectorXd& z_base,
                     DivergenceKind d, const IndexSets& sets, double weight, Eigen::MatrixXd& g_iota,
                     Eigen::MatrixXd& g_eta) {
    require_shape(p_iota, p_eta);
    if (sets.c_base.empty()) return;
    auto r = restrict_marginals(p_iota.colwise().sum().transpose(), p_eta.colwise().sum().transpose(), z_base,
                                sets.c_base);
    Eigen::VectorXd gu, gv;
    div_grad(d, r.u, r.v, gu, gv);
    for (std::size_t k = 0; k < sets.c_base.size(); ++k) {
        auto j = static_cast<Eigen::Index>(sets.c_base[k]);
        auto kk = static_cast<Eigen::Index>(k);
        g_eta.col(j).array() += weight * gu[kk];
        g_iota.col(j).array() += weight * gv[kk] / z_base[j];
    }
}

void delta_abs_grad(const Eigen::MatrixXd& p_iota, const Eigen::MatrixXd& p_eta, const Eigen::VectorXd& z_abs,
                    DivergenceKind d, const IndexSets& sets, double weight, Eigen::MatrixXd& g_iota,
                    Eigen::MatrixXd& g_eta) {
    require_shape(p_iota, p_eta);
    if (sets.c_abs.empty()) return;
    auto r = restrict_marginals(p_iota.rowwise().sum(), p_eta.rowwise().sum(), z_abs, sets.c_abs);
    Eigen::VectorXd gu, gv;
    div_grad(d, r.u, r.v, gu, gv);
    for (std::size_t k = 0; k < sets.c_abs.size(); ++k) {
        auto i = static_cast<Eigen::Index>(sets.c_abs[k]);
        auto kk = static_cast<Eigen::Index>(k);
        g_eta.row(i).array() += weight * gu[kk];
        g_iota.row(i).array() += weight * gv[kk] / z_abs[i];
    }
}

void delta_approx_grad(const Eigen::MatrixXd& p_iota, const Eigen::MatrixXd& p_eta, const Eigen::VectorXd& z_base,
                       const Eigen::VectorXd& z_abs, DivergenceKind d, const IndexSets& sets, double weight,
                       Eigen::MatrixXd& g_iota, Eigen::MatrixXd& g_eta) {
    require_shape(p_iota, p_eta);
    for (std::size_t i : sets.c_abs)
        for (std::size_t j : sets.c_base) {
            auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
            double phi = std::min(z_base[jj], z_abs[ii]);
            double a = p_iota(ii, jj) / phi, b = p_eta(ii, jj);
            double ga, gb;
            if (d == DivergenceKind::FRO) {
                ga = 2.0 * (a - b);
                gb = -ga;
            } else {
                double m = a + b;
                ga = m > 0.0 ? std::log(std::max(2.0 * a, kTiny) / m) / (2.0 * kLn2) : 0.0;
                gb = m > 0.0 ? std::log(std::max(2.0 * b, kTiny) / m) / (2.0 * kLn2) : 0.0;
            }
            g_iota(ii, jj) += weight * ga / phi;
            g_eta(ii, jj) += weight * gb;
        }
}

}  // namespace cota
