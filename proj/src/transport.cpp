#include "cota/transport.hpp"

#include <cmath>
#include <limits>

namespace cota {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_or_neginf(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

template <class Vec>
double logsumexp(const Vec& v) {
    double m = kNegInf;
    for (Eigen::Index k = 0; k < v.size(); ++k) m = std::max(m, static_cast<double>(v[k]));
    if (m == kNegInf) return kNegInf;
    double s = 0.0;
    for (Eigen::Index k = 0; k < v.size(); ++k) s += std::exp(v[k] - m);
    return m + std::log(s);
}

void check_marginals(const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta) {
    if ((alpha.array() < 0.0).any() || (beta.array() < 0.0).any())
        throw Error(ErrorKind::InvalidModel, "negative marginal weight");
    if (alpha.sum() <= 0.0 || beta.sum() <= 0.0) throw Error(ErrorKind::ZeroMassMarginal, "marginal has no mass");
}

}  // namespace

double entropy(const TransportPlan& p) {
    double h = 0.0;
    for (Eigen::Index j = 0; j < p.cols(); ++j)
        for (Eigen::Index i = 0; i < p.rows(); ++i) {
            double x = p(i, j);
            if (x > 0.0) h -= x * (std::log(x) - 1.0);
        }
    return h;
}

double marginal_violation(const TransportPlan& p, const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta) {
    double vc = (p.colwise().sum().transpose() - alpha).cwiseAbs().sum();
    double vr = (p.rowwise().sum() - beta).cwiseAbs().sum();
    return std::max(vc, vr);
}

TransportPlan product_coupling(const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta) {
    return beta * alpha.transpose();
}

namespace {

Eigen::MatrixXd plan_from_potentials(const Eigen::MatrixXd& log_kernel, const Eigen::VectorXd& f,
                                     const Eigen::VectorXd& g) {
    Eigen::MatrixXd p(log_kernel.rows(), log_kernel.cols());
    for (Eigen::Index j = 0; j < p.cols(); ++j)
        for (Eigen::Index i = 0; i < p.rows(); ++i) {
            double e = log_kernel(i, j) + f[i] + g[j];
            p(i, j) = (e == kNegInf || std::isnan(e)) ? 0.0 : std::exp(e);
        }
    return p;
}

double l1_residual(const Eigen::MatrixXd& p, const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta) {
    return (p.colwise().sum().transpose() - alpha).cwiseAbs().sum() + (p.rowwise().sum() - beta).cwiseAbs().sum();
}

// Damped Newton steps on the dual of the KL projection,
//   max <beta, f> + <alpha, g> - sum exp(L + f + g),
// over the rows and columns carrying mass; one column potential is pinned to
// remove the shift invariance. Stops at tolerance, on budget, or when no step
// improves the dual.
int newton_polish(const Eigen::MatrixXd& log_kernel, const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta,
                  Eigen::VectorXd& f, Eigen::VectorXd& g, double tol, int budget) {
    std::vector<Eigen::Index> rows, cols;
    for (Eigen::Index i = 0; i < beta.size(); ++i)
        if (beta[i] > 0.0) rows.push_back(i);
    for (Eigen::Index j = 0; j < alpha.size(); ++j)
        if (alpha[j] > 0.0) cols.push_back(j);
    const Eigen::Index nr = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index nc = static_cast<Eigen::Index>(cols.size()) - 1;  // last active column pinned
    const Eigen::Index dim = nr + nc;
    if (dim <= 0) return 0;

    auto dual = [&](const Eigen::VectorXd& ff, const Eigen::VectorXd& gg, const Eigen::MatrixXd& p) {
        double v = -p.sum();
        for (auto i : rows) v += beta[i] * ff[i];
        for (auto j : cols) v += alpha[j] * gg[j];
        return v;
    };

    Eigen::MatrixXd p = plan_from_potentials(log_kernel, f, g);
    double phi = dual(f, g, p);
    int used = 0;
    while (used < budget) {
        Eigen::VectorXd r = p.rowwise().sum(), c = p.colwise().sum().transpose();
        if (std::max((r - beta).cwiseAbs().sum(), (c - alpha).cwiseAbs().sum()) <= tol) break;
        Eigen::VectorXd grad(dim);
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
        for (Eigen::Index a = 0; a < nr; ++a) {
            grad[a] = beta[rows[a]] - r[rows[a]];
            h(a, a) = r[rows[a]];
        }
        for (Eigen::Index b = 0; b < nc; ++b) {
            grad[nr + b] = alpha[cols[b]] - c[cols[b]];
            h(nr + b, nr + b) = c[cols[b]];
            for (Eigen::Index a = 0; a < nr; ++a) h(a, nr + b) = h(nr + b, a) = p(rows[a], cols[b]);
        }
        h.diagonal().array() += 1e-14 * h.diagonal().maxCoeff();
        Eigen::VectorXd d = h.ldlt().solve(grad);
        if (!d.allFinite()) break;
        const double slope = grad.dot(d);
        bool accepted = false;
        for (double t = 1.0; t > 1e-10; t *= 0.5) {
            Eigen::VectorXd f2 = f, g2 = g;
            for (Eigen::Index a = 0; a < nr; ++a) f2[rows[a]] += t * d[a];
            for (Eigen::Index b = 0; b < nc; ++b) g2[cols[b]] += t * d[nr + b];
            Eigen::MatrixXd p2 = plan_from_potentials(log_kernel, f2, g2);
            if (!p2.allFinite()) continue;
            double phi2 = dual(f2, g2, p2);
            if (phi2 >= phi + 1e-4 * t * slope - 1e-15 * (1.0 + std::abs(phi))) {
                f = std::move(f2);
                g = std::move(g2);
                p = std::move(p2);
                phi = phi2;
                accepted = true;
                break;
            }
        }
        ++used;
        if (!accepted) break;
    }
    return used;
}

}  // namespace

ScalingResult scale_to_marginals(const Eigen::MatrixXd& log_kernel, const Eigen::VectorXd& alpha,
                                 const Eigen::VectorXd& beta, double tol, int max_iter, ScalingState* warm) {
    const Eigen::Index n = log_kernel.rows(), m = log_kernel.cols();
    if (alpha.size() != m || beta.size() != n)
        throw Error(ErrorKind::ShapeMismatch, "kernel shape does not match the marginals");
    check_marginals(alpha, beta);
    Eigen::VectorXd la(m), lb(n);
    for (Eigen::Index j = 0; j < m; ++j) la[j] = log_or_neginf(alpha[j]);
    for (Eigen::Index i = 0; i < n; ++i) lb[i] = log_or_neginf(beta[i]);

    Eigen::VectorXd f = Eigen::VectorXd::Zero(n), g = Eigen::VectorXd::Zero(m);
    if (warm && warm->f.size() == n && warm->g.size() == m) {
        f = warm->f;
        g = warm->g;
    }
    for (Eigen::Index i = 0; i < n; ++i)
        if (lb[i] == kNegInf || !std::isfinite(f[i])) f[i] = lb[i] == kNegInf ? kNegInf : 0.0;
    for (Eigen::Index j = 0; j < m; ++j)
        if (la[j] == kNegInf || !std::isfinite(g[j])) g[j] = la[j] == kNegInf ? kNegInf : 0.0;

    Eigen::VectorXd tmp;
    // Row scaling, then column scaling; columns are exact after each sweep.
    auto sweep = [&] {
        for (Eigen::Index i = 0; i < n; ++i) {
            if (lb[i] == kNegInf) continue;
            tmp = log_kernel.row(i).transpose() + g;
            double l = logsumexp(tmp);
            f[i] = l == kNegInf ? 0.0 : lb[i] - l;
        }
        for (Eigen::Index j = 0; j < m; ++j) {
            if (la[j] == kNegInf) continue;
            tmp = log_kernel.col(j) + f;
            double l = logsumexp(tmp);
            g[j] = l == kNegInf ? 0.0 : la[j] - l;
        }
    };
    auto row_violation = [&] {
        double viol = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double s = 0.0;
            for (Eigen::Index j = 0; j < m; ++j) {
                double e = log_kernel(i, j) + f[i] + g[j];
                if (e != kNegInf && !std::isnan(e)) s += std::exp(e);
            }
            viol += std::abs(s - beta[i]);
        }
        return viol;
    };

    // Plain sweeps first; badly conditioned kernels (small entropic scale,
    // tied costs) contract very slowly, so a stalled run switches to Newton.
    constexpr int kSweepsBeforeNewton = 50;
    ScalingResult res;
    int it = 0;
    bool done = false;
    int since_newton = 0;
    while (it < max_iter && !done) {
        sweep();
        ++it;
        done = row_violation() <= tol;
        if (!done && ++since_newton >= kSweepsBeforeNewton) {
            since_newton = 0;
            it += newton_polish(log_kernel, alpha, beta, f, g, tol, max_iter - it);
            done = l1_residual(plan_from_potentials(log_kernel, f, g), alpha, beta) <= tol;
        }
    }
    res.iterations = it;
    res.plan = plan_from_potentials(log_kernel, f, g);
    res.violation = marginal_violation(res.plan, alpha, beta);
    res.converged = res.violation <= tol;
    if (warm) {
        warm->f = f;
        warm->g = g;
    }
    return res;
}

TransportPlan sinkhorn(const CostMatrix& cost, const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta, double eps,
                       double tol, int max_iter) {
    if (!(eps > 0.0)) throw Error(ErrorKind::InvalidConfig, "entropic scale must be positive");
    if (cost.cols() != alpha.size() || cost.rows() != beta.size())
        throw Error(ErrorKind::ShapeMismatch, "cost shape does not match the marginals");
    // Anneal eps from the cost range down, carrying the dual potentials
    // (f * eps is invariant) so the final stage starts near its fixed point.
    const double range = cost.size() ? cost.maxCoeff() - cost.minCoeff() : 0.0;
    std::vector<double> schedule;
    for (double e = range; e > eps; e *= 0.5) schedule.push_back(e);
    schedule.push_back(eps);
    ScalingState state;
    ScalingResult r;
    double prev = schedule.front();
    for (std::size_t s = 0; s < schedule.size(); ++s) {
        const double e = schedule[s];
        if (state.f.size()) {
            state.f *= prev / e;
            state.g *= prev / e;
        }
        const bool last = s + 1 == schedule.size();
        r = scale_to_marginals(-cost / e, alpha, beta, last ? tol : std::max(tol, 1e-3), max_iter, &state);
        prev = e;
    }
    if (!r.converged)
        throw Error(ErrorKind::NoConvergence, "sinkhorn stopped at " + std::to_string(max_iter) +
                                                  " iterations with violation " + std::to_string(r.violation));
    return r.plan;
}

TransportPlan sinkhorn(const CostMatrix& cost, const EmpiricalMeasure& alpha, const EmpiricalMeasure& beta, double eps,
                       double tol, int max_iter) {
    return sinkhorn(cost, alpha.weights, beta.weights, eps, tol, max_iter);
}

namespace {

// Two-phase tableau simplex with Bland's rule for min c'x, Ax = b, x >= 0, b >= 0.
Eigen::VectorXd simplex_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& b, const Eigen::VectorXd& c) {
    const Eigen::Index m = A.rows(), n = A.cols();
    const double tol = 1e-12;
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m + 1, n + m + 1);
    T.topLeftCorner(m, n) = A;
    T.block(0, n, m, m).setIdentity();
    T.col(n + m).head(m) = b;
    std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = n + i;

    auto pivot = [&](Eigen::Index r, Eigen::Index col) {
        T.row(r) /= T(r, col);
        for (Eigen::Index i = 0; i <= m; ++i)
            if (i != r && T(i, col) != 0.0) T.row(i) -= T(i, col) * T.row(r);
        basis[static_cast<std::size_t>(r)] = col;
    };
    auto run = [&](Eigen::Index ncols) {
        for (;;) {
            Eigen::Index enter = -1;
            for (Eigen::Index j = 0; j < ncols; ++j)
                if (T(m, j) < -tol) {
                    enter = j;
                    break;
                }
            if (enter < 0) return;
            Eigen::Index leave = -1;
            double best = std::numeric_limits<double>::infinity();
            for (Eigen::Index i = 0; i < m; ++i) {
                if (T(i, enter) <= tol) continue;
                double ratio = T(i, n + m) / T(i, enter);
                bool tie = leave >= 0 && std::abs(ratio - best) <= tol &&
                           basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)];
                if (leave < 0 || ratio < best - tol || tie) {
                    best = ratio;
                    leave = i;
                }
            }
            if (leave < 0) throw Error(ErrorKind::NoConvergence, "linear program is unbounded");
            pivot(leave, enter);
        }
    };

    // Phase I: minimize the sum of artificials.
    for (Eigen::Index j = 0; j < n; ++j) T(m, j) = -T.col(j).head(m).sum();
    T(m, n + m) = -b.sum();
    run(n);
    if (-T(m, n + m) > 1e-9 * std::max(1.0, b.sum()))
        throw Error(ErrorKind::NoConvergence, "transport problem is infeasible");
    for (Eigen::Index i = 0; i < m; ++i) {
        if (basis[static_cast<std::size_t>(i)] < n) continue;
        for (Eigen::Index j = 0; j < n; ++j)
            if (std::abs(T(i, j)) > 1e-9) {
                pivot(i, j);
                break;
            }
    }
    // Phase II on the original costs; artificials may not re-enter.
    T.row(m).setZero();
    T.row(m).head(n) = c.transpose();
    for (Eigen::Index i = 0; i < m; ++i) {
        Eigen::Index bj = basis[static_cast<std::size_t>(i)];
        if (bj < n && c[bj] != 0.0) T.row(m) -= c[bj] * T.row(i);
    }
    run(n);
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < m; ++i) {
        Eigen::Index bj = basis[static_cast<std::size_t>(i)];
        if (bj < n) x[bj] = std::max(0.0, T(i, n + m));
    }
    return x;
}

}  // namespace

TransportPlan exact_transport(const CostMatrix& cost, const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta) {
    const Eigen::Index n = cost.rows(), m = cost.cols();
    if (alpha.size() != m || beta.size() != n)
        throw Error(ErrorKind::ShapeMismatch, "cost shape does not match the marginals");
    check_marginals(alpha, beta);
    Eigen::VectorXd bb = beta * (alpha.sum() / beta.sum());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + m, n * m);
    Eigen::VectorXd rhs(n + m), c(n * m);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j) {
            Eigen::Index v = i * m + j;
            A(i, v) = 1.0;
            A(n + j, v) = 1.0;
            c[v] = cost(i, j);
        }
    rhs.head(n) = bb;
    rhs.tail(m) = alpha;
    Eigen::VectorXd x = simplex_solve(A, rhs, c);
    TransportPlan p(n, m);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j) p(i, j) = x[i * m + j];
    return p;
}

TransportPlan lp_ot_oracle(const CostMatrix& cost, const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta) {
    if (cost.rows() * cost.cols() > 400)
        throw Error(ErrorKind::SizeExceeded, "oracle limited to 400 plan entries");
    return exact_transport(cost, alpha, beta);
}

EmpiricalMeasure wasserstein_barycenter(const std::vector<EmpiricalMeasure>& measures, const CostMatrix& ground,
                                        double eps, const std::vector<double>& weights, double tol, int max_iter) {
    if (measures.empty()) throw Error(ErrorKind::EmptyList, "barycenter of no measures");
    if (weights.size() != measures.size()) throw Error(ErrorKind::LengthMismatch, "one weight per measure required");
    double wsum = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw Error(ErrorKind::InvalidWeights, "negative barycenter weight");
        wsum += w;
    }
    if (std::abs(wsum - 1.0) > 1e-9) throw Error(ErrorKind::InvalidWeights, "barycenter weights must sum to 1");
    const Eigen::Index n = ground.rows();
    if (ground.cols() != n) throw Error(ErrorKind::ShapeMismatch, "ground cost must be square");
    for (const auto& mu : measures)
        if (mu.weights.size() != n || mu.domain != measures[0].domain)
            throw Error(ErrorKind::DomainMismatch, "barycenter inputs live on different domains");
    if (!(eps > 0.0)) throw Error(ErrorKind::InvalidConfig, "entropic scale must be positive");

    const std::size_t K = measures.size();
    if (K == 1) return {measures[0].domain, measures[0].weights / measures[0].weights.sum()};
    const Eigen::MatrixXd logK = -ground / eps;
    std::vector<Eigen::VectorXd> lp(K), lv(K, Eigen::VectorXd::Zero(n)), lu(K, Eigen::VectorXd(n)), lktu(K);
    for (std::size_t k = 0; k < K; ++k) {
        lp[k].resize(n);
        for (Eigen::Index i = 0; i < n; ++i) lp[k][i] = log_or_neginf(measures[k].weights[i]);
    }
    // ld is the debiasing vector; it removes the entropic blur so that
    // identical inputs are a fixed point at any eps.
    Eigen::VectorXd lbar = Eigen::VectorXd::Constant(n, -std::log(static_cast<double>(n))), prev, tmp;
    Eigen::VectorXd ld = Eigen::VectorXd::Zero(n), lkd(n);
    bool converged = false;
    for (int it = 0; it < max_iter && !converged; ++it) {
        prev = lbar;
        lbar = ld;
        for (std::size_t k = 0; k < K; ++k) {
            for (Eigen::Index i = 0; i < n; ++i) {
                tmp = logK.row(i).transpose() + lv[k];
                lu[k][i] = lp[k][i] == kNegInf ? kNegInf : lp[k][i] - logsumexp(tmp);
            }
            lktu[k].resize(n);
            for (Eigen::Index j = 0; j < n; ++j) {
                tmp = logK.col(j) + lu[k];
                lktu[k][j] = logsumexp(tmp);
            }
            lbar += weights[k] * lktu[k];
        }
        for (std::size_t k = 0; k < K; ++k) lv[k] = lbar - lktu[k];
        for (Eigen::Index i = 0; i < n; ++i) {
            tmp = logK.row(i).transpose() + ld;
            lkd[i] = logsumexp(tmp);
        }
        ld = 0.5 * (ld + lbar - lkd);
        double diff = (lbar.array().exp() - prev.array().exp()).abs().sum();
        converged = diff <= tol;
    }
    if (!converged) throw Error(ErrorKind::NoConvergence, "barycenter did not reach a fixed point");
    Eigen::VectorXd b = lbar.array().exp();
    b /= b.sum();
    return {measures[0].domain, b};
}

}  // namespace cota
