#include "cota/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cota/csv.hpp"
#include "cota/rng.hpp"

namespace cota {

namespace {

const std::vector<std::string> kBinary = {"0", "1"};

Cpt bernoulli_rows(const std::vector<double>& p1) {
    Cpt c;
    for (double p : p1) c.rows.push_back({1.0 - p, p});
    return c;
}

Intervention make_iv(const std::vector<VariableSpec>& vars, const std::vector<std::pair<std::string, std::string>>& kv) {
    Intervention iv;
    for (const auto& [name, label] : kv) {
        int v = find_variable(vars, name);
        if (v < 0) throw Error(ErrorKind::UnknownVariable, name);
        int x = find_value(vars[v], label);
        if (x < 0) throw Error(ErrorKind::ValueOutOfDomain, name + "=" + label);
        iv.assignments[name] = x;
    }
    return iv;
}

std::vector<std::string> bin_labels(int bins) {
    std::vector<std::string> out;
    for (int k = 0; k < bins; ++k) out.push_back("b" + std::to_string(k));
    return out;
}

// Add-half smoothed conditional table of variable `child` given `parents` (indices into the row layout).
Cpt estimate_cpt(const std::vector<Assignment>& rows, const std::vector<VariableSpec>& vars, int child,
                 const std::vector<int>& parents) {
    std::size_t n_rows = 1;
    for (int p : parents) n_rows *= vars[p].domain.size();
    std::size_t k = vars[child].domain.size();
    std::vector<std::vector<double>> counts(n_rows, std::vector<double>(k, 0.5));
    for (const auto& x : rows) {
        std::size_t code = 0;
        for (int p : parents) code = code * vars[p].domain.size() + static_cast<std::size_t>(x[p]);
        counts[code][static_cast<std::size_t>(x[child])] += 1.0;
    }
    for (auto& r : counts) {
        double s = 0.0;
        for (double c : r) s += c;
        for (double& c : r) c /= s;
    }
    return {counts};
}

const std::vector<double> kBaseCg = {75, 110, 180, 200};
const std::vector<double> kAbsCg = {75, 100, 200};

int match_class(double cg, const std::vector<double>& classes, const std::string& where) {
    for (std::size_t k = 0; k < classes.size(); ++k)
        if (std::abs(cg - classes[k]) < 1e-9) return static_cast<int>(k);
    std::ostringstream os;
    os << where << ": comma gap " << cg << " is not one of the known classes";
    throw Error(ErrorKind::SchemaMismatch, os.str());
}

std::string fmt_num(double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
}

}  // namespace

int BinSpec::index(double x) const {
    int k = static_cast<int>(std::floor((x - lo) / width()));
    return std::clamp(k, 0, bins - 1);
}

double BinSpec::midpoint(int k) const { return lo + (k + 0.5) * width(); }

BinSpec BinSpec::fit(const std::vector<double>& xs, int bins) {
    if (xs.empty()) throw Error(ErrorKind::EmptyVector, "cannot bin an empty column");
    if (bins < 1) throw Error(ErrorKind::InvalidConfig, "bin count must be positive");
    auto [mn, mx] = std::minmax_element(xs.begin(), xs.end());
    BinSpec b{*mn, *mx, bins};
    if (b.hi <= b.lo) b.hi = b.lo + 1.0;
    return b;
}

void Scenario::validate() const {
    validate_dag(base->dag());
    validate_dag(abs->dag());
    validate_poset(base_set);
    validate_poset(abs_set);
    validate_omega(omega, base_set, abs_set);
    if (maximal_chains(base_set).empty()) throw Error(ErrorKind::InvalidModel, name + ": no maximal chain");
}

Scenario build_stc(StcVariant variant, const StcParams& p) {
    CausalDag dag{{{"S", kBinary}, {"T", kBinary}, {"C", kBinary}}, {{}, {"S"}, {"T"}}};
    std::vector<Cpt> cpts = {bernoulli_rows({p.p_s1}), bernoulli_rows({p.p_t1_given_s[0], p.p_t1_given_s[1]}),
                             bernoulli_rows({p.p_c1_given_t[0], p.p_c1_given_t[1]})};

    // Abstracted chain S' -> C' carries the marginalized mechanism P(C | S).
    std::vector<double> c_given_s(2);
    for (int s = 0; s < 2; ++s)
        c_given_s[s] = (1.0 - p.p_t1_given_s[s]) * p.p_c1_given_t[0] + p.p_t1_given_s[s] * p.p_c1_given_t[1];
    CausalDag adag{{{"S'", kBinary}, {"C'", kBinary}}, {{}, {"S'"}}};
    std::vector<Cpt> acpts = {bernoulli_rows({p.p_s1}), bernoulli_rows(c_given_s)};

    Scenario sc;
    sc.base = std::make_shared<const DiscreteScm>(dag, cpts);
    sc.abs = std::make_shared<const DiscreteScm>(adag, acpts);
    const auto& bv = sc.base->variables();
    const auto& av = sc.abs->variables();
    if (variant == StcVariant::NoParents) {
        sc.name = "stc_np";
        sc.base_set.interventions = {{},
                                     make_iv(bv, {{"S", "0"}}),
                                     make_iv(bv, {{"S", "1"}}),
                                     make_iv(bv, {{"S", "0"}, {"T", "1"}}),
                                     make_iv(bv, {{"S", "1"}, {"T", "1"}})};
        sc.abs_set.interventions = {{}, make_iv(av, {{"S'", "0"}}), make_iv(av, {{"S'", "1"}})};
        sc.omega.image = {0, 1, 2, 1, 2};
    } else {
        sc.name = "stc_p";
        sc.base_set.interventions = {{}, make_iv(bv, {{"T", "0"}}), make_iv(bv, {{"T", "1"}})};
        sc.abs_set.interventions = {{}, make_iv(av, {{"C'", "0"}}), make_iv(av, {{"C'", "1"}})};
        sc.omega.image = {0, 1, 2};
    }
    sc.alignment.aligned = {{"S'", {"S"}}, {"C'", {"C"}}};
    sc.base_ordinal.assign(3, false);
    sc.abs_ordinal.assign(2, false);
    sc.validate();
    return sc;
}

Scenario build_stc_identity(const StcParams& p) {
    Scenario stc = build_stc(StcVariant::NoParents, p);
    Scenario sc;
    sc.name = "stc_identity";
    sc.base = stc.base;
    sc.abs = stc.base;
    const auto& bv = sc.base->variables();
    sc.base_set.interventions = {{}};
    for (const auto& v : bv)
        for (const auto& label : v.domain) sc.base_set.interventions.push_back(make_iv(bv, {{v.name, label}}));
    sc.abs_set = sc.base_set;
    for (std::size_t k = 0; k < sc.base_set.size(); ++k) sc.omega.image.push_back(k);
    for (const auto& v : bv) sc.alignment.aligned[v.name] = {v.name};
    sc.base_ordinal.assign(bv.size(), false);
    sc.abs_ordinal.assign(bv.size(), false);
    sc.validate();
    return sc;
}

Scenario build_lucas() {
    // Shipped constants; every interventional marginal stays inside [.05, .95].
    const double p_an = 0.4, p_pp = 0.3, p_ge = 0.25, p_al = 0.4;
    const std::vector<double> sm_given_an_pp = {0.2, 0.5, 0.6, 0.85};  // (AN,PP) = 00, 01, 10, 11
    const std::vector<double> lc_given_sm_ge = {0.1, 0.4, 0.55, 0.85};
    const std::vector<double> fa_given_lc = {0.2, 0.7};
    const std::vector<double> co_given_lc_al = {0.15, 0.35, 0.6, 0.85};

    CausalDag dag{{{"AN", kBinary},
                   {"SM", kBinary},
                   {"GE", kBinary},
                   {"PP", kBinary},
                   {"LC", kBinary},
                   {"FA", kBinary},
                   {"CO", kBinary},
                   {"AL", kBinary}},
                  {{}, {"AN", "PP"}, {}, {}, {"SM", "GE"}, {"LC"}, {"LC", "AL"}, {}}};
    std::vector<Cpt> cpts = {bernoulli_rows({p_an}),         bernoulli_rows(sm_given_an_pp),
                             bernoulli_rows({p_ge}),         bernoulli_rows({p_pp}),
                             bernoulli_rows(lc_given_sm_ge), bernoulli_rows(fa_given_lc),
                             bernoulli_rows(co_given_lc_al), bernoulli_rows({p_al})};

    double p_sm = 0.0;
    for (int an = 0; an < 2; ++an)
        for (int pp = 0; pp < 2; ++pp)
            p_sm += (an ? p_an : 1 - p_an) * (pp ? p_pp : 1 - p_pp) * sm_given_an_pp[2 * an + pp];
    CausalDag adag{{{"EN'", kBinary}, {"LC'", kBinary}, {"GE'", kBinary}}, {{}, {"EN'", "GE'"}, {}}};
    std::vector<Cpt> acpts = {bernoulli_rows({p_sm}), bernoulli_rows(lc_given_sm_ge), bernoulli_rows({p_ge})};

    Scenario sc;
    sc.name = "lucas";
    sc.base = std::make_shared<const DiscreteScm>(dag, cpts);
    sc.abs = std::make_shared<const DiscreteScm>(adag, acpts);
    const auto& bv = sc.base->variables();
    const auto& av = sc.abs->variables();
    sc.base_set.interventions = {{},
                                 make_iv(bv, {{"AN", "0"}}),
                                 make_iv(bv, {{"GE", "1"}}),
                                 make_iv(bv, {{"AL", "0"}}),
                                 make_iv(bv, {{"AN", "0"}, {"PP", "0"}}),
                                 make_iv(bv, {{"AN", "0"}, {"PP", "0"}, {"SM", "0"}}),
                                 make_iv(bv, {{"AN", "0"}, {"PP", "0"}, {"SM", "1"}})};
    sc.abs_set.interventions = {{}, make_iv(av, {{"EN'", "0"}}), make_iv(av, {{"GE'", "0"}}),
                                make_iv(av, {{"GE'", "1"}})};
    sc.omega.image = {0, 1, 3, 2, 1, 1, 1};
    sc.alignment.aligned = {{"EN'", {"SM", "AN", "PP"}}, {"LC'", {"LC"}}, {"GE'", {"GE"}}};
    sc.base_ordinal.assign(8, false);
    sc.abs_ordinal.assign(3, false);
    sc.validate();
    return sc;
}

EbmTables read_ebm_csv(const std::filesystem::path& lrcs_csv, const std::filesystem::path& wmg_csv) {
    EbmTables t;
    auto need = [](const CsvTable& tab, const std::string& col, const std::filesystem::path& p) {
        int c = tab.column(col);
        if (c < 0) throw Error(ErrorKind::SchemaMismatch, p.string() + ": missing column '" + col + "'");
        return c;
    };
    auto column = [](const CsvTable& tab, int c, const std::filesystem::path& p) {
        std::vector<double> out;
        for (std::size_t r = 0; r < tab.rows.size(); ++r)
            out.push_back(parse_double(tab.rows[r][c], p.string() + ":" + std::to_string(r + 2)));
        return out;
    };
    CsvTable l = read_csv(lrcs_csv);
    if (l.rows.empty()) throw Error(ErrorKind::EmptyFile, lrcs_csv.string() + ": no data rows");
    t.lrcs_cg = column(l, need(l, "CG", lrcs_csv), lrcs_csv);
    t.lrcs_ml = column(l, need(l, "ML", lrcs_csv), lrcs_csv);
    CsvTable w = read_csv(wmg_csv);
    if (w.rows.empty()) throw Error(ErrorKind::EmptyFile, wmg_csv.string() + ": no data rows");
    t.wmg_cg = column(w, need(w, "CG", wmg_csv), wmg_csv);
    t.wmg_ml1 = column(w, need(w, "ML1", wmg_csv), wmg_csv);
    t.wmg_ml2 = column(w, need(w, "ML2", wmg_csv), wmg_csv);
    for (std::size_t r = 0; r < t.lrcs_cg.size(); ++r)
        match_class(t.lrcs_cg[r], kAbsCg, lrcs_csv.string() + ":" + std::to_string(r + 2));
    for (std::size_t r = 0; r < t.wmg_cg.size(); ++r)
        match_class(t.wmg_cg[r], kBaseCg, wmg_csv.string() + ":" + std::to_string(r + 2));
    return t;
}

void write_ebm_csv(const EbmTables& t, const std::filesystem::path& lrcs_csv, const std::filesystem::path& wmg_csv) {
    std::ofstream l(lrcs_csv);
    if (!l) throw Error(ErrorKind::Io, "cannot write " + lrcs_csv.string());
    l << "CG,ML\n";
    for (std::size_t r = 0; r < t.lrcs_cg.size(); ++r) l << fmt_num(t.lrcs_cg[r]) << "," << fmt_num(t.lrcs_ml[r]) << "\n";
    std::ofstream w(wmg_csv);
    if (!w) throw Error(ErrorKind::Io, "cannot write " + wmg_csv.string());
    w << "CG,ML1,ML2\n";
    for (std::size_t r = 0; r < t.wmg_cg.size(); ++r)
        w << fmt_num(t.wmg_cg[r]) << "," << fmt_num(t.wmg_ml1[r]) << "," << fmt_num(t.wmg_ml2[r]) << "\n";
}

EbmTables synthetic_ebm(std::uint64_t seed, std::size_t rows_per_class) {
    auto curve = [](double cg) { return 10.0 + 8.0 * (1.0 - std::exp(-cg / 60.0)); };
    const double sigma = 0.3;
    Rng rng(derive_seed(seed, 0, 0xEB));
    EbmTables t;
    for (double cg : kAbsCg)
        for (std::size_t i = 0; i < rows_per_class; ++i) {
            t.lrcs_cg.push_back(cg);
            t.lrcs_ml.push_back(curve(cg) + sigma * rng.normal());
        }
    for (double cg : kBaseCg)
        for (std::size_t i = 0; i < rows_per_class; ++i) {
            t.wmg_cg.push_back(cg);
            t.wmg_ml1.push_back(curve(cg) + 0.4 + sigma * rng.normal());
            t.wmg_ml2.push_back(curve(cg) - 0.3 + sigma * rng.normal());
        }
    return t;
}

Scenario load_ebm(const EbmTables& tables, int bins) {
    if (tables.lrcs_cg.empty() || tables.wmg_cg.empty()) throw Error(ErrorKind::EmptyFile, "EBM tables are empty");
    if (tables.lrcs_cg.size() != tables.lrcs_ml.size() || tables.wmg_cg.size() != tables.wmg_ml1.size() ||
        tables.wmg_cg.size() != tables.wmg_ml2.size())
        throw Error(ErrorKind::LengthMismatch, "EBM columns differ in length");

    EbmData data;
    data.tables = tables;
    data.ml = BinSpec::fit(tables.lrcs_ml, bins);
    data.ml1 = BinSpec::fit(tables.wmg_ml1, bins);
    data.ml2 = BinSpec::fit(tables.wmg_ml2, bins);

    std::vector<std::string> base_cg, abs_cg;
    for (double c : kBaseCg) base_cg.push_back(fmt_num(c));
    for (double c : kAbsCg) abs_cg.push_back(fmt_num(c));
    CausalDag dag{{{"CG", base_cg}, {"ML1", bin_labels(bins)}, {"ML2", bin_labels(bins)}}, {{}, {"CG"}, {"CG"}}};
    CausalDag adag{{{"CG'", abs_cg}, {"ML'", bin_labels(bins)}}, {{}, {"CG'"}}};

    for (std::size_t r = 0; r < tables.wmg_cg.size(); ++r)
        data.base_rows.push_back({match_class(tables.wmg_cg[r], kBaseCg, "WMG row " + std::to_string(r + 1)),
                                  data.ml1.index(tables.wmg_ml1[r]), data.ml2.index(tables.wmg_ml2[r])});
    for (std::size_t r = 0; r < tables.lrcs_cg.size(); ++r)
        data.abs_rows.push_back({match_class(tables.lrcs_cg[r], kAbsCg, "LRCS row " + std::to_string(r + 1)),
                                 data.ml.index(tables.lrcs_ml[r])});

    std::vector<Cpt> cpts = {estimate_cpt(data.base_rows, dag.variables, 0, {}),
                             estimate_cpt(data.base_rows, dag.variables, 1, {0}),
                             estimate_cpt(data.base_rows, dag.variables, 2, {0})};
    std::vector<Cpt> acpts = {estimate_cpt(data.abs_rows, adag.variables, 0, {}),
                              estimate_cpt(data.abs_rows, adag.variables, 1, {0})};

    Scenario sc;
    sc.name = "ebm";
    sc.base = std::make_shared<const DiscreteScm>(dag, cpts);
    sc.abs = std::make_shared<const DiscreteScm>(adag, acpts);
    sc.base_set.interventions = {{}};
    for (int k = 0; k < 4; ++k) sc.base_set.interventions.push_back({{{"CG", k}}});
    sc.abs_set.interventions = {{}};
    for (int k = 0; k < 3; ++k) sc.abs_set.interventions.push_back({{{"CG'", k}}});
    sc.omega.image = {0, 1, 2, 3, 3};  // 75->75, 110->100, 180->200, 200->200
    sc.alignment.aligned = {{"CG'", {"CG"}}, {"ML'", {"ML1", "ML2"}}};
    sc.base_ordinal.assign(3, true);
    sc.abs_ordinal.assign(2, true);
    sc.ebm = std::move(data);
    sc.validate();
    return sc;
}

Scenario load_ebm(const std::filesystem::path& lrcs_csv, const std::filesystem::path& wmg_csv, int bins) {
    return load_ebm(read_ebm_csv(lrcs_csv, wmg_csv), bins);
}

Scenario scenario_by_name(const std::string& name, std::uint64_t seed) {
    if (name == "stc_np") return build_stc(StcVariant::NoParents);
    if (name == "stc_p") return build_stc(StcVariant::Parents);
    if (name == "stc_identity") return build_stc_identity();
    if (name == "lucas") return build_lucas();
    if (name == "ebm") return load_ebm(synthetic_ebm(seed));
    throw Error(ErrorKind::InvalidConfig, "unknown scenario '" + name + "'");
}

namespace {

std::vector<Assignment> rows_compatible(const std::vector<Assignment>& rows, const std::vector<VariableSpec>& vars,
                                        const Intervention& iv) {
    std::vector<Assignment> out;
    for (const auto& x : rows)
        if (is_compatible(vars, x, iv)) out.push_back(x);
    return out;
}

std::vector<Assignment> bootstrap(const std::vector<Assignment>& rows, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Assignment> out;
    out.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) out.push_back(rows[rng.below(rows.size())]);
    return out;
}

}  // namespace

PairSet scenario_pairs(const Scenario& sc, std::size_t n_base, std::size_t n_abs, std::uint64_t seed, bool resample) {
    if (!sc.ebm) return build_pairs(*sc.base, *sc.abs, sc.base_set, sc.abs_set, sc.omega, n_base, n_abs, seed);

    const EbmData& data = *sc.ebm;
    PairSet ps;
    ps.base_domain = enumerate_domain(*sc.base);
    ps.abs_domain = enumerate_domain(*sc.abs);
    for (std::size_t k = 0; k < sc.base_set.size(); ++k) {
        auto b = rows_compatible(data.base_rows, sc.base->variables(), sc.base_set[k]);
        auto a = rows_compatible(data.abs_rows, sc.abs->variables(), sc.abs_set[sc.omega.image[k]]);
        if (b.empty() || a.empty())
            throw Error(ErrorKind::EmptyClass,
                        "no rows for intervention " + to_string(sc.base_set[k], sc.base->variables()));
        if (resample) {
            b = bootstrap(b, derive_seed(seed, k, 0));
            a = bootstrap(a, derive_seed(seed, k, 1));
        }
        DistributionPair p;
        p.intervention = k;
        p.base = empirical_from_samples(b, ps.base_domain);
        p.abs = empirical_from_samples(a, ps.abs_domain);
        ps.pairs.push_back(std::move(p));
    }
    return ps;
}

}  // namespace cota
