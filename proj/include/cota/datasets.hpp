#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cota/cost.hpp"
#include "cota/measures.hpp"
#include "cota/scm.hpp"

namespace cota {

// Equal-width binning of a continuous column.
struct BinSpec {
    double lo = 0.0, hi = 1.0;
    int bins = 5;

    int index(double x) const;
    double midpoint(int k) const;
    double width() const { return (hi - lo) / bins; }
    static BinSpec fit(const std::vector<double>& xs, int bins);
};

// Raw EBM tables. LRCS: one outcome column; WMG: two outcome columns.
struct EbmTables {
    std::vector<double> lrcs_cg, lrcs_ml;
    std::vector<double> wmg_cg, wmg_ml1, wmg_ml2;
};

struct EbmData {
    EbmTables tables;
    BinSpec ml, ml1, ml2;
    std::vector<Assignment> base_rows;  // discretized WMG rows (CG, ML1, ML2)
    std::vector<Assignment> abs_rows;   // discretized LRCS rows (CG', ML')
};

struct Scenario {
    std::string name;
    std::shared_ptr<const DiscreteScm> base, abs;
    InterventionPoset base_set, abs_set;
    OmegaMap omega;
    HammingAlignment alignment;
    std::vector<bool> base_ordinal, abs_ordinal;  // per-variable ground metric: index distance vs 0/1
    std::optional<EbmData> ebm;                   // data-driven pairs instead of sampling

    void validate() const;
};

struct StcParams {
    double p_s1 = 0.5;
    double p_t1_given_s[2] = {0.2, 0.8};
    double p_c1_given_t[2] = {0.1, 0.7};
};

enum class StcVariant { NoParents, Parents };

Scenario build_stc(StcVariant variant, const StcParams& params = {});
// Base and abstracted model are the same STC chain; omega is the identity on
// {null, S=s, T=t, C=c}.
Scenario build_stc_identity(const StcParams& params = {});
Scenario build_lucas();

constexpr int kDefaultBins = 5;

EbmTables read_ebm_csv(const std::filesystem::path& lrcs_csv, const std::filesystem::path& wmg_csv);
void write_ebm_csv(const EbmTables& t, const std::filesystem::path& lrcs_csv, const std::filesystem::path& wmg_csv);
// Stand-in generator with the real schema: a saturating comma-gap -> mass-loading curve plus noise.
EbmTables synthetic_ebm(std::uint64_t seed, std::size_t rows_per_class = 30);
Scenario load_ebm(const EbmTables& tables, int bins = kDefaultBins);
Scenario load_ebm(const std::filesystem::path& lrcs_csv, const std::filesystem::path& wmg_csv,
                  int bins = kDefaultBins);

Scenario scenario_by_name(const std::string& name, std::uint64_t seed = 0);

// SCM scenarios sample; data scenarios use the rows themselves, bootstrapped when resample is set.
PairSet scenario_pairs(const Scenario& sc, std::size_t n_base, std::size_t n_abs, std::uint64_t seed,
                       bool resample = true);

}  // namespace cota
