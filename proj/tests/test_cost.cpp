#include <filesystem>

#include "doctest.h"
#include "support.hpp"

#include "cota/cost.hpp"
#include "cota/datasets.hpp"
#include "cota/measures.hpp"

using namespace cota;
using testing::binary;
using testing::iv;

namespace {

struct Golden {
    DomainIndex base{{binary("X1"), binary("X2"), binary("X3")}};
    DomainIndex abs{{binary("X1'"), binary("X2'")}};
    InterventionPoset base_set{{{}, iv({{"X1", 0}}), iv({{"X1", 0}, {"X2", 0}})}};
    InterventionPoset abs_set{{{}, iv({{"X1'", 0}})}};
    OmegaMap omega{{0, 1, 1}};
};

}  // namespace

TEST_CASE("omega cost reproduces the three-intervention golden block") {
    Golden g;
    CostMatrix c = omega_cost(g.base, g.abs, g.base_set, g.abs_set, g.omega);
    REQUIRE(c.rows() == 4);
    REQUIRE(c.cols() == 8);
    const double want[4][6] = {{0, 0, 1, 1, 2, 2}, {0, 0, 1, 1, 2, 2}, {2, 2, 2, 2, 2, 2}, {2, 2, 2, 2, 2, 2}};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 6; ++j) CHECK(c(i, j) == want[i][j]);
}

TEST_CASE("omega cost with only the null intervention is zero") {
    Golden g;
    InterventionPoset nul{{{}}};
    CostMatrix c = omega_cost(g.base, g.abs, nul, nul, {{0}});
    CHECK(c.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("omega cost entries lie in [0, |I|] on shipped scenarios") {
    for (const char* name : {"stc_np", "stc_p", "stc_identity", "lucas", "ebm"}) {
        Scenario sc = scenario_by_name(name, 1);
        DomainIndex b(sc.base->variables()), a(sc.abs->variables());
        CostMatrix c = omega_cost(b, a, sc.base_set, sc.abs_set, sc.omega);
        CHECK(c.minCoeff() >= 0.0);
        CHECK(c.maxCoeff() <= static_cast<double>(sc.base_set.size()));
        CHECK(c.rows() == static_cast<Eigen::Index>(a.size()));
        CHECK(c.cols() == static_cast<Eigen::Index>(b.size()));
    }
}

TEST_CASE("omega cost discount grows with nested intervention sets") {
    Scenario np = build_stc(StcVariant::NoParents);
    DomainIndex b(np.base->variables()), a(np.abs->variables());
    InterventionPoset small{{np.base_set[0], np.base_set[1], np.base_set[2]}};
    CostMatrix c_small = omega_cost(b, a, small, np.abs_set, {{0, 1, 2}});
    CostMatrix c_full = omega_cost(b, a, np.base_set, np.abs_set, np.omega);
    Eigen::MatrixXd disc_small = (3.0 - c_small.array()).matrix();
    Eigen::MatrixXd disc_full = (5.0 - c_full.array()).matrix();
    CHECK((disc_full - disc_small).minCoeff() >= 0.0);
}

TEST_CASE("omega cost is equivariant under relabeled domains") {
    Golden g;
    CostMatrix c = omega_cost(g.base, g.abs, g.base_set, g.abs_set, g.omega);
    // X1 listed as {1, 0}: the value "0" now has index 1.
    DomainIndex base2({{"X1", {"1", "0"}}, binary("X2"), binary("X3")});
    InterventionPoset set2{{{}, iv({{"X1", 1}}), iv({{"X1", 1}, {"X2", 0}})}};
    CostMatrix c2 = omega_cost(base2, g.abs, set2, g.abs_set, g.omega);
    for (std::size_t j = 0; j < g.base.size(); ++j) {
        std::size_t j2 = 0;
        while (base2.label(j2) != g.base.label(j)) ++j2;
        for (Eigen::Index i = 0; i < c.rows(); ++i)
            CHECK(c2(i, static_cast<Eigen::Index>(j2)) == c(i, static_cast<Eigen::Index>(j)));
    }
}

TEST_CASE("Hamming cost on aligned coordinates") {
    Scenario np = build_stc(StcVariant::NoParents);
    DomainIndex b(np.base->variables()), a(np.abs->variables());
    CostMatrix c = hamming_cost(b, a, np.alignment);
    auto j = static_cast<Eigen::Index>(b.index_of({1, 0, 0}));
    CHECK(c(static_cast<Eigen::Index>(a.index_of({1, 0})), j) == 0.0);
    CHECK(c(static_cast<Eigen::Index>(a.index_of({0, 1})), j) == 2.0);
    CHECK(c(static_cast<Eigen::Index>(a.index_of({1, 1})), j) == 1.0);
}

TEST_CASE("Hamming cost on the comma-gap scenario stays within the variable count") {
    Scenario e = load_ebm(synthetic_ebm(2));
    DomainIndex b(e.base->variables()), a(e.abs->variables());
    for (auto rule : {AlignmentRule::Designated, AlignmentRule::Majority}) {
        HammingAlignment al = e.alignment;
        al.rule = rule;
        CostMatrix c = hamming_cost(b, a, al);
        for (Eigen::Index i = 0; i < c.rows(); ++i)
            for (Eigen::Index j = 0; j < c.cols(); ++j) {
                CHECK(c(i, j) >= 0.0);
                CHECK(c(i, j) <= 2.0);
                CHECK(c(i, j) == std::round(c(i, j)));
            }
    }
}

TEST_CASE("majority rule differs from the designated rule when the first variable is outvoted") {
    DomainIndex base({binary("A"), binary("B"), binary("C")});
    DomainIndex abs({binary("Y")});
    HammingAlignment des{{{"Y", {"A", "B", "C"}}}, AlignmentRule::Designated};
    HammingAlignment maj{{{"Y", {"A", "B", "C"}}}, AlignmentRule::Majority};
    auto j = static_cast<Eigen::Index>(base.index_of({0, 1, 1}));
    CHECK(hamming_cost(base, abs, des)(1, j) == 1.0);
    CHECK(hamming_cost(base, abs, maj)(1, j) == 0.0);
}

TEST_CASE("invalid alignments are rejected") {
    Scenario np = build_stc(StcVariant::NoParents);
    DomainIndex b(np.base->variables()), a(np.abs->variables());
    auto kind = [&](const HammingAlignment& al) {
        try {
            hamming_cost(b, a, al);
        } catch (const Error& e) {
            return e.kind();
        }
        return ErrorKind::Io;
    };
    CHECK(kind({{{"S'", {"S"}}}}) == ErrorKind::InvalidAlignment);
    CHECK(kind({{{"S'", {"S"}}, {"C'", {"Q"}}}}) == ErrorKind::InvalidAlignment);
    CHECK(kind({{{"S'", {"S"}}, {"C'", {}}}}) == ErrorKind::InvalidAlignment);
    CHECK(kind({{{"S'", {"S"}}, {"C'", {"C"}}, {"Z'", {"T"}}}}) == ErrorKind::InvalidAlignment);
}

TEST_CASE("ground cost is a metric and cost CSV round trips") {
    DomainIndex d({binary("A"), {"B", {"0", "1", "2"}}});
    CostMatrix g = ground_cost(d, {false, true});
    CHECK(g(static_cast<Eigen::Index>(d.index_of({0, 0})), static_cast<Eigen::Index>(d.index_of({1, 2}))) == 3.0);
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
        CHECK(g(i, i) == 0.0);
        for (Eigen::Index j = 0; j < g.cols(); ++j) {
            CHECK(g(i, j) == g(j, i));
            for (Eigen::Index k = 0; k < g.cols(); ++k) CHECK(g(i, k) <= g(i, j) + g(j, k));
        }
    }
    auto path = std::filesystem::temp_directory_path() / "cota_cost_test.csv";
    Golden gd;
    CostMatrix c = omega_cost(gd.base, gd.abs, gd.base_set, gd.abs_set, gd.omega);
    write_cost_csv(path, c);
    CHECK(read_cost_csv(path) == c);
    write_cost_csv(path, g / 3.0);
    CHECK(read_cost_csv(path) == g / 3.0);
    std::filesystem::remove(path);
}
