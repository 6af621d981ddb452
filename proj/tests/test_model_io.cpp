#include <filesystem>
#include <string>

#include "doctest.h"
#include "support.hpp"

#include "cota/datasets.hpp"
#include "cota/model_io.hpp"

using namespace cota;

namespace {

ErrorKind kind_of(const std::string& text, std::string* message = nullptr) {
    try {
        parse_model(text, "m.json");
    } catch (const Error& e) {
        if (message) *message = e.what();
        return e.kind();
    }
    FAIL("model parsed without error");
    return ErrorKind::Io;
}

void check_same(const DiscreteScm& a, const DiscreteScm& b) {
    REQUIRE(a.num_variables() == b.num_variables());
    for (std::size_t v = 0; v < a.num_variables(); ++v) {
        CHECK(a.variables()[v].name == b.variables()[v].name);
        CHECK(a.variables()[v].domain == b.variables()[v].domain);
        CHECK(a.dag().parents[v] == b.dag().parents[v]);
        CHECK(a.cpts()[v].rows == b.cpts()[v].rows);
    }
}

const char* kChain = R"({
  "variables": [
    {"name": "A", "domain": ["lo", "hi"]},
    {"name": "B", "domain": [0, 1, 2]}
  ],
  "edges": [["A", "B"]],
  "cpts": {
    "A": [{"probs": [0.4, 0.6]}],
    "B": [
      {"parents": {"A": "lo"}, "probs": [0.2, 0.3, 0.5]},
      {"parents": {"A": "hi"}, "probs": [0.6, 0.3, 0.1]}
    ]
  },
  "interventions": [{}, {"A": "hi"}, {"A": "hi", "B": 2}],
  "omega": [{"base": 0, "abs": 0}, {"base": 1, "abs": 1}, {"base": 2, "abs": 1}]
}
)";

}  // namespace

TEST_CASE("parse a hand-written model") {
    ModelFile m = parse_model(kChain);
    const auto& vars = m.scm->variables();
    REQUIRE(vars.size() == 2);
    CHECK(vars[1].domain == std::vector<std::string>{"0", "1", "2"});
    CHECK(m.scm->dag().parents[1] == std::vector<std::string>{"A"});
    CHECK(m.scm->cpts()[1].rows[1] == std::vector<double>{0.6, 0.3, 0.1});
    REQUIRE(m.interventions.size() == 3);
    CHECK(m.interventions[0].assignments.empty());
    CHECK(m.interventions[2].assignments.at("A") == 1);
    CHECK(m.interventions[2].assignments.at("B") == 2);
    REQUIRE(m.omega);
    CHECK(m.omega->image == std::vector<std::size_t>{0, 1, 1});

    Distribution d = exact_distribution(*m.scm, {});
    // P(A=hi, B=0) = .6 * .6
    CHECK(d.probs[3] == doctest::Approx(0.36));
}

TEST_CASE("interventions default to the null intervention") {
    std::string text = R"({"variables": [{"name": "A", "domain": [0, 1]}], "cpts": {"A": [{"probs": [0.5, 0.5]}]}})";
    ModelFile m = parse_model(text);
    REQUIRE(m.interventions.size() == 1);
    CHECK(m.interventions[0].assignments.empty());
    CHECK_FALSE(m.omega);
}

TEST_CASE("dump and parse round trip the shipped scenarios") {
    for (const char* name : {"stc_np", "stc_p", "lucas", "stc_identity"}) {
        Scenario sc = scenario_by_name(name);
        ModelFile b = parse_model(dump_model(*sc.base, sc.base_set, sc.omega));
        ModelFile a = parse_model(dump_model(*sc.abs, sc.abs_set));
        check_same(*b.scm, *sc.base);
        check_same(*a.scm, *sc.abs);
        REQUIRE(b.interventions.size() == sc.base_set.size());
        for (std::size_t k = 0; k < sc.base_set.size(); ++k)
            CHECK(b.interventions[k].assignments == sc.base_set[k].assignments);
        REQUIRE(b.omega);
        CHECK(b.omega->image == sc.omega.image);
        CHECK(dump_model(*b.scm, b.interventions, b.omega) == dump_model(*sc.base, sc.base_set, sc.omega));
    }
}

TEST_CASE("save and load through a file") {
    auto path = std::filesystem::temp_directory_path() / "cota_test_model.json";
    Scenario sc = build_lucas();
    save_model(path, *sc.base, sc.base_set, sc.omega);
    ModelFile m = load_model(path);
    check_same(*m.scm, *sc.base);
    std::filesystem::remove(path);
    try {
        load_model(path);
        FAIL("expected an I/O error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Io);
    }
}

TEST_CASE("errors name the offending line") {
    std::string msg;
    std::string text = kChain;

    std::string bad_prob = text;
    bad_prob.replace(bad_prob.find("0.6, 0.3, 0.1"), 13, "0.6, 0.3, 0.3");
    CHECK(kind_of(bad_prob, &msg) == ErrorKind::InvalidModel);
    CHECK(msg.find("m.json:11:") != std::string::npos);

    std::string bad_value = text;
    bad_value.replace(bad_value.find("\"A\": \"hi\", \"B\": 2"), 17, "\"A\": \"hi\", \"B\": 7");
    CHECK(kind_of(bad_value, &msg) == ErrorKind::ValueOutOfDomain);
    CHECK(msg.find("m.json:14:") != std::string::npos);

    std::string unknown = text;
    unknown.replace(unknown.find("[\"A\", \"B\"]"), 10, "[\"Z\", \"B\"]");
    CHECK(kind_of(unknown, &msg) == ErrorKind::UnknownParent);
    CHECK(msg.find("m.json:6:") != std::string::npos);

    std::string syntax = text;
    syntax.replace(syntax.find("\"cpts\": {"), 9, "\"cpts\" {");
    CHECK(kind_of(syntax, &msg) == ErrorKind::ParseError);
    CHECK(msg.find("m.json:7:") != std::string::npos);

    std::string missing_row = text;
    const std::string hi_row = ",\n      {\"parents\": {\"A\": \"hi\"}, \"probs\": [0.6, 0.3, 0.1]}";
    missing_row.erase(missing_row.find(hi_row), hi_row.size());
    CHECK(kind_of(missing_row, &msg) == ErrorKind::InvalidModel);
    CHECK(msg.find("m.json:9:") != std::string::npos);

    std::string omega = text;
    omega.replace(omega.find("{\"base\": 2"), 10, "{\"base\": 9");
    CHECK(kind_of(omega, &msg) == ErrorKind::InvalidModel);
    CHECK(msg.find("m.json:15:") != std::string::npos);
}

TEST_CASE("cycles are rejected") {
    std::string text = R"({
  "variables": [{"name": "A", "domain": [0, 1]}, {"name": "B", "domain": [0, 1]}],
  "edges": [["A", "B"], ["B", "A"]],
  "cpts": {"A": [], "B": []}
})";
    std::string msg;
    CHECK(kind_of(text, &msg) == ErrorKind::CycleDetected);
    CHECK(msg.find("m.json:3:") != std::string::npos);
}

TEST_CASE("structural errors") {
    CHECK(kind_of(R"({"cpts": {}})") == ErrorKind::ParseError);
    CHECK(kind_of(R"({"variables": [], "cpts": {}})") == ErrorKind::InvalidModel);
    CHECK(kind_of(R"({"variables": [{"name": "A", "domain": [0]}, {"name": "A", "domain": [1]}], "cpts": {}})") ==
          ErrorKind::InvalidModel);
    CHECK(kind_of(R"({"variables": [{"name": "A", "domain": [0, 1]}], "cpts": {}})") == ErrorKind::InvalidModel);
    CHECK(kind_of(R"({"variables": [{"name": "A", "domain": [0, 1]}], "cpts": {"A": [{"probs": [1.5, -0.5]}]}})") ==
          ErrorKind::InvalidModel);
    CHECK(kind_of(R"({"variables": [{"name": "A", "domain": [0, 1]}], "cpts": {"A": [{"probs": [0.5, 0.5]}]},
                     "interventions": [{"Q": 0}]})") == ErrorKind::UnknownVariable);
    CHECK(kind_of(R"({"variables": [{"name": "A", "domain": [0, 1]}], "cpts": {"A": [{"probs": [0.5, 0.5]}]},
                     "interventions": [{"A": 0}]})") == ErrorKind::InvalidModel);
}
