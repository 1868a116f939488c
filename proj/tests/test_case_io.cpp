#include <doctest.h>

#include <cmath>

#include "convexopf/case_io.hpp"
#include "support.hpp"

using namespace convexopf;

TEST_CASE("bundled IEEE-14 parses") {
    const CaseData c = load_case(testing::data_path("case14.m"));
    CHECK(c.buses.size() == 14);
    CHECK(c.generators.size() == 5);
    CHECK(c.branches.size() == 20);
    CHECK(c.costs.size() == 5);
    CHECK(c.base_mva == 100.0);
    CHECK(c.total_load_mw() == doctest::Approx(259.0));
}

TEST_CASE("bundled IEEE-30 load") {
    CHECK(load_case(testing::data_path("case_ieee30.m")).total_load_mw() == doctest::Approx(283.4));
}

TEST_CASE("minimal two-bus text") {
    const CaseData c = parse_matpower(testing::kTwoBusText);
    CHECK(c.name == "two_bus");
    CHECK(c.buses.size() == 2);
    CHECK(c.branches.size() == 1);
    CHECK(c.generators.size() == 1);
    CHECK(c.buses[0].type == BusType::Slack);
    CHECK(c.branches[0].x == doctest::Approx(0.1));
    CHECK(c.branches[0].tap == 1.0);
    CHECK(c.costs[0].c2 == doctest::Approx(0.01));
}

TEST_CASE("per-unit conversion and renumbering") {
    CaseData c = load_case(testing::data_path("case14.m"));
    CHECK(to_network(c).total_load_pu() == doctest::Approx(2.59));

    CaseData t = testing::two_bus_case(0.0, 0.1, 50.0);
    t.buses.push_back({5, BusType::PQ, 10.0, 0.0, 0.0, 0.0, 0.95, 1.05, 230.0});
    BranchRecord br;
    br.from_bus = 2;
    br.to_bus = 5;
    br.x = 0.2;
    t.branches.push_back(br);
    const NetworkData n = to_network(t);
    CHECK(n.index_of.at(1) == 0);
    CHECK(n.index_of.at(2) == 1);
    CHECK(n.index_of.at(5) == 2);
    CHECK(n.branches[1].from == 1);
    CHECK(n.branches[1].to == 2);
}

TEST_CASE("network round trip reproduces the case") {
    for (const char* f : {"case14.m", "case_ieee30.m", "case57.m", "case118.m"}) {
        const CaseData c = load_case(testing::data_path(f));
        const CaseData back = from_network(to_network(c));
        REQUIRE(back.buses.size() == c.buses.size());
        for (std::size_t k = 0; k < c.buses.size(); ++k) {
            CHECK(back.buses[k].pd == doctest::Approx(c.buses[k].pd).epsilon(1e-12));
            CHECK(back.buses[k].bs == doctest::Approx(c.buses[k].bs).epsilon(1e-12));
        }
        REQUIRE(back.branches.size() == c.branches.size());
        for (std::size_t k = 0; k < c.branches.size(); ++k) {
            CHECK(back.branches[k].x == doctest::Approx(c.branches[k].x).epsilon(1e-12));
            CHECK(back.branches[k].tap == doctest::Approx(c.branches[k].tap).epsilon(1e-12));
        }
        REQUIRE(back.generators.size() == c.generators.size());
        for (std::size_t k = 0; k < c.generators.size(); ++k) {
            CHECK(back.generators[k].qmin == doctest::Approx(c.generators[k].qmin).epsilon(1e-12));
        }
    }
}

TEST_CASE("MATPOWER and JSON serialization round trip") {
    const CaseData c = load_case(testing::data_path("case14.m"));
    CHECK(parse_matpower(serialize_matpower(c)) == c);
    CHECK(parse_case_json(serialize_case_json(c)) == c);
    CHECK(load_case(testing::data_path("case14.json")) == c);
}

TEST_CASE("malformed input reports a line") {
    try {
        parse_matpower("mpc.baseMVA = 100;\nmpc.bus = [\n 1 3 zz 0;\n];\n");
        FAIL("expected CaseError");
    } catch (const CaseError& e) {
        CHECK(e.line() > 0);
    }
    CHECK_THROWS_AS(parse_matpower("garbage"), CaseError);
    CHECK_THROWS_AS(load_case("/nonexistent/case.m"), CaseError);
    CHECK_THROWS_AS(parse_case_json("{\"buses\": 3}"), CaseError);
}

TEST_CASE("validation rejects dangling references") {
    CaseData c = testing::two_bus_case(0.0, 0.1, 50.0);
    c.branches[0].to_bus = 9;
    CHECK_THROWS_AS(validate(c), CaseError);
    c = testing::two_bus_case(0.0, 0.1, 50.0);
    c.generators[0].bus = 7;
    CHECK_THROWS_AS(validate(c), CaseError);
}
