#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "convexopf/opf_model.hpp"
#include "support.hpp"

using namespace convexopf;

namespace {

OpfModel build(const CaseData& c) {
    const NetworkData net = to_network(c);
    return build_opf(net, build_admittance(net));
}

}  // namespace

TEST_CASE("IEEE-14 model shape") {
    const OpfModel m = build(load_case(testing::data_path("case14.m")));
    std::size_t eq = 0;
    for (const auto& c : m.nlp.constraints) eq += c.sense == Sense::Equal;
    CHECK(eq == 28);
    CHECK(m.nlp.constraints.size() == 28);  // no branch limits in the bundled case
    CHECK(m.layout.pg.size() == 5);
    CHECK(m.layout.qg.size() == 5);
    CHECK(m.layout.vm.size() == 14);
    CHECK(m.layout.va.size() == 14);
    CHECK(m.nlp.num_variables() == 38);
    for (int v : m.layout.vm) {
        CHECK(m.nlp.variables[static_cast<std::size_t>(v)].lower == doctest::Approx(0.94));
        CHECK(m.nlp.variables[static_cast<std::size_t>(v)].upper == doctest::Approx(1.06));
    }
    CHECK_NOTHROW(m.nlp.validate());
}

TEST_CASE("slack angle is fixed") {
    const OpfModel m = build(testing::two_bus_case(0.0, 0.1, 50.0));
    const auto& th = m.nlp.variables[static_cast<std::size_t>(m.layout.va[0])];
    CHECK(th.lower == 0.0);
    CHECK(th.upper == 0.0);
    CHECK(th.role == VariableRole::VoltageAngle);
}

TEST_CASE("flat-start P balance residual") {
    const OpfModel m = build(load_case(testing::data_path("case14.m")));
    std::vector<double> x = m.nlp.initial_point();
    for (int v : m.layout.vm) x[static_cast<std::size_t>(v)] = 1.0;
    for (int v : m.layout.va) x[static_cast<std::size_t>(v)] = 0.0;
    for (std::size_t k = 0; k < m.net.num_buses(); ++k) {
        double expected = -m.net.buses[k].pd;
        for (std::size_t i = 0; i < m.net.generators.size(); ++i) {
            if (m.net.generators[i].bus == k) expected += x[static_cast<std::size_t>(m.layout.pg[i])];
        }
        for (std::size_t j = 0; j < m.net.num_buses(); ++j) expected -= m.y.entry(k, j).real();
        const Constraint& c = m.nlp.constraints[2 * k];
        REQUIRE(c.origin == "P-balance@" + std::to_string(m.net.buses[k].id));
        CHECK(std::abs(c.expr.evaluate(x) - expected) <= 1e-12);
    }
}

TEST_CASE("generation cost in $/h") {
    const OpfModel m = build(testing::two_bus_case(0.0, 0.1, 50.0));
    const std::vector<double> pg{0.5};
    CHECK(generation_cost(m.net, pg) == doctest::Approx(0.01 * 50 * 50 + 10 * 50));
    std::vector<double> x = m.nlp.initial_point();
    x[static_cast<std::size_t>(m.layout.pg[0])] = 0.5;
    CHECK(m.nlp.objective.evaluate(x) == doctest::Approx(525.0));
}

TEST_CASE("branch limits add squared flow constraints") {
    CaseData c = testing::two_bus_case(0.01, 0.1, 50.0);
    c.branches[0].s_max = 80.0;
    const OpfModel m = build(c);
    int flows = 0;
    for (const auto& con : m.nlp.constraints) flows += con.sense == Sense::LessEqual;
    CHECK(flows == 2);
}

TEST_CASE("inverted generator limits are rejected") {
    CaseData c = testing::two_bus_case(0.0, 0.1, 50.0);
    c.generators[0].qmin = 10.0;
    c.generators[0].qmax = -10.0;
    CHECK_THROWS(build(c));
}

TEST_CASE("two-bus model dump matches golden file") {
    const OpfModel m = build(parse_matpower(testing::kTwoBusText));
    const std::string path = std::string(CONVEXOPF_TEST_DIR) + "/golden/two_bus_model.txt";
    if (std::getenv("CONVEXOPF_UPDATE_GOLDEN")) {
        std::ofstream(path) << m.nlp.dump();
    }
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(m.nlp.dump() == ss.str());
}
