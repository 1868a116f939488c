#include <doctest.h>

#include <cmath>

#include "convexopf/ipm.hpp"
#include "convexopf/opf_model.hpp"
#include "convexopf/power_flow.hpp"
#include "support.hpp"

using namespace convexopf;

TEST_CASE("unloaded flat network converges at once") {
    const NetworkData net = to_network(testing::two_bus_case(0.01, 0.1, 0.0));
    const AdmittanceMatrix y = build_admittance(net);
    const PfSolution pf = newton_raphson_pf(net, y, {{0.0}, {1.0, 1.0}, {}});
    CHECK(pf.converged);
    CHECK(pf.iterations == 1);
    CHECK(pf.vm[1] == doctest::Approx(1.0));
    CHECK(pf.va[1] == doctest::Approx(0.0));
}

TEST_CASE("two-bus closed form") {
    const NetworkData net = to_network(testing::two_bus_case(0.0, 0.1, 50.0));
    const AdmittanceMatrix y = build_admittance(net);
    const PfSolution pf = newton_raphson_pf(net, y, {{0.0}, {1.0, 1.0}, {}});
    REQUIRE(pf.converged);
    // Q2 = 0: V2 = cos(theta2); P2 = -0.5: sin(2 theta2) = -0.1
    const double th = -std::asin(0.1) / 2;
    CHECK(std::abs(pf.va[1] - th) <= 1e-8);
    CHECK(std::abs(pf.vm[1] - std::cos(th)) <= 1e-8);
    CHECK(pf.pg[0] == doctest::Approx(0.5).epsilon(1e-8));  // lossless: slack supplies the load
    CHECK(pf.mismatch <= 1e-8);
    CHECK(pf.iterations <= 31);
}

TEST_CASE("divergence is detected") {
    // far beyond the transfer limit of a 0.1 p.u. reactance
    const NetworkData net = to_network(testing::two_bus_case(0.0, 0.1, 2000.0));
    const AdmittanceMatrix y = build_admittance(net);
    const PfSolution pf = newton_raphson_pf(net, y, {{0.0}, {1.0, 1.0}, {}});
    CHECK(!pf.converged);
    CHECK(!pf.message.empty());
}

TEST_CASE("dimension mismatch throws") {
    const NetworkData net = to_network(testing::two_bus_case(0.0, 0.1, 50.0));
    CHECK_THROWS(newton_raphson_pf(net, build_admittance(net), {{0.0}, {1.0}, {}}));
}

TEST_CASE("IEEE-14 at the OPF dispatch") {
    const NetworkData net = to_network(load_case(testing::data_path("case14.m")));
    const AdmittanceMatrix y = build_admittance(net);
    const OpfModel opf = build_opf(net, y);
    const Solution s = solve(opf.nlp);
    REQUIRE(s.status == SolverStatus::Optimal);
    Dispatch d;
    for (int v : opf.layout.pg) d.pg.push_back(s.x[static_cast<std::size_t>(v)]);
    for (int v : opf.layout.vm) d.vm.push_back(s.x[static_cast<std::size_t>(v)]);
    const PfSolution pf = newton_raphson_pf(net, y, d);  // flat angles
    REQUIRE(pf.converged);
    for (std::size_t k = 0; k < net.num_buses(); ++k) {
        CHECK(pf.va[k] == doctest::Approx(s.x[static_cast<std::size_t>(opf.layout.va[k])]).epsilon(1e-5));
    }
    CHECK(generation_cost(net, pf.pg) == doctest::Approx(s.objective).epsilon(1e-6));
}
