#include <doctest.h>

#include <cmath>

#include "convexopf/network.hpp"
#include "support.hpp"

using namespace convexopf;

namespace {

// Textbook dense assembly, independent of the sparse builder.
std::vector<std::vector<Complex>> dense_ybus(const NetworkData& net) {
    const std::size_t n = net.num_buses();
    std::vector<std::vector<Complex>> y(n, std::vector<Complex>(n));
    for (std::size_t k = 0; k < n; ++k) {
        y[k][k] += Complex(net.buses[k].gs, net.buses[k].bs);  // already per-unit
    }
    for (const auto& br : net.branches) {
        if (!br.in_service) continue;
        const Complex ys = 1.0 / Complex(br.r, br.x);
        const Complex half(0.0, br.b / 2.0);
        const double t = br.tap;
        y[br.from][br.from] += (ys + half) / (t * t);
        y[br.to][br.to] += ys + half;
        y[br.from][br.to] -= ys / t;
        y[br.to][br.from] -= ys / t;
    }
    return y;
}

}  // namespace

TEST_CASE("lossless two-bus admittance") {
    const NetworkData net = to_network(testing::two_bus_case(0.0, 0.1, 50.0));
    const AdmittanceMatrix y = build_admittance(net);
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            CHECK(y.entry(i, j).real() == doctest::Approx(0.0));
            CHECK(y.entry(i, j).imag() == doctest::Approx(i == j ? -10.0 : 10.0));
        }
    }
}

TEST_CASE("purely resistive two-bus admittance") {
    const NetworkData net = to_network(testing::two_bus_case(0.1, 0.0, 50.0));
    const AdmittanceMatrix y = build_admittance(net);
    CHECK(y.entry(0, 0).real() == doctest::Approx(10.0));
    CHECK(y.entry(0, 1).real() == doctest::Approx(-10.0));
    CHECK(y.entry(0, 0).imag() == doctest::Approx(0.0));
}

TEST_CASE("zero impedance is rejected") {
    CHECK_THROWS_AS(build_admittance(to_network(testing::two_bus_case(0.0, 0.0, 50.0))), CaseError);
}

TEST_CASE("IEEE cases match dense assembly") {
    for (const char* f : {"case14.m", "case118.m"}) {
        const NetworkData net = to_network(load_case(testing::data_path(f)));
        const AdmittanceMatrix y = build_admittance(net);
        const auto ref = dense_ybus(net);
        double worst = 0.0;
        for (std::size_t i = 0; i < net.num_buses(); ++i) {
            for (std::size_t j = 0; j < net.num_buses(); ++j) worst = std::max(worst, std::abs(y.entry(i, j) - ref[i][j]));
        }
        CHECK(worst <= 1e-10);
    }
}

TEST_CASE("branch flows") {
    const NetworkData net = to_network(testing::two_bus_case(0.0, 0.1, 50.0));
    const AdmittanceMatrix y = build_admittance(net);
    const auto& br = y.branches.at(0);

    const std::vector<double> v{1.0, 1.0};
    const std::vector<double> same{0.2, 0.2};
    const auto [sf0, st0] = apparent_flow_sq(br, v, same);
    CHECK(sf0 == doctest::Approx(0.0));
    CHECK(st0 == doctest::Approx(0.0));

    const std::vector<double> th{0.1, 0.0};
    const Complex vf = std::polar(1.0, 0.1);
    const Complex vt = std::polar(1.0, 0.0);
    const Complex s = vf * std::conj((vf - vt) / Complex(0.0, 0.1));
    const auto [sf, st] = apparent_flow_sq(br, v, th);
    CHECK(std::abs(sf - std::norm(s)) <= 1e-12);
    const auto [cf, ct] = branch_flows(br, v, th);
    CHECK(std::abs(cf - s) <= 1e-12);
    CHECK(std::norm(ct) == doctest::Approx(st));
}

TEST_CASE("bus injections sum the branch flows") {
    const NetworkData net = to_network(load_case(testing::data_path("case14.m")));
    const AdmittanceMatrix y = build_admittance(net);
    std::vector<double> v(net.num_buses());
    std::vector<double> th(net.num_buses());
    for (std::size_t k = 0; k < v.size(); ++k) {
        v[k] = 1.0 + 0.01 * static_cast<double>(k % 5);
        th[k] = -0.02 * static_cast<double>(k);
    }
    std::vector<Complex> acc(net.num_buses());
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] = std::conj(y.shunts[k]) * v[k] * v[k];
    for (const auto& br : y.branches) {
        const auto [f, t] = branch_flows(br, v, th);
        acc[br.from] += f;
        acc[br.to] += t;
    }
    const auto s = bus_injections(y, v, th);
    for (std::size_t k = 0; k < acc.size(); ++k) CHECK(std::abs(s[k] - acc[k]) <= 1e-10);
}
