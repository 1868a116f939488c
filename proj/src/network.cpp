#include "convexopf/network.hpp"

#include <cmath>

namespace convexopf {

AdmittanceMatrix build_admittance(const NetworkData& net) {
    const std::size_t n = net.num_buses();
    AdmittanceMatrix y;
    y.dimension = n;
    y.shunts.resize(n);

    std::vector<Eigen::Triplet<double>> g_trip;
    std::vector<Eigen::Triplet<double>> b_trip;
    auto add = [&](std::size_t r, std::size_t c, Complex v) {
        g_trip.emplace_back(static_cast<int>(r), static_cast<int>(c), v.real());
        b_trip.emplace_back(static_cast<int>(r), static_cast<int>(c), v.imag());
    };

    for (std::size_t k = 0; k < net.branches.size(); ++k) {
        const auto& br = net.branches[k];
        if (!br.in_service) continue;
        if (br.r == 0.0 && br.x == 0.0) {
            throw CaseError("branch " + std::to_string(k + 1) + " has zero impedance");
        }
        if (br.shift_rad != 0.0) {
            throw CaseError("branch " + std::to_string(k + 1) + ": phase shifting transformers are unsupported");
        }
        const Complex ys = 1.0 / Complex(br.r, br.x);
        const Complex ych(0.0, br.b / 2.0);
        const double tap = br.tap;

        BranchAdmittance ba;
        ba.branch = k;
        ba.from = br.from;
        ba.to = br.to;
        ba.yff = (ys + ych) / (tap * tap);
        ba.yft = -ys / tap;
        ba.ytf = -ys / tap;
        ba.ytt = ys + ych;
        ba.s_max = br.s_max;
        y.branches.push_back(ba);

        add(br.from, br.from, ba.yff);
        add(br.from, br.to, ba.yft);
        add(br.to, br.from, ba.ytf);
        add(br.to, br.to, ba.ytt);
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto& bus = net.buses[i];
        y.shunts[i] = Complex(bus.gs, bus.bs);
        // always present so every bus has a diagonal entry in the pattern
        add(i, i, y.shunts[i]);
    }

    y.G.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    y.B.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    y.G.setFromTriplets(g_trip.begin(), g_trip.end());
    y.B.setFromTriplets(b_trip.begin(), b_trip.end());
    y.G.makeCompressed();
    y.B.makeCompressed();
    return y;
}

namespace {

Complex phasor(double v, double theta) { return std::polar(v, theta); }

}  // namespace

std::pair<Complex, Complex> branch_flows(const BranchAdmittance& branch, std::span<const double> v,
                                         std::span<const double> theta) {
    const Complex vf = phasor(v[branch.from], theta[branch.from]);
    const Complex vt = phasor(v[branch.to], theta[branch.to]);
    const Complex i_from = branch.yff * vf + branch.yft * vt;
    const Complex i_to = branch.ytf * vf + branch.ytt * vt;
    return {vf * std::conj(i_from), vt * std::conj(i_to)};
}

std::pair<double, double> apparent_flow_sq(const BranchAdmittance& branch, std::span<const double> v,
                                           std::span<const double> theta) {
    auto [sf, st] = branch_flows(branch, v, theta);
    return {std::norm(sf), std::norm(st)};
}

std::vector<Complex> bus_injections(const AdmittanceMatrix& y, std::span<const double> v,
                                    std::span<const double> theta) {
    const std::size_t n = y.dimension;
    std::vector<Complex> vc(n);
    for (std::size_t i = 0; i < n; ++i) vc[i] = phasor(v[i], theta[i]);
    std::vector<Complex> current(n, Complex{});
    for (int col = 0; col < y.G.outerSize(); ++col) {
        Eigen::SparseMatrix<double>::InnerIterator git(y.G, col);
        Eigen::SparseMatrix<double>::InnerIterator bit(y.B, col);
        for (; git; ++git, ++bit) {
            current[static_cast<std::size_t>(git.row())] += Complex(git.value(), bit.value()) * vc[static_cast<std::size_t>(col)];
        }
    }
    std::vector<Complex> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = vc[i] * std::conj(current[i]);
    return s;
}

}  // namespace convexopf
