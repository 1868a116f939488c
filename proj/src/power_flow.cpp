#include "convexopf/power_flow.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/SparseLU>

namespace convexopf {

namespace {

enum class Kind { Slack, PV, PQ };

double max_abs(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

PfSolution newton_raphson_pf(const NetworkData& net, const AdmittanceMatrix& y, const Dispatch& dispatch,
                             const PfOptions& options) {
    const std::size_t nb = net.num_buses();
    if (dispatch.pg.size() != net.generators.size() || dispatch.vm.size() != nb) {
        throw std::invalid_argument("dispatch dimensions do not match the network");
    }

    std::vector<Kind> kind(nb, Kind::PQ);
    std::vector<double> p_spec(nb, 0.0);
    std::vector<double> q_spec(nb, 0.0);
    std::vector<int> gens_at(nb, 0);
    for (std::size_t k = 0; k < nb; ++k) {
        p_spec[k] = -net.buses[k].pd;
        q_spec[k] = -net.buses[k].qd;
    }
    for (std::size_t i = 0; i < net.generators.size(); ++i) {
        const auto& g = net.generators[i];
        if (!g.in_service) continue;
        p_spec[g.bus] += dispatch.pg[i];
        ++gens_at[g.bus];
        kind[g.bus] = Kind::PV;
    }
    kind[net.slack] = Kind::Slack;

    // unknown positions: theta for non-slack, V for PQ
    std::vector<int> th_pos(nb, -1);
    std::vector<int> v_pos(nb, -1);
    int nu = 0;
    for (std::size_t k = 0; k < nb; ++k) {
        if (kind[k] != Kind::Slack) th_pos[k] = nu++;
    }
    for (std::size_t k = 0; k < nb; ++k) {
        if (kind[k] == Kind::PQ) v_pos[k] = nu++;
    }

    PfSolution sol;
    sol.vm = dispatch.vm;
    sol.va = dispatch.va.empty() ? std::vector<double>(nb, 0.0) : dispatch.va;

    auto mismatch = [&](std::vector<Complex>& s) {
        s = bus_injections(y, sol.vm, sol.va);
        Eigen::VectorXd f(nu);
        for (std::size_t k = 0; k < nb; ++k) {
            if (th_pos[k] >= 0) f[th_pos[k]] = s[k].real() - p_spec[k];
            if (v_pos[k] >= 0) f[v_pos[k]] = s[k].imag() - q_spec[k];
        }
        return f;
    };

    std::vector<Complex> s;
    Eigen::VectorXd f = mismatch(s);
    double norm = max_abs(f);
    int increases = 0;
    int updates = 0;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    while (norm > options.tol) {
        if (updates >= options.max_iter) {
            sol.message = "iteration limit reached";
            break;
        }
        std::vector<Eigen::Triplet<double>> trip;
        for (std::size_t i = 0; i < nb; ++i) {
            if (th_pos[i] < 0) continue;
            const double vi = sol.vm[i];
            const double pi = s[i].real();
            const double qi = s[i].imag();
            const double gii = y.G.coeff(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
            const double bii = y.B.coeff(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
            const int rp = th_pos[i];
            const int rq = v_pos[i];
            trip.emplace_back(rp, th_pos[i], -qi - bii * vi * vi);
            if (v_pos[i] >= 0) trip.emplace_back(rp, v_pos[i], pi / vi + gii * vi);
            if (rq >= 0) {
                trip.emplace_back(rq, th_pos[i], pi - gii * vi * vi);
                trip.emplace_back(rq, v_pos[i], qi / vi - bii * vi);
            }
            // G and B share a symmetric pattern; column i lists the neighbours of i
            for (Eigen::SparseMatrix<double>::InnerIterator it(y.G, static_cast<Eigen::Index>(i)); it; ++it) {
                const auto k = static_cast<std::size_t>(it.row());
                if (k == i) continue;
                const double g = y.G.coeff(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
                const double b = y.B.coeff(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
                const double t = sol.va[i] - sol.va[k];
                const double c = std::cos(t);
                const double sn = std::sin(t);
                const double vk = sol.vm[k];
                if (th_pos[k] >= 0) {
                    trip.emplace_back(rp, th_pos[k], vi * vk * (g * sn - b * c));
                    if (rq >= 0) trip.emplace_back(rq, th_pos[k], -vi * vk * (g * c + b * sn));
                }
                if (v_pos[k] >= 0) {
                    trip.emplace_back(rp, v_pos[k], vi * (g * c + b * sn));
                    if (rq >= 0) trip.emplace_back(rq, v_pos[k], vi * (g * sn - b * c));
                }
            }
        }
        Eigen::SparseMatrix<double> jac(nu, nu);
        jac.setFromTriplets(trip.begin(), trip.end());
        lu.compute(jac);
        if (lu.info() != Eigen::Success) {
            sol.message = "singular power-flow Jacobian";
            break;
        }
        const Eigen::VectorXd dx = lu.solve(-f);
        for (std::size_t k = 0; k < nb; ++k) {
            if (th_pos[k] >= 0) sol.va[k] += dx[th_pos[k]];
            if (v_pos[k] >= 0) sol.vm[k] += dx[v_pos[k]];
        }
        ++updates;
        f = mismatch(s);
        const double next = max_abs(f);
        increases = next > norm ? increases + 1 : 0;
        norm = next;
        if (!std::isfinite(norm) || increases >= options.divergence_window) {
            sol.message = "power flow diverged";
            break;
        }
    }
    sol.iterations = updates + 1;
    sol.mismatch = norm;
    sol.converged = norm <= options.tol;
    if (sol.converged) sol.message = "converged";

    // generator outputs implied by the solved injections
    sol.pg = dispatch.pg;
    sol.qg.assign(net.generators.size(), 0.0);
    bool slack_done = false;
    for (std::size_t i = 0; i < net.generators.size(); ++i) {
        const auto& g = net.generators[i];
        if (!g.in_service) continue;
        const std::size_t k = g.bus;
        if (k == net.slack && !slack_done) {
            sol.pg[i] += s[k].real() - p_spec[k];
            slack_done = true;
        }
        sol.qg[i] = (s[k].imag() + net.buses[k].qd) / gens_at[k];
    }
    return sol;
}

}  // namespace convexopf
