#pragma once

#include <string>
#include <vector>

#include "convexopf/network.hpp"

namespace convexopf {

/// Fixed generator setpoints for a power-flow run, per-unit.
struct Dispatch {
    std::vector<double> pg;  // per generator
    std::vector<double> vm;  // per bus: setpoint at slack/PV buses, initial guess elsewhere
    std::vector<double> va;  // per bus initial guess, rad (may be empty: flat)
};

struct PfOptions {
    double tol = 1e-8;      // max |mismatch|, p.u.
    int max_iter = 30;  // Newton updates
    int divergence_window = 5;  // consecutive mismatch increases that count as divergence
};

struct PfSolution {
    std::vector<double> vm;
    std::vector<double> va;
    bool converged = false;
    double mismatch = 0.0;
    int iterations = 0;  // mismatch evaluations, i.e. Newton updates + 1
    std::string message;
    std::vector<double> pg;  // per generator, slack bus generation adjusted
    std::vector<double> qg;  // per generator, reactive output shared equally per bus
};

/// Polar Newton-Raphson: the slack bus holds V and theta, buses with an
/// in-service generator hold P and V, the rest are PQ.
PfSolution newton_raphson_pf(const NetworkData& net, const AdmittanceMatrix& y, const Dispatch& dispatch,
                             const PfOptions& options = {});

}  // namespace convexopf
