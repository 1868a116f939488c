#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "convexopf/nlp_model.hpp"

namespace convexopf {

enum class SolverStatus { Optimal, MaxIter, Infeasible, NumericalFailure };

std::string to_string(SolverStatus status);

enum class MuStrategy {
    Adaptive,  // Mehrotra probing: sigma = (mu_affine / mu)^3
    Monotone,  // barrier subproblems solved to kappa_eps * mu, then mu shrinks
};

struct SolverOptions {
    double tol = 1e-6;                    // scaled KKT error for Optimal
    int max_iter = 500;
    MuStrategy mu_strategy = MuStrategy::Adaptive;
    double mu_init = 0.1;
    double bound_push = 1e-2;
    double regularization_init = 1e-8;    // first inertia-correction shift
    double regularization_growth = 10.0;
    double regularization_max = 1e20;
    int dense_threshold = 200;            // dense LDLT below this many free variables
    bool line_search = true;
};

struct IterationRecord {
    int iter = 0;
    double objective = 0.0;
    double inf_pr = 0.0;
    double inf_du = 0.0;
    double mu = 0.0;
    double alpha_pr = 0.0;
    double alpha_du = 0.0;
};

/// Multipliers follow L = f + sum lambda_i g_i - z_lower (x - l) - z_upper (u - x),
/// so lambda_i >= 0 for inequality rows and z >= 0.
struct Solution {
    SolverStatus status = SolverStatus::NumericalFailure;
    std::string message;
    std::vector<double> x;
    std::vector<double> lambda;
    std::vector<double> z_lower;
    std::vector<double> z_upper;
    double objective = 0.0;
    double max_equality_residual = 0.0;
    double max_inequality_violation = 0.0;
    double kkt_error = 0.0;  // scaled, as used for termination
    int iterations = 0;
    double wall_time = 0.0;
    std::vector<IterationRecord> log;
};

/// Primal-dual interior point method. `x0` defaults to the model's initial
/// values; it is pushed strictly inside the bounds before the first iteration.
Solution solve(const NlpModel& model, const SolverOptions& options = {},
               const std::optional<std::vector<double>>& x0 = std::nullopt);

/// KKT residuals recomputed from the model and a solution, independently of
/// the solver internals. Relative measures divide by the natural magnitude of
/// the terms involved.
struct KktReport {
    double stationarity = 0.0;      // ||grad L||_inf
    double stationarity_rel = 0.0;
    double primal = 0.0;            // max constraint/bound violation
    double complementarity = 0.0;   // max |lambda_i g_i|, |z (x - bound)|
    double complementarity_rel = 0.0;  // divided by max(1, ||grad f||_inf)
    double dual_sign = 0.0;         // most negative inequality or bound multiplier, as a positive number
    bool satisfied(double tol) const {
        return stationarity_rel <= tol && primal <= tol && complementarity_rel <= tol && dual_sign <= tol;
    }
};

KktReport verify_kkt(const NlpModel& model, const Solution& solution);

void write_iteration_csv(std::ostream& out, const std::vector<IterationRecord>& log);

}  // namespace convexopf
