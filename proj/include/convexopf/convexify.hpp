#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "convexopf/ipm.hpp"
#include "convexopf/nlp_model.hpp"
#include "convexopf/opf_model.hpp"
#include "convexopf/signomial.hpp"

namespace convexopf {

struct ConvexifyOptions {
    double max_angle_diff = 0.6;  // rad, bound on every angle-difference variable
    std::vector<double> exponent_grid = default_exponent_grid();
    InverseMode inverse_mode = InverseMode::Equality;
    double drop_tol = 1e-14;      // relative coefficient cutoff in signomial expansion
    std::size_t node_limit = 2'000'000;
};

/// Reactive powers become Qtr = Qg + q_offset and angles theta' = theta + 2 pi.
/// Variables keep their slots; original = shifted - offset.
struct ShiftRecord {
    double q_offset = 0.0;  // |most negative Qmin| over all generators
    double angle_offset = 0.0;
    std::vector<int> q_vars;
    std::vector<int> angle_vars;
    std::size_t num_variables = 0;  // variable count of the unshifted model
};

struct AnglePair {
    int theta_a = -1;  // model variable indices, delta = theta_a - theta_b
    int theta_b = -1;
    int delta = -1;
};

struct TaylorRecord {
    int sin_order = 3;
    int cos_order = 2;
    double max_angle_diff = 0.6;
    std::vector<AnglePair> pairs;
    std::size_t sin_substituted = 0;
    std::size_t cos_substituted = 0;

    double sin_remainder_bound() const;  // Delta^5 / 120
    double cos_remainder_bound() const;  // Delta^4 / 24
};

struct LiftRecord {
    int base = -1;
    double power = 1.0;
    int lifted = -1;
};

struct StageCount {
    std::string stage;
    std::size_t variables = 0;
    std::size_t equalities = 0;
    std::size_t inequalities = 0;
};

struct ConvexModel {
    NlpModel nlp;
    TransformationPlan plan;
    ShiftRecord shifts;
    TaylorRecord taylor;
    std::map<int, double> positivity_offsets;  // var -> offset added so its lower bound is 1
    std::vector<LiftRecord> lifts;
    std::vector<InverseRecord> inverses;
    std::map<PlanKey, int> transformed_vars;
    InverseMode inverse_mode = InverseMode::Equality;
    std::vector<StageCount> stages;
};

std::pair<NlpModel, ShiftRecord> shift_positive(const NlpModel& model);

/// Replaces sin/cos of angle differences by their Taylor polynomials in
/// auxiliary angle-difference variables bounded by +-max_angle_diff.
/// Throws ModelError for a sin/cos argument that is not theta_n - theta_m.
std::pair<NlpModel, TaylorRecord> taylor_substitute(const NlpModel& model, double max_angle_diff = 0.6);

/// Signomial reformulation of a shifted, Taylor-substituted model.
/// Throws NoPlanFound (with constraint origins in its message) when some
/// terms cannot be convexified, ModelError for a concave objective.
ConvexModel reformulate(const NlpModel& model, const ConvexifyOptions& options = {});

/// shift_positive + taylor_substitute + reformulate.
ConvexModel convexify(const NlpModel& original, const ConvexifyOptions& options = {});

/// Origins of constraints (or "objective") whose signomial terms are not all
/// certified convex. Tagged inverse equalities are exempt.
std::vector<std::string> convexity_violations(const ConvexModel& model);

struct RecoveredPoint {
    std::vector<double> x;         // in the original model's variable space
    double max_inverse_gap = 0.0;  // max |X - x^(1/p)| and |u - x^q|
};

RecoveredPoint recover(const Solution& solution, const ConvexModel& model);

/// Initial point of the convex model mapped from a point of the original model.
std::vector<double> map_initial_point(const ConvexModel& model, std::span<const double> original_x);

/// JSON pipeline trace: stage counts, transformed variables, remainder bounds.
std::string pipeline_trace_json(const ConvexModel& model);

}  // namespace convexopf
