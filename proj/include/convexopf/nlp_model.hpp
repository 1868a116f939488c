#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

#include "convexopf/expression.hpp"

namespace convexopf {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class VariableRole {
    ActivePower,
    ReactivePower,
    VoltageMagnitude,
    VoltageAngle,
    AngleDifference,
    Lifted,
    Transformed,
    Generic,
};

std::string to_string(VariableRole role);

struct VariableInfo {
    std::string name;
    double lower = -kInfinity;
    double upper = kInfinity;
    double initial = 0.0;
    VariableRole role = VariableRole::Generic;
    int element = -1;  // bus, generator or pair index the variable belongs to
};

/// expr == 0 or expr <= 0
enum class Sense { Equal, LessEqual };

struct Constraint {
    Expression expr;
    Sense sense = Sense::Equal;
    std::string origin;  // e.g. "P-balance@3"
};

class ModelError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A smooth NLP: minimize objective subject to constraints and simple bounds.
struct NlpModel {
    std::vector<VariableInfo> variables;
    Expression objective;
    std::vector<Constraint> constraints;

    int add_variable(VariableInfo info);
    Expression var(int index) const { return Expression::variable(index); }
    void add_constraint(Expression expr, Sense sense, std::string origin);

    std::size_t num_variables() const { return variables.size(); }
    std::vector<double> initial_point() const;
    int find_variable(const std::string& name) const;  // -1 if absent

    /// Throws ModelError on out-of-range variable references, inverted bounds
    /// or non-finite initial values.
    void validate() const;

    /// Deterministic text listing of variables, objective and constraints.
    std::string dump() const;
};

/// Largest constraint or bound violation at x.
double max_violation(const NlpModel& model, std::span<const double> x);

}  // namespace convexopf
