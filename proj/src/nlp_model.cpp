#include "convexopf/nlp_model.hpp"

#include <cmath>
#include <sstream>

namespace convexopf {

std::string to_string(VariableRole role) {
    switch (role) {
    case VariableRole::ActivePower: return "active-power";
    case VariableRole::ReactivePower: return "reactive-power";
    case VariableRole::VoltageMagnitude: return "voltage-magnitude";
    case VariableRole::VoltageAngle: return "voltage-angle";
    case VariableRole::AngleDifference: return "angle-difference";
    case VariableRole::Lifted: return "lifted";
    case VariableRole::Transformed: return "transformed";
    case VariableRole::Generic: return "generic";
    }
    return "generic";
}

int NlpModel::add_variable(VariableInfo info) {
    variables.push_back(std::move(info));
    return static_cast<int>(variables.size()) - 1;
}

void NlpModel::add_constraint(Expression expr, Sense sense, std::string origin) {
    constraints.push_back({std::move(expr), sense, std::move(origin)});
}

std::vector<double> NlpModel::initial_point() const {
    std::vector<double> x(variables.size());
    for (std::size_t i = 0; i < variables.size(); ++i) x[i] = variables[i].initial;
    return x;
}

int NlpModel::find_variable(const std::string& name) const {
    for (std::size_t i = 0; i < variables.size(); ++i) {
        if (variables[i].name == name) return static_cast<int>(i);
    }
    return -1;
}

void NlpModel::validate() const {
    const int n = static_cast<int>(variables.size());
    for (const auto& v : variables) {
        if (!(v.lower <= v.upper)) throw ModelError("variable " + v.name + " has inverted bounds");
        if (!std::isfinite(v.initial)) throw ModelError("variable " + v.name + " has a non-finite initial value");
    }
    auto check = [&](const Expression& e, const std::string& where) {
        for (int idx : e.variables()) {
            if (idx >= n) throw ModelError(where + " references unknown variable " + std::to_string(idx));
        }
    };
    check(objective, "objective");
    for (const auto& c : constraints) check(c.expr, "constraint " + c.origin);
}

std::string NlpModel::dump() const {
    std::ostringstream out;
    out.precision(12);
    out << "variables " << variables.size() << "\n";
    for (std::size_t i = 0; i < variables.size(); ++i) {
        const auto& v = variables[i];
        out << "  x" << i << " " << v.name << " [" << v.lower << ", " << v.upper << "] init " << v.initial << " "
            << to_string(v.role) << "\n";
    }
    out << "objective " << objective.to_string() << "\n";
    out << "constraints " << constraints.size() << "\n";
    for (const auto& c : constraints) {
        out << "  " << c.origin << ": " << c.expr.to_string() << (c.sense == Sense::Equal ? " == 0" : " <= 0") << "\n";
    }
    return out.str();
}

double max_violation(const NlpModel& model, std::span<const double> x) {
    double worst = 0.0;
    for (std::size_t i = 0; i < model.variables.size(); ++i) {
        worst = std::max({worst, model.variables[i].lower - x[i], x[i] - model.variables[i].upper});
    }
    for (const auto& c : model.constraints) {
        const double g = c.expr.evaluate(x);
        worst = std::max(worst, c.sense == Sense::Equal ? std::abs(g) : g);
    }
    return worst;
}

}  // namespace convexopf
