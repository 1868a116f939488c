#include "convexopf/convexify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include <json.hpp>

namespace convexopf {

namespace {

StageCount count_stage(const std::string& name, const NlpModel& m) {
    StageCount s{name, m.num_variables(), 0, 0};
    for (const auto& c : m.constraints) (c.sense == Sense::Equal ? s.equalities : s.inequalities)++;
    return s;
}

void substitute_all(NlpModel& m, const std::map<int, Expression>& repl) {
    if (repl.empty()) return;
    m.objective = substitute(m.objective, repl);
    for (auto& c : m.constraints) c.expr = substitute(c.expr, repl);
}

int sign_of(double c) { return c > 0.0 ? 1 : -1; }

SignomialTerm unit_term(const SignomialTerm& t, int sign) {
    SignomialTerm u = t;
    u.coefficient = sign;
    return u;
}

}  // namespace

double TaylorRecord::sin_remainder_bound() const { return std::pow(max_angle_diff, 5) / 120.0; }
double TaylorRecord::cos_remainder_bound() const { return std::pow(max_angle_diff, 4) / 24.0; }

std::pair<NlpModel, ShiftRecord> shift_positive(const NlpModel& model) {
    NlpModel out = model;
    ShiftRecord rec;
    rec.num_variables = model.num_variables();
    rec.angle_offset = 2.0 * std::numbers::pi;
    double qmin = 0.0;
    for (std::size_t i = 0; i < model.variables.size(); ++i) {
        const auto& v = model.variables[i];
        if (v.role == VariableRole::ReactivePower) {
            rec.q_vars.push_back(static_cast<int>(i));
            qmin = std::min(qmin, v.lower);
        } else if (v.role == VariableRole::VoltageAngle) {
            rec.angle_vars.push_back(static_cast<int>(i));
        }
    }
    rec.q_offset = -qmin;

    std::map<int, Expression> repl;
    auto shift = [&](int idx, double off, const std::string& prefix) {
        auto& v = out.variables[static_cast<std::size_t>(idx)];
        v.lower += off;
        v.upper += off;
        v.initial += off;
        v.name = prefix + v.name;
        repl[idx] = Expression::variable(idx) - off;
    };
    for (int i : rec.q_vars) {
        if (rec.q_offset != 0.0) shift(i, rec.q_offset, "tr:");
    }
    for (int i : rec.angle_vars) shift(i, rec.angle_offset, "tr:");
    substitute_all(out, repl);
    return {std::move(out), std::move(rec)};
}

std::pair<NlpModel, TaylorRecord> taylor_substitute(const NlpModel& model, double max_angle_diff) {
    if (!(max_angle_diff > 0.0)) throw std::invalid_argument("max angle difference must be positive");
    NlpModel out = model;
    TaylorRecord rec;
    rec.max_angle_diff = max_angle_diff;
    std::map<std::pair<int, int>, int> pair_index;

    auto delta_for = [&](int a, int b) -> int {
        auto [it, inserted] = pair_index.try_emplace({a, b}, static_cast<int>(rec.pairs.size()));
        if (!inserted) return rec.pairs[static_cast<std::size_t>(it->second)].delta;
        const auto& va = out.variables[static_cast<std::size_t>(a)];
        const auto& vb = out.variables[static_cast<std::size_t>(b)];
        const double init = std::clamp(va.initial - vb.initial, -max_angle_diff, max_angle_diff);
        const int d = out.add_variable({"delta[" + va.name + "," + vb.name + "]", -max_angle_diff, max_angle_diff, init,
                                        VariableRole::AngleDifference, it->second});
        rec.pairs.push_back({a, b, d});
        return d;
    };

    auto rewrite = [&](const Expression& e) -> Expression {
        const Node& n = e.node();
        if (n.kind != NodeKind::Sin && n.kind != NodeKind::Cos) return e;
        const auto parts = decompose_sum(n.children[0]);
        bool ok = parts.terms.size() == 2 && std::abs(parts.constant) < 1e-9;
        int plus = -1;
        int minus = -1;
        if (ok) {
            for (const auto& [w, t] : parts.terms) {
                if (t.kind() != NodeKind::Variable) ok = false;
                else if (w == 1.0) plus = t.node().var;
                else if (w == -1.0) minus = t.node().var;
                else ok = false;
            }
        }
        if (!ok || plus < 0 || minus < 0) {
            throw ModelError("unsupported trigonometric argument " + n.children[0].to_string());
        }
        const int a = std::min(plus, minus);
        const int b = std::max(plus, minus);
        const double orient = plus == a ? 1.0 : -1.0;
        const Expression d = Expression::variable(delta_for(a, b));
        if (n.kind == NodeKind::Sin) {
            ++rec.sin_substituted;
            return Expression::sum({d, pow(d, 3.0)}, {orient, -orient / 6.0});
        }
        ++rec.cos_substituted;
        return Expression::sum({pow(d, 2.0)}, {-0.5}, 1.0);
    };

    for (auto& c : out.constraints) c.expr = transform(c.expr, rewrite);
    out.objective = transform(out.objective, rewrite);
    for (const auto& p : rec.pairs) {
        const std::string tag = out.variables[static_cast<std::size_t>(p.theta_a)].name + "-" +
                                out.variables[static_cast<std::size_t>(p.theta_b)].name;
        out.add_constraint(Expression::sum({Expression::variable(p.delta), Expression::variable(p.theta_a),
                                            Expression::variable(p.theta_b)},
                                           {1.0, -1.0, 1.0}),
                           Sense::Equal, "angle-diff@" + tag);
    }
    return {std::move(out), std::move(rec)};
}

namespace {

struct WorkConstraint {
    Signomial sig;
    Sense sense = Sense::Equal;
    std::string origin;
    bool nonlinear() const { return !sig.is_affine(); }
};

Signomial negate(Signomial s) {
    s.constant = -s.constant;
    for (auto& t : s.terms) t.coefficient = -t.coefficient;
    return s;
}

}  // namespace

ConvexModel reformulate(const NlpModel& input, const ConvexifyOptions& opt) {
    ConvexModel cm;
    cm.inverse_mode = opt.inverse_mode;
    NlpModel m = input;
    cm.stages.push_back(count_stage("input", m));

    auto expand = [&](const Expression& e, const std::string& origin) {
        try {
            return to_signomial(e, opt.drop_tol);
        } catch (const NotSignomial& ex) {
            throw ModelError(origin + ": " + ex.what());
        }
    };

    // Positivity: variables inside nonlinear constraint terms get lower bound 1.
    {
        std::set<int> nonlinear_vars;
        for (const auto& c : m.constraints) {
            for (const auto& t : expand(c.expr, c.origin).terms) {
                if (!t.is_linear()) {
                    for (const auto& [v, p] : t.powers) nonlinear_vars.insert(v);
                }
            }
        }
        std::map<int, Expression> repl;
        for (int v : nonlinear_vars) {
            auto& info = m.variables[static_cast<std::size_t>(v)];
            if (info.lower > 0.0) continue;
            if (!std::isfinite(info.lower)) throw ModelError("variable " + info.name + " needs a finite lower bound");
            const double off = 1.0 - info.lower;
            info.lower += off;
            info.upper += off;
            info.initial += off;
            info.name = "pos:" + info.name;
            cm.positivity_offsets[v] = off;
            repl[v] = Expression::variable(v) - off;
        }
        substitute_all(m, repl);
    }
    cm.stages.push_back(count_stage("positive", m));

    std::vector<WorkConstraint> work;
    for (const auto& c : m.constraints) work.push_back({expand(c.expr, c.origin), c.sense, c.origin});

    // Lift factors of multi-variable terms that no grid exponent choice can
    // convexify, u = x^q, shared per (x, q).
    std::map<std::pair<int, double>, int> lift_index;
    std::vector<WorkConstraint> lift_defs;
    std::map<std::pair<std::map<int, double>, int>, bool> reducible_cache;
    auto reducible = [&](const SignomialTerm& t, int sign) {
        auto key = std::make_pair(t.powers, sign);
        auto it = reducible_cache.find(key);
        if (it != reducible_cache.end()) return it->second;
        const bool r = term_is_reducible(unit_term(t, sign), opt.exponent_grid);
        reducible_cache.emplace(std::move(key), r);
        return r;
    };
    for (auto& wc : work) {
        if (!wc.nonlinear()) continue;
        std::map<std::map<int, double>, double> merged;
        bool lifted_any = false;
        for (const auto& t : wc.sig.terms) {
            bool need = false;
            if (t.powers.size() >= 2 && !t.is_linear()) {
                const bool has_power = std::any_of(t.powers.begin(), t.powers.end(), [](const auto& f) { return f.second != 1.0; });
                if (has_power) {
                    std::vector<int> signs = wc.sense == Sense::Equal ? std::vector<int>{1, -1} : std::vector<int>{sign_of(t.coefficient)};
                    for (int s : signs) {
                        if (!is_convex_class(classify_term(unit_term(t, s))) && !reducible(t, s)) need = true;
                    }
                }
            }
            std::map<int, double> powers = t.powers;
            if (need) {
                lifted_any = true;
                std::map<int, double> lifted;
                for (const auto& [v, q] : t.powers) {
                    if (q == 1.0) {
                        lifted[v] += 1.0;
                        continue;
                    }
                    auto [it, inserted] = lift_index.try_emplace({v, q}, -1);
                    if (inserted) {
                        const auto& base = m.variables[static_cast<std::size_t>(v)];
                        double lo = std::pow(base.lower, q);
                        double hi = std::pow(base.upper, q);
                        if (lo > hi) std::swap(lo, hi);
                        std::string qs = std::to_string(q);
                        qs.erase(qs.find_last_not_of('0') + 1);
                        if (!qs.empty() && qs.back() == '.') qs.pop_back();
                        const int u = m.add_variable({"lift:" + base.name + "^" + qs, lo, hi, std::pow(base.initial, q),
                                                      VariableRole::Lifted, v});
                        it->second = u;
                        cm.lifts.push_back({v, q, u});
                        Signomial def;
                        def.terms.push_back({1.0, {{u, 1.0}}});
                        def.terms.push_back({-1.0, {{v, q}}});
                        lift_defs.push_back({def, Sense::Equal, "lift@" + m.variables[static_cast<std::size_t>(u)].name});
                    }
                    lifted[it->second] += 1.0;
                }
                powers = std::move(lifted);
            }
            merged[powers] += t.coefficient;
        }
        if (lifted_any) {
            wc.sig.terms.clear();
            for (const auto& [p, c] : merged) {
                if (c != 0.0) wc.sig.terms.push_back({c, p});
            }
        }
    }
    work.insert(work.end(), lift_defs.begin(), lift_defs.end());
    {
        StageCount s{"lifted", m.num_variables(), 0, 0};
        for (const auto& wc : work) (wc.sense == Sense::Equal ? s.equalities : s.inequalities)++;
        cm.stages.push_back(s);
    }

    // Split nonlinear equalities into inequality pairs.
    std::vector<WorkConstraint> split;
    for (auto& wc : work) {
        if (wc.nonlinear() && wc.sense == Sense::Equal) {
            split.push_back({wc.sig, Sense::LessEqual, wc.origin + "/le"});
            split.push_back({negate(wc.sig), Sense::LessEqual, wc.origin + "/ge"});
        } else {
            split.push_back(std::move(wc));
        }
    }
    {
        StageCount s{"split", m.num_variables(), 0, 0};
        for (const auto& wc : split) (wc.sense == Sense::Equal ? s.equalities : s.inequalities)++;
        cm.stages.push_back(s);
    }

    // Plan over the distinct nonconvex term shapes.
    std::vector<SignomialTerm> shapes;
    std::map<std::pair<std::map<int, double>, int>, std::size_t> shape_index;
    std::vector<std::string> shape_origin;
    for (const auto& wc : split) {
        for (const auto& t : wc.sig.terms) {
            if (is_convex_class(classify_term(t))) continue;
            for (const auto& [v, p] : t.powers) {
                if (!(m.variables[static_cast<std::size_t>(v)].lower > 0.0)) {
                    throw ModelError(wc.origin + ": variable " + m.variables[static_cast<std::size_t>(v)].name +
                                     " in a nonconvex term is not positive-bounded");
                }
            }
            auto key = std::make_pair(t.powers, sign_of(t.coefficient));
            if (shape_index.try_emplace(key, shapes.size()).second) {
                shapes.push_back(unit_term(t, sign_of(t.coefficient)));
                shape_origin.push_back(wc.origin);
            }
        }
    }
    PlanOptions popt;
    popt.grid = opt.exponent_grid;
    popt.node_limit = opt.node_limit;
    try {
        cm.plan = plan_transformations(shapes, popt);
    } catch (const NoPlanFound& e) {
        std::set<std::string> origins;
        for (std::size_t t : e.irreducible_terms) origins.insert(shape_origin[t]);
        std::string msg = e.what();
        msg += " in:";
        for (const auto& o : origins) msg += " " + o;
        throw NoPlanFound(msg, e.irreducible_terms);
    }

    // New variables X with x = X^p.
    for (const auto& [key, p] : cm.plan.exponents) {
        const auto& base = m.variables[static_cast<std::size_t>(key.variable)];
        const double r = 1.0 / p;
        double lo = std::pow(base.lower, r);
        double hi = std::pow(base.upper, r);
        if (lo > hi) std::swap(lo, hi);
        const int x_new = m.add_variable({std::string("X") + (key.sign > 0 ? "+" : "-") + ":" + base.name, lo, hi,
                                          std::pow(base.initial, r), VariableRole::Transformed, key.variable});
        cm.transformed_vars[key] = x_new;
    }

    m.constraints.clear();
    for (auto& wc : split) {
        if (!wc.nonlinear()) {
            m.add_constraint(wc.sig.to_expression(), wc.sense, wc.origin);
            continue;
        }
        for (auto& t : wc.sig.terms) {
            if (is_convex_class(classify_term(t))) continue;
            const int s = sign_of(t.coefficient);
            std::map<int, double> powers;
            for (const auto& [v, a] : t.powers) {
                auto it = cm.transformed_vars.find({v, s});
                if (it == cm.transformed_vars.end()) {
                    powers[v] += a;
                } else {
                    powers[it->second] += a * cm.plan.exponents.at({v, s});
                }
            }
            t.powers = std::move(powers);
        }
        m.add_constraint(wc.sig.to_expression(), Sense::LessEqual, wc.origin);
    }
    for (const auto& [key, x_new] : cm.transformed_vars) {
        InverseRecord rec;
        for (auto& c : sign_transform_inverse(key.variable, x_new, cm.plan.exponents.at(key), opt.inverse_mode,
                                              m.variables[static_cast<std::size_t>(x_new)].name, &rec)) {
            m.constraints.push_back(std::move(c));
        }
        cm.inverses.push_back(rec);
    }

    for (const auto& t : expand(m.objective, "objective").terms) {
        if (!is_convex_class(classify_term(t))) {
            throw ModelError("objective term is not convex (negative quadratic cost coefficient?)");
        }
    }
    cm.nlp = std::move(m);
    cm.nlp.validate();
    cm.stages.push_back(count_stage("transformed", cm.nlp));

    const auto bad = convexity_violations(cm);
    if (!bad.empty()) throw ModelError("reformulated constraint is not certified convex: " + bad.front());
    return cm;
}

ConvexModel convexify(const NlpModel& original, const ConvexifyOptions& options) {
    auto [shifted, shifts] = shift_positive(original);
    auto [taylored, taylor] = taylor_substitute(shifted, options.max_angle_diff);
    ConvexModel cm = reformulate(taylored, options);
    cm.shifts = std::move(shifts);
    cm.taylor = std::move(taylor);
    std::vector<StageCount> stages{count_stage("original", original), count_stage("shifted", shifted),
                                   count_stage("taylor", taylored)};
    stages.insert(stages.end(), cm.stages.begin() + 1, cm.stages.end());
    cm.stages = std::move(stages);
    return cm;
}

std::vector<std::string> convexity_violations(const ConvexModel& model) {
    std::vector<std::string> bad;
    for (const auto& t : to_signomial(model.nlp.objective).terms) {
        if (!is_convex_class(classify_term(t))) {
            bad.push_back("objective");
            break;
        }
    }
    for (const auto& c : model.nlp.constraints) {
        const bool inverse = c.origin.rfind("transform-inverse@", 0) == 0;
        const Signomial s = to_signomial(c.expr);
        if (c.sense == Sense::Equal) {
            if (!inverse && !s.is_affine()) bad.push_back(c.origin);
            continue;
        }
        for (const auto& t : s.terms) {
            if (!is_convex_class(classify_term(t))) {
                bad.push_back(c.origin);
                break;
            }
        }
    }
    return bad;
}

RecoveredPoint recover(const Solution& solution, const ConvexModel& model) {
    RecoveredPoint rp;
    const auto& x = solution.x;
    const std::size_t n = model.shifts.num_variables ? model.shifts.num_variables : x.size();
    rp.x.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n));
    for (const auto& [v, off] : model.positivity_offsets) {
        if (static_cast<std::size_t>(v) < n) rp.x[static_cast<std::size_t>(v)] -= off;
    }
    for (int i : model.shifts.q_vars) rp.x[static_cast<std::size_t>(i)] -= model.shifts.q_offset;
    for (int i : model.shifts.angle_vars) rp.x[static_cast<std::size_t>(i)] -= model.shifts.angle_offset;
    for (const auto& inv : model.inverses) {
        const double gap = x[static_cast<std::size_t>(inv.transformed)] - std::pow(x[static_cast<std::size_t>(inv.original)], inv.r);
        rp.max_inverse_gap = std::max(rp.max_inverse_gap, std::abs(gap));
    }
    for (const auto& l : model.lifts) {
        const double gap = x[static_cast<std::size_t>(l.lifted)] - std::pow(x[static_cast<std::size_t>(l.base)], l.power);
        rp.max_inverse_gap = std::max(rp.max_inverse_gap, std::abs(gap));
    }
    return rp;
}

std::vector<double> map_initial_point(const ConvexModel& model, std::span<const double> original_x) {
    std::vector<double> x = model.nlp.initial_point();
    const std::size_t n = model.shifts.num_variables ? model.shifts.num_variables : original_x.size();
    for (std::size_t i = 0; i < n && i < original_x.size(); ++i) x[i] = original_x[i];
    for (int i : model.shifts.q_vars) x[static_cast<std::size_t>(i)] += model.shifts.q_offset;
    for (int i : model.shifts.angle_vars) x[static_cast<std::size_t>(i)] += model.shifts.angle_offset;
    for (const auto& p : model.taylor.pairs) {
        const double d = x[static_cast<std::size_t>(p.theta_a)] - x[static_cast<std::size_t>(p.theta_b)];
        x[static_cast<std::size_t>(p.delta)] = std::clamp(d, -model.taylor.max_angle_diff, model.taylor.max_angle_diff);
    }
    for (const auto& [v, off] : model.positivity_offsets) x[static_cast<std::size_t>(v)] += off;
    for (const auto& l : model.lifts) {
        x[static_cast<std::size_t>(l.lifted)] = std::pow(x[static_cast<std::size_t>(l.base)], l.power);
    }
    for (const auto& inv : model.inverses) {
        x[static_cast<std::size_t>(inv.transformed)] = std::pow(x[static_cast<std::size_t>(inv.original)], inv.r);
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = std::clamp(x[i], model.nlp.variables[i].lower, model.nlp.variables[i].upper);
    }
    return x;
}

std::string pipeline_trace_json(const ConvexModel& model) {
    using nlohmann::ordered_json;
    ordered_json j;
    ordered_json stages = ordered_json::array();
    for (const auto& s : model.stages) {
        stages.push_back({{"stage", s.stage}, {"variables", s.variables}, {"equalities", s.equalities},
                          {"inequalities", s.inequalities}});
    }
    j["stages"] = stages;
    j["shift"] = {{"q_offset", model.shifts.q_offset}, {"angle_offset", model.shifts.angle_offset}};
    j["taylor"] = {{"sin_order", model.taylor.sin_order},
                   {"cos_order", model.taylor.cos_order},
                   {"max_angle_diff", model.taylor.max_angle_diff},
                   {"angle_pairs", model.taylor.pairs.size()},
                   {"sin_terms", model.taylor.sin_substituted},
                   {"cos_terms", model.taylor.cos_substituted},
                   {"sin_remainder_bound", model.taylor.sin_remainder_bound()},
                   {"cos_remainder_bound", model.taylor.cos_remainder_bound()}};
    ordered_json lifts = ordered_json::array();
    for (const auto& l : model.lifts) {
        lifts.push_back({{"base", model.nlp.variables[static_cast<std::size_t>(l.base)].name},
                         {"power", l.power},
                         {"variable", model.nlp.variables[static_cast<std::size_t>(l.lifted)].name}});
    }
    j["lifts"] = lifts;
    ordered_json transformed = ordered_json::array();
    for (const auto& inv : model.inverses) {
        transformed.push_back({{"original", model.nlp.variables[static_cast<std::size_t>(inv.original)].name},
                               {"variable", model.nlp.variables[static_cast<std::size_t>(inv.transformed)].name},
                               {"p", inv.p},
                               {"inverse_exponent", inv.r},
                               {"sign_flipped", inv.sign_flipped}});
    }
    j["plan"] = {{"transformed_variables", model.plan.num_transformed()},
                 {"reciprocal_cost", model.plan.reciprocal_cost()},
                 {"proven_optimal", model.plan.proven_optimal},
                 {"nonconvex_term_shapes", model.plan.input_terms.size()},
                 {"inverse_mode", model.inverse_mode == InverseMode::Equality ? "equality" : "relaxed"}};
    j["transformed"] = transformed;
    return j.dump(2);
}

}  // namespace convexopf
