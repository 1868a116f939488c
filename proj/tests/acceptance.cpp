// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "convexopf/convexify.hpp"
#include "convexopf/ipm.hpp"
#include "convexopf/opf_model.hpp"
#include "convexopf/power_flow.hpp"
#include "convexopf/report.hpp"
#include "support.hpp"

using namespace convexopf;

namespace {

int failures = 0;

void verdict(const std::string& id, bool ok, const std::string& detail) {
    std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", id.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string f2(double v) {
    char b[64];
    std::snprintf(b, sizeof b, "%.2f", v);
    return b;
}

std::string e2(double v) {
    char b[64];
    std::snprintf(b, sizeof b, "%.2e", v);
    return b;
}

bool within_rel(double got, double want, double tol) { return std::abs(got - want) <= tol * std::abs(want); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

OpfModel build(const std::string& file) {
    const NetworkData net = to_network(load_case(testing::data_path(file)));
    return build_opf(net, build_admittance(net));
}

void table_case(const std::string& id, const std::string& file, std::optional<double> nonconvex, double convex,
                std::optional<double> pg, std::optional<double> max_seconds) {
    RunOptions o;
    o.mode = nonconvex ? RunMode::Both : RunMode::Convex;
    const auto t0 = std::chrono::steady_clock::now();
    RunReport r;
    try {
        r = run_case(testing::data_path(file), o);
    } catch (const std::exception& e) {
        verdict(id, false, std::string("pipeline error: ") + e.what());
        return;
    }
    const double wall = seconds_since(t0);
    const ModeRecord* cv = r.find("convex");
    bool ok = cv && cv->status == "Optimal" && within_rel(cv->objective, convex, 5e-3);
    std::string detail = "convex " + (cv ? f2(cv->objective) + " (" + cv->status + ")" : "missing") + " vs " + f2(convex);
    if (nonconvex) {
        const ModeRecord* nc = r.find("nonconvex");
        ok = ok && nc && nc->status == "Optimal" && within_rel(nc->objective, *nonconvex, 5e-3);
        detail += "; nonconvex " + (nc ? f2(nc->objective) + " (" + nc->status + ")" : "missing") + " vs " + f2(*nonconvex);
    }
    if (pg && cv) {
        ok = ok && std::abs(cv->total_pg_mw - *pg) <= 1.0;
        detail += "; Pg " + f2(cv->total_pg_mw) + " MW vs " + f2(*pg);
    }
    if (max_seconds) {
        ok = ok && wall <= *max_seconds;
        detail += "; wall " + f2(wall) + " s (limit " + f2(*max_seconds) + ")";
    }
    verdict(id, ok, detail);
}

void worked_example() {
    const Expression x = Expression::variable(0);
    const Expression f = pow(x, 4) + 80.0 * pow(x, 2) - 160.0 * x + 100.0 - 15.0 * pow(x, 3);
    const Signomial s = to_signomial(f);
    const TransformationPlan plan = plan_transformations(s.terms);
    const double p = plan.exponent_for(0, -1);

    // transformed function over (x, X), X = x^3 on [1, 216]
    std::vector<Expression> parts;
    std::vector<double> w;
    for (std::size_t i = 0; i < s.terms.size(); ++i) {
        const int sign = s.terms[i].coefficient > 0 ? 1 : -1;
        std::vector<std::pair<int, double>> factors;
        for (const auto& [v, q] : plan.transformed_terms[i].powers) {
            factors.push_back({plan.exponent_for(v, sign) != 1.0 ? 1 : v, q});
        }
        parts.push_back(Expression::monomial(1.0, factors));
        w.push_back(plan.transformed_terms[i].coefficient);
    }
    const Expression g = Expression::sum(parts, w, s.constant);
    Box b;
    b.bounds[0] = {1, 6};
    b.bounds[1] = {1, 216};
    const bool convex = !verify_convexity_sampled(g, b).violation;
    Box orig;
    orig.bounds[0] = {1, 6};
    const bool was_nonconvex = verify_convexity_sampled(f, orig).violation;
    verdict("5", plan.num_transformed() == 1 && std::abs(p - 1.0 / 3.0) < 1e-12 && convex && was_nonconvex,
            "p = " + f2(p) + " (" + std::to_string(plan.num_transformed()) + " key), transformed " +
                (convex ? "convex" : "NOT convex") + " over 10^4 samples, original " +
                (was_nonconvex ? "nonconvex" : "convex"));
}

void classifier_soundness() {
    std::mt19937 rng(2024);
    int counterexamples = 0;
    int negative = 0;
    for (int i = 0; i < 1000; ++i) {
        const SignomialTerm t = testing::random_convex_term(rng);
        negative += t.coefficient < 0;
        if (verify_convexity_sampled(t.to_expression(), testing::positive_box(t), 10000, 100 + i).violation) {
            ++counterexamples;
        }
    }
    verdict("6a", counterexamples == 0,
            "1000 Convex* terms (" + std::to_string(negative) + " ConvexNegative), " + std::to_string(counterexamples) +
                " counterexamples");
}

void taylor_bounds() {
    double worst_sin = 0.0;
    double worst_cos = 0.0;
    bool ok = true;
    const int n = 120000;
    for (int i = -n; i <= n; ++i) {
        const double t = 0.6 * i / n;
        const double es = std::abs(std::sin(t) - (t - t * t * t / 6));
        const double ec = std::abs(std::cos(t) - (1 - t * t / 2));
        const double bs = std::pow(std::abs(t), 5) / 120;
        const double bc = std::pow(t, 4) / 24;
        // 1e-15 absorbs double rounding of the polynomial
        ok = ok && es <= bs + 1e-15 && ec <= bc + 1e-15;
        if (bs > 1e-10) worst_sin = std::max(worst_sin, es / bs);
        if (bc > 1e-10) worst_cos = std::max(worst_cos, ec / bc);
    }
    verdict("6b", ok,
            std::to_string(2 * n + 1) + " samples on [-0.6, 0.6]; max error/bound sin " + f2(worst_sin) + ", cos " +
                f2(worst_cos));
}

void shift_round_trip() {
    const OpfModel opf = build("case14.m");
    const auto [shifted, rec] = shift_positive(opf.nlp);
    const Solution a = solve(opf.nlp);
    std::vector<double> x0 = opf.nlp.initial_point();
    for (int i : rec.q_vars) x0[static_cast<std::size_t>(i)] += rec.q_offset;
    for (int i : rec.angle_vars) x0[static_cast<std::size_t>(i)] += rec.angle_offset;
    const Solution b = solve(shifted, {}, x0);
    double qdiff = 0.0;
    for (int i : rec.q_vars) {
        qdiff = std::max(qdiff, std::abs(b.x[static_cast<std::size_t>(i)] - rec.q_offset - a.x[static_cast<std::size_t>(i)]));
    }
    const double rel = std::abs(a.objective - b.objective) / std::abs(a.objective);
    verdict("6c", a.status == SolverStatus::Optimal && b.status == SolverStatus::Optimal && rel <= 1e-6 && qdiff <= 1e-6,
            "objective " + f2(a.objective) + " vs " + f2(b.objective) + " (rel " + e2(rel) + "), max Qg diff " +
                e2(qdiff) + " p.u.");
}

void multistart() {
    bool ok = true;
    std::string detail;
    std::mt19937 rng(99);
    for (const char* file : {"case14.m", "case_ieee30.m", "case57.m", "case118.m"}) {
        const OpfModel opf = build(file);
        const ConvexModel cm = convexify(opf.nlp);
        const Solution ref = solve(cm.nlp);
        double worst = 0.0;
        int optimal = ref.status == SolverStatus::Optimal;
        for (int trial = 0; trial < 5; ++trial) {
            std::vector<double> x = opf.nlp.initial_point();
            for (std::size_t i = 0; i < x.size(); ++i) {
                const auto& v = opf.nlp.variables[i];
                double lo = v.lower;
                double hi = v.upper;
                if (v.role == VariableRole::VoltageAngle && lo < hi) {
                    lo = -0.25;
                    hi = 0.25;
                }
                if (lo == hi) continue;
                std::uniform_real_distribution<double> u(0.05, 0.95);
                x[i] = lo + u(rng) * (hi - lo);
            }
            const Solution s = solve(cm.nlp, {}, map_initial_point(cm, x));
            optimal += s.status == SolverStatus::Optimal;
            worst = std::max(worst, std::abs(s.objective - ref.objective) / std::abs(ref.objective));
        }
        ok = ok && optimal == 6 && worst <= 1e-5;
        detail += std::string(detail.empty() ? "" : "; ") + file + " " + std::to_string(optimal) + "/6 optimal, max rel " +
                  e2(worst);
    }
    verdict("6d", ok, detail);
}

void finite_differences() {
    testing::ExpressionGenerator gen(4, 17);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const Expression e = gen.next(3);
        std::vector<double> x = gen.point();
        const std::vector<int> vars = e.variables();
        if (vars.empty()) continue;
        const auto d = differentiate(e, vars, x);
        for (std::size_t a = 0; a < vars.size(); ++a) {
            const auto i = static_cast<std::size_t>(vars[a]);
            const double h = 1e-6 * (1.0 + std::abs(x[i]));
            const double xi = x[i];
            x[i] = xi + h;
            const auto up = differentiate(e, vars, x);
            x[i] = xi - h;
            const auto dn = differentiate(e, vars, x);
            x[i] = xi;
            const auto ai = static_cast<Eigen::Index>(a);
            const double g = (up.value - dn.value) / (2 * h);
            worst = std::max(worst, std::abs(g - d.gradient[ai]) / std::max(1.0, std::abs(d.gradient[ai])));
            for (std::size_t c = 0; c < vars.size(); ++c) {
                const auto ci = static_cast<Eigen::Index>(c);
                const double hc = (up.gradient[ci] - dn.gradient[ci]) / (2 * h);
                worst = std::max(worst, std::abs(hc - d.hessian(ci, ai)) / std::max(1.0, std::abs(d.hessian(ci, ai))));
            }
        }
    }
    verdict("6e", worst <= 1e-5, "1000 random expressions, max relative error " + e2(worst));
}

void power_flow_validation() {
    bool ok = true;
    std::string detail;
    for (const char* file : {"case14.m", "case_ieee30.m", "case57.m", "case118.m"}) {
        RunOptions o;
        o.mode = RunMode::Convex;
        const RunReport r = run_case(testing::data_path(file), o);
        const bool conv = r.power_flow && r.power_flow->converged;
        ok = ok && conv;
        detail += std::string(detail.empty() ? "" : "; ") + r.case_name + " NR " +
                  (conv ? "converged in " + std::to_string(r.power_flow->iterations) : std::string("FAILED")) +
                  ", exact-model residual P " + e2(r.taylor_gap ? r.taylor_gap->max_p_residual : -1) + " Q " +
                  e2(r.taylor_gap ? r.taylor_gap->max_q_residual : -1) + " p.u.";
    }
    verdict("6f", ok, detail);
}

void guarded(const std::string& id, const std::function<void()>& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        verdict(id, false, std::string("exception: ") + e.what());
    }
}

}  // namespace

int main() {
    guarded("1", [] { table_case("1", "case14.m", 8081.53, 8081.14, 268.28, 10.0); });
    guarded("2", [] { table_case("2", "case_ieee30.m", std::nullopt, 8906.13, 295.14, std::nullopt); });
    guarded("3", [] { table_case("3", "case57.m", 41737.79, 41737.68, std::nullopt, std::nullopt); });
    guarded("4", [] { table_case("4", "case118.m", 129660.70, 129660.60, std::nullopt, 120.0); });
    guarded("5", worked_example);
    guarded("6a", classifier_soundness);
    guarded("6b", taylor_bounds);
    guarded("6c", shift_round_trip);
    guarded("6d", multistart);
    guarded("6e", finite_differences);
    guarded("6f", power_flow_validation);
    std::printf("%d failure(s)\n", failures);
    return failures == 0 ? 0 : 1;
}
