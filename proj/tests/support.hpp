#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "convexopf/case_io.hpp"
#include "convexopf/expression.hpp"
#include "convexopf/signomial.hpp"

namespace testing {

inline std::string data_path(const std::string& file) { return std::string(CONVEXOPF_DATA_DIR) + "/" + file; }

/// Slack bus 1 feeding a PQ bus 2 over one branch.
inline convexopf::CaseData two_bus_case(double r, double x, double pd_mw, double qd_mvar = 0.0) {
    convexopf::CaseData c;
    c.name = "two_bus";
    c.base_mva = 100.0;
    c.buses.push_back({1, convexopf::BusType::Slack, 0.0, 0.0, 0.0, 0.0, 0.95, 1.05, 230.0});
    c.buses.push_back({2, convexopf::BusType::PQ, pd_mw, qd_mvar, 0.0, 0.0, 0.95, 1.05, 230.0});
    convexopf::BranchRecord br;
    br.from_bus = 1;
    br.to_bus = 2;
    br.r = r;
    br.x = x;
    c.branches.push_back(br);
    convexopf::GenRecord g;
    g.bus = 1;
    g.pmax = 200.0;
    g.qmin = -100.0;
    g.qmax = 100.0;
    c.generators.push_back(g);
    c.costs.push_back({0, 0.01, 10.0, 0.0});
    return c;
}

inline const char* kTwoBusText = R"(function mpc = two_bus
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
	1	3	0	0	0	0	1	1	0	230	1	1.05	0.95;
	2	1	50	10	0	0	1	1	0	230	1	1.05	0.95;
];
mpc.gen = [
	1	0	0	100	-100	1	100	1	200	0	0	0	0	0	0	0	0	0	0	0	0;
];
mpc.branch = [
	1	2	0.01	0.1	0.02	0	0	0	0	0	1	-360	360;
];
mpc.gencost = [
	2	0	0	3	0.01	10	0;
];
)";

/// Random smooth expression over variables 0..n-1 evaluated on positive
/// points; used by derivative property checks.
class ExpressionGenerator {
  public:
    ExpressionGenerator(int num_vars, unsigned seed) : n_(num_vars), rng_(seed) {}

    convexopf::Expression next(int depth = 3) {
        using convexopf::Expression;
        std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 7);
        std::uniform_int_distribution<int> var(0, n_ - 1);
        std::uniform_real_distribution<double> coef(-2.0, 2.0);
        switch (pick(rng_)) {
            case 0: return Expression::variable(var(rng_));
            case 1: {
                std::uniform_real_distribution<double> power(-2.5, 3.0);
                return Expression::monomial(coef(rng_), {{var(rng_), power(rng_)}, {var(rng_), power(rng_)}});
            }
            case 2: return next(depth - 1) + next(depth - 1);
            case 3: return next(depth - 1) * next(depth - 1);
            case 4: return convexopf::sin(next(depth - 1));
            case 5: return convexopf::cos(next(depth - 1));
            case 6: {
                // integer powers keep the base's sign irrelevant
                std::uniform_int_distribution<int> k(2, 3);
                return convexopf::pow(next(depth - 1), k(rng_));
            }
            default: return Expression::sum({next(depth - 1), next(depth - 1)}, {coef(rng_), coef(rng_)}, coef(rng_));
        }
    }

    std::vector<double> point() {
        std::uniform_real_distribution<double> u(0.5, 1.5);
        std::vector<double> x(static_cast<std::size_t>(n_));
        for (auto& v : x) v = u(rng_);
        return x;
    }

  private:
    int n_;
    std::mt19937 rng_;
};

/// Random term the classifier certifies convex, drawn by rejection from
/// terms in 1 to 3 variables with exponents in [-3, 3].
inline convexopf::SignomialTerm random_convex_term(std::mt19937& rng) {
    std::uniform_int_distribution<int> nvars(1, 3);
    std::uniform_real_distribution<double> power(-3.0, 3.0);
    std::uniform_real_distribution<double> coef(0.1, 5.0);
    std::bernoulli_distribution negative(0.5);
    while (true) {
        convexopf::SignomialTerm t;
        t.coefficient = negative(rng) ? -coef(rng) : coef(rng);
        const int n = nvars(rng);
        for (int v = 0; v < n; ++v) {
            double p = power(rng);
            if (t.coefficient < 0) p = std::abs(p) / (2.0 * n);  // favour Sum p <= 1
            if (p != 0.0) t.powers[v] = p;
        }
        if (t.powers.empty()) continue;
        if (convexopf::is_convex_class(convexopf::classify_term(t))) return t;
    }
}

inline convexopf::Box positive_box(const convexopf::SignomialTerm& t, double lo = 0.2, double hi = 5.0) {
    convexopf::Box b;
    for (const auto& [v, p] : t.powers) b.bounds[v] = {lo, hi};
    return b;
}

}  // namespace testing
