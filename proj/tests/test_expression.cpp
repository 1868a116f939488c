#include <doctest.h>

#include <cmath>
#include <vector>

#include "convexopf/expression.hpp"
#include "support.hpp"

using namespace convexopf;

namespace {

// Central differences of the analytic gradient and of the value.
double fd_error(const Expression& e, std::vector<double> x) {
    std::vector<int> vars = e.variables();
    if (vars.empty()) return 0.0;
    const auto d = differentiate(e, vars, x);
    double worst = 0.0;
    for (std::size_t a = 0; a < vars.size(); ++a) {
        const auto i = static_cast<std::size_t>(vars[a]);
        const double h = 1e-6 * (1.0 + std::abs(x[i]));
        const double xi = x[i];
        x[i] = xi + h;
        const auto up = differentiate(e, vars, x);
        x[i] = xi - h;
        const auto dn = differentiate(e, vars, x);
        x[i] = xi;
        const double g = (up.value - dn.value) / (2 * h);
        worst = std::max(worst, std::abs(g - d.gradient[static_cast<Eigen::Index>(a)]) /
                                    std::max(1.0, std::abs(d.gradient[static_cast<Eigen::Index>(a)])));
        for (std::size_t b = 0; b < vars.size(); ++b) {
            const double hb = (up.gradient[static_cast<Eigen::Index>(b)] - dn.gradient[static_cast<Eigen::Index>(b)]) / (2 * h);
            const double ref = d.hessian(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a));
            worst = std::max(worst, std::abs(hb - ref) / std::max(1.0, std::abs(ref)));
        }
    }
    return worst;
}

}  // namespace

TEST_CASE("square: value, gradient and Hessian") {
    const Expression x = Expression::variable(0);
    const Expression e = x * x;
    const std::vector<double> pt{3.0};
    const std::vector<int> vars{0};
    const auto d = differentiate(e, vars, pt);
    CHECK(d.value == doctest::Approx(9.0));
    CHECK(d.gradient[0] == doctest::Approx(6.0));
    CHECK(d.hessian(0, 0) == doctest::Approx(2.0));
}

TEST_CASE("sin at zero") {
    const Expression e = convexopf::sin(Expression::variable(0));
    const std::vector<double> pt{0.0};
    const auto g = eval_grad(e, pt);
    CHECK(eval(e, pt) == doctest::Approx(0.0));
    REQUIRE(g.index.size() == 1);
    CHECK(g.value[0] == doctest::Approx(1.0));
}

TEST_CASE("monomial derivatives match finite differences") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(0.3, 3.0);
    std::uniform_real_distribution<double> p(-3.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        const Expression e = Expression::monomial(u(rng), {{0, p(rng)}, {1, p(rng)}});
        CHECK(fd_error(e, {u(rng), u(rng)}) < 1e-6);
    }
}

TEST_CASE("random expressions match finite differences") {
    testing::ExpressionGenerator gen(3, 11);
    for (int trial = 0; trial < 200; ++trial) {
        const Expression e = gen.next();
        CHECK(fd_error(e, gen.point()) < 1e-5);
    }
}

TEST_CASE("sparse Hessian is lower triangular and matches dense") {
    const Expression x = Expression::variable(2);
    const Expression y = Expression::variable(5);
    const Expression e = x * x * y + convexopf::cos(x - y);
    const std::vector<double> pt{0, 0, 0.7, 0, 0, 1.3};
    const std::vector<int> vars{2, 5};
    const auto d = differentiate(e, vars, pt);
    for (const auto& h : eval_hess(e, pt)) {
        CHECK(h.row >= h.col);
        const Eigen::Index r = h.row == 2 ? 0 : 1;
        const Eigen::Index c = h.col == 2 ? 0 : 1;
        CHECK(h.value == doctest::Approx(d.hessian(r, c)));
    }
}

TEST_CASE("fractional power outside its domain throws") {
    const Expression e = convexopf::pow(Expression::variable(0), 0.5);
    const std::vector<double> pt{-1.0};
    CHECK_THROWS_AS(eval(e, pt), DomainError);
    const Expression inv = convexopf::pow(Expression::variable(0), -1.0);
    const std::vector<double> zero{0.0};
    CHECK_THROWS_AS(eval(inv, zero), DomainError);
}

TEST_CASE("substitute replaces variables") {
    const Expression x = Expression::variable(0);
    const Expression e = Expression::monomial(2.0, {{0, 3.0}});
    const Expression s = substitute(e, {{0, Expression::variable(1) - 1.0}});
    const std::vector<double> pt{0.0, 3.0};
    CHECK(eval(s, pt) == doctest::Approx(16.0));
    CHECK(s.variables() == std::vector<int>{1});
    (void)x;
}

TEST_CASE("constant folding and decomposition") {
    const Expression e = Expression::variable(0) + 2.0 + 3.0;
    const auto dec = decompose_sum(e);
    CHECK(dec.constant == doctest::Approx(5.0));
    REQUIRE(dec.terms.size() == 1);
    CHECK(dec.terms[0].first == doctest::Approx(1.0));
    CHECK((Expression(2.0) * Expression(4.0)).constant_value() == doctest::Approx(8.0));
    CHECK(!e.to_string().empty());
}
