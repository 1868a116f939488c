#include <doctest.h>

#include <cmath>

#include "convexopf/signomial.hpp"
#include "support.hpp"

using namespace convexopf;

namespace {

SignomialTerm term(double c, std::map<int, double> powers) { return {c, std::move(powers)}; }

Box box1(double lo, double hi) {
    Box b;
    b.bounds[0] = {lo, hi};
    return b;
}

}  // namespace

TEST_CASE("classifier conditions") {
    CHECK(classify_term(term(2, {{0, -1}, {1, -2}})) == TermClass::ConvexPositive);
    CHECK(classify_term(term(1, {{0, 2}, {1, -0.5}})) == TermClass::ConvexPositive);
    CHECK(classify_term(term(-3, {{0, 0.4}, {1, 0.5}})) == TermClass::ConvexNegative);
    CHECK(classify_term(term(1, {{0, 2}, {1, 0.5}})) == TermClass::Nonconvex);
    CHECK(classify_term(term(1, {{0, 1}, {1, 1}})) == TermClass::Nonconvex);
    CHECK(classify_term(term(-1, {{0, 1}})) == TermClass::ConvexNegative);
    CHECK(classify_term(term(-15, {{0, 3}})) == TermClass::Nonconvex);
    CHECK(to_string(TermClass::ConvexPositive) == "ConvexPositive");
}

TEST_CASE("sampled Hessian oracle") {
    Box sq;
    sq.bounds[0] = {1, 2};
    sq.bounds[1] = {1, 2};
    const Expression x = Expression::variable(0);
    const Expression y = Expression::variable(1);
    CHECK(!verify_convexity_sampled(x * x + y * y, sq).violation);

    const auto cubic = verify_convexity_sampled(Expression::monomial(-15, {{0, 3}}), box1(1, 6));
    CHECK(cubic.violation);
    CHECK(cubic.min_eigenvalue < 0);

    // the nonconvex classification above is real: negative curvature exists
    Box pos;
    pos.bounds[0] = {0.1, 10};
    pos.bounds[1] = {0.1, 10};
    CHECK(verify_convexity_sampled(term(1, {{0, 2}, {1, 0.5}}).to_expression(), pos).violation);
}

TEST_CASE("underestimator check") {
    const Expression x = Expression::variable(0);
    CHECK(verify_underestimator(x - 1.0, x * x, box1(-2, 2)).holds);
    CHECK(!verify_underestimator(x, x * x, box1(0.1, 0.9)).holds);
}

TEST_CASE("classifier soundness on random convex terms") {
    std::mt19937 rng(3);
    for (int i = 0; i < 100; ++i) {
        const SignomialTerm t = testing::random_convex_term(rng);
        CHECK_MESSAGE(!verify_convexity_sampled(t.to_expression(), testing::positive_box(t), 2000, i + 1).violation,
                      t.to_expression().to_string());
    }
}

TEST_CASE("signomial expansion") {
    const Expression x = Expression::variable(0);
    const Expression y = Expression::variable(1);
    const Signomial s = to_signomial((x + y) * (x - y) + 3.0);
    CHECK(s.constant == doctest::Approx(3.0));
    REQUIRE(s.terms.size() == 2);
    const std::vector<double> pt{2.0, 0.5};
    CHECK(s.to_expression().evaluate(pt) == doctest::Approx(3.0 + 4.0 - 0.25));
    CHECK_THROWS_AS(to_signomial(convexopf::sin(x)), NotSignomial);
    CHECK(to_signomial(2.0 * x + 1.0).is_affine());
}

TEST_CASE("single cubic term: p = 1/3") {
    const TransformationPlan plan = plan_transformations({term(-15, {{0, 3}})});
    REQUIRE(plan.num_transformed() == 1);
    CHECK(plan.exponent_for(0, -1) == doctest::Approx(1.0 / 3.0));
    REQUIRE(plan.transformed_terms.size() == 1);
    CHECK(plan.transformed_terms[0].coefficient == doctest::Approx(-15));
    CHECK(plan.transformed_terms[0].powers.at(0) == doctest::Approx(1.0));
    CHECK(plan.transformed_terms[0].is_linear());
}

TEST_CASE("worked example plan and transformed convexity") {
    const Expression x = Expression::variable(0);
    const Expression f = pow(x, 4) + 80.0 * pow(x, 2) - 160.0 * x + 100.0 - 15.0 * pow(x, 3);
    CHECK(verify_convexity_sampled(f, box1(1, 6)).violation);
    const Signomial s = to_signomial(f);
    const TransformationPlan plan = plan_transformations(s.terms);
    REQUIRE(plan.num_transformed() == 1);
    CHECK(plan.exponent_for(0, -1) == doctest::Approx(1.0 / 3.0));
    CHECK(plan.exponent_for(0, 1) == 1.0);

    // transformed function over (x, X) with X = x^3 in [1, 216]
    std::vector<Expression> parts;
    std::vector<double> w;
    for (std::size_t i = 0; i < s.terms.size(); ++i) {
        const SignomialTerm& t = plan.transformed_terms[i];
        const int sign = s.terms[i].coefficient > 0 ? 1 : -1;
        std::vector<std::pair<int, double>> factors;
        for (const auto& [v, p] : t.powers) factors.push_back({plan.exponent_for(v, sign) != 1.0 ? 1 : v, p});
        parts.push_back(Expression::monomial(1.0, factors));
        w.push_back(t.coefficient);
    }
    const Expression g = Expression::sum(parts, w, s.constant);
    Box b;
    b.bounds[0] = {1, 6};
    b.bounds[1] = {1, 216};
    CHECK(!verify_convexity_sampled(g, b).violation);
}

TEST_CASE("convex terms need no plan") {
    const TransformationPlan plan = plan_transformations({term(2, {{0, -1}}), term(1, {{0, 2}}), term(-1, {{1, 0.5}})});
    CHECK(plan.num_transformed() == 0);
    CHECK(plan.reciprocal_cost() == 0.0);
    CHECK(plan.transformed_terms == plan.input_terms);
}

TEST_CASE("bilinear term") {
    const SignomialTerm bil = term(1, {{0, 1}, {1, 1}});
    const TransformationPlan plan = plan_transformations({bil});
    CHECK(plan.num_transformed() >= 1);
    const SignomialTerm& t = plan.transformed_terms.at(0);
    CHECK(is_convex_class(classify_term(t)));
    CHECK(!verify_convexity_sampled(t.to_expression(), testing::positive_box(t, 0.5, 3.0)).violation);
    CHECK(!plan.dump().empty());
}

TEST_CASE("irreducible terms raise NoPlanFound") {
    // -xy under exponents >= 1 keeps sum p >= 2
    PlanOptions o;
    o.grid = {1, 2, 3};
    const SignomialTerm bad = term(-1, {{0, 1}, {1, 1}});
    CHECK(!term_is_reducible(bad, o.grid));
    CHECK_THROWS_AS(plan_transformations({bad}, o), NoPlanFound);
}

TEST_CASE("sign transformation of the inverse") {
    InverseRecord rec;
    auto cs = sign_transform_inverse(0, 1, 1.0 / 3.0, InverseMode::Relaxed, "a", &rec);
    REQUIRE(cs.size() == 1);
    CHECK(rec.r == doctest::Approx(3.0));
    CHECK(!rec.sign_flipped);
    const std::vector<double> pt{2.0, 5.0};
    CHECK(cs[0].expr.evaluate(pt) == doctest::Approx(8.0 - 5.0));  // x^3 - X
    CHECK(cs[0].sense == Sense::LessEqual);

    cs = sign_transform_inverse(0, 1, 3.0, InverseMode::Relaxed, "b", &rec);
    CHECK(rec.sign_flipped);
    CHECK(cs[0].expr.evaluate(pt) == doctest::Approx(5.0 - std::cbrt(2.0)));  // X - x^(1/3)
    Box b;
    b.bounds[0] = {0.5, 4};
    b.bounds[1] = {0.5, 4};
    CHECK(!verify_convexity_sampled(cs[0].expr, b).violation);

    cs = sign_transform_inverse(0, 1, -2.0, InverseMode::Relaxed, "c", &rec);
    CHECK(!rec.sign_flipped);
    CHECK(rec.r == doctest::Approx(-0.5));
    CHECK(!verify_convexity_sampled(cs[0].expr, b).violation);

    cs = sign_transform_inverse(0, 1, 3.0, InverseMode::Equality, "d", &rec);
    REQUIRE(cs.size() == 1);
    CHECK(cs[0].sense == Sense::Equal);
    CHECK(cs[0].origin == "transform-inverse@d");
    CHECK(rec.convex_side.sense == Sense::LessEqual);
}
