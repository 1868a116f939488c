#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "convexopf/expression.hpp"
#include "convexopf/nlp_model.hpp"

namespace convexopf {

/// c * prod x_i^p_i with every p_i nonzero.
struct SignomialTerm {
    double coefficient = 0.0;
    std::map<int, double> powers;

    bool is_linear() const { return powers.size() == 1 && powers.begin()->second == 1.0; }
    double evaluate(std::span<const double> x) const;
    Expression to_expression() const;
    bool operator==(const SignomialTerm&) const = default;
};

struct Signomial {
    std::vector<SignomialTerm> terms;
    double constant = 0.0;

    bool is_affine() const;
    Expression to_expression() const;
};

class NotSignomial : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Expands an expression built from sums, products, monomials and powers
/// (integral powers of sums, any power of a single positive-coefficient term)
/// into canonical signomial form with like terms combined. Coefficients
/// smaller than `drop_tol` times the largest magnitude are removed. Throws
/// NotSignomial for sin/cos nodes or non-expandable powers.
Signomial to_signomial(const Expression& expr, double drop_tol = 0.0);

enum class TermClass { ConvexPositive, ConvexNegative, Nonconvex };

std::string to_string(TermClass c);

/// Sufficient convexity conditions for a term on the positive orthant:
/// ConvexPositive: c > 0 and either every p < 0, or exactly one p > 0 with
/// the rest negative and sum p >= 1. ConvexNegative: c < 0, every p > 0 and
/// 0 <= sum p <= 1. Sums are compared with a 1e-12 tolerance.
TermClass classify_term(const SignomialTerm& term);

inline bool is_convex_class(TermClass c) { return c != TermClass::Nonconvex; }

/// Axis-aligned box over the variable indices an expression uses.
struct Box {
    std::map<int, std::pair<double, double>> bounds;
};

struct ConvexityCheck {
    bool violation = false;
    std::vector<double> point;  // dense over 0..max index, only box variables meaningful
    double min_eigenvalue = 0.0;
};

/// Samples Hessians of f at uniform points of the box and reports the first
/// point whose smallest eigenvalue is below -1e-8 (scaled by the largest
/// Hessian entry when that exceeds one). A necessary-condition check only.
ConvexityCheck verify_convexity_sampled(const Expression& f, const Box& box, std::size_t n_samples = 10000,
                                        std::uint64_t seed = 1);

struct UnderestimatorCheck {
    bool holds = true;
    double max_excess = 0.0;  // max over samples of g - f
    std::vector<double> worst_point;
};

/// Dense sampling check of g(x) <= f(x) + 1e-10 on the box.
UnderestimatorCheck verify_underestimator(const Expression& g, const Expression& f, const Box& box,
                                          std::size_t n_samples = 10000, std::uint64_t seed = 1);

std::vector<double> default_exponent_grid();

/// Exponent choice for one (variable, term sign) pair: x = X^p in every
/// nonconvex term of that sign. p == 1 means identity.
struct PlanKey {
    int variable = 0;
    int sign = 1;  // +1 for terms with c > 0, -1 for c < 0
    auto operator<=>(const PlanKey&) const = default;
};

struct TransformationPlan {
    std::map<PlanKey, double> exponents;          // only transformed keys (p != 1)
    std::vector<SignomialTerm> input_terms;
    std::vector<SignomialTerm> transformed_terms;  // same order; powers keyed by original variable
    bool proven_optimal = true;

    std::size_t num_transformed() const { return exponents.size(); }
    double reciprocal_cost() const;  // sum |1/p|
    double exponent_for(int variable, int sign) const;
    std::string dump(const std::vector<VariableInfo>* names = nullptr) const;
};

class NoPlanFound : public std::runtime_error {
  public:
    NoPlanFound(const std::string& what, std::vector<std::size_t> terms)
        : std::runtime_error(what), irreducible_terms(std::move(terms)) {}
    std::vector<std::size_t> irreducible_terms;  // indices into the input term list
};

struct PlanOptions {
    std::vector<double> grid = default_exponent_grid();
    std::size_t node_limit = 2'000'000;
};

/// Chooses exponents so that every term classifies convex, minimizing first
/// the number of transformed keys and then sum |1/p| (ties prefer p < 0).
/// Search: connected components over shared keys, arc consistency, then
/// depth-first branch and bound.
TransformationPlan plan_transformations(const std::vector<SignomialTerm>& terms, const PlanOptions& options = {});

/// True when some grid assignment of this term's own keys makes it convex.
bool term_is_reducible(const SignomialTerm& term, const std::vector<double>& grid);

enum class InverseMode { Equality, Relaxed };

/// Inverse relation X = x^r with r = 1/p. For r < 0 or r >= 1 the convex side
/// is x^r - X <= 0; for 0 < r < 1 the sign is flipped and the convex side is
/// X - x^r <= 0. Equality mode emits X - x^r == 0 (tagged) instead.
struct InverseRecord {
    int original = -1;
    int transformed = -1;
    double p = 1.0;
    double r = 1.0;
    bool sign_flipped = false;
    Constraint convex_side;
};

std::vector<Constraint> sign_transform_inverse(int x_var, int big_x_var, double p, InverseMode mode,
                                               const std::string& tag, InverseRecord* record = nullptr);

}  // namespace convexopf
