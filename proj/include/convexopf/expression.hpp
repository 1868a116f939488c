#pragma once

#include <map>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace convexopf {

/// Raised when an expression is evaluated outside its domain, e.g. a
/// fractional power of a non-positive base.
class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

enum class NodeKind { Constant, Variable, Sum, Product, Power, Sin, Cos, Monomial };

struct Node;

/// Immutable expression tree over model variables (referenced by index).
/// Copies share structure.
class Expression {
  public:
    Expression();
    Expression(double constant);  // NOLINT(google-explicit-constructor)

    static Expression variable(int index);
    /// coefficient * prod x_i^p_i; zero exponents are dropped.
    static Expression monomial(double coefficient, std::vector<std::pair<int, double>> factors);
    /// constant + sum weights[i] * terms[i]
    static Expression sum(std::vector<Expression> terms, std::vector<double> weights, double constant = 0.0);
    static Expression product(std::vector<Expression> factors);

    const Node& node() const { return *node_; }
    NodeKind kind() const;
    bool is_constant() const { return kind() == NodeKind::Constant; }
    double constant_value() const;

    double evaluate(std::span<const double> x) const;
    /// Sorted, unique variable indices referenced by the tree.
    std::vector<int> variables() const;
    std::string to_string() const;

    /// Wraps a node as-is, without simplification.
    static Expression wrap(std::shared_ptr<const Node> node) { return Expression(std::move(node)); }

  private:
    explicit Expression(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const Node> node_;
};

struct Node {
    NodeKind kind = NodeKind::Constant;
    double value = 0.0;  // constant, power exponent, monomial coefficient or sum offset
    int var = -1;
    std::vector<Expression> children;
    std::vector<double> weights;                  // Sum
    std::vector<std::pair<int, double>> factors;  // Monomial, sorted by variable
};

Expression operator+(const Expression& a, const Expression& b);
Expression operator-(const Expression& a, const Expression& b);
Expression operator-(const Expression& a);
Expression operator*(const Expression& a, const Expression& b);
Expression pow(const Expression& base, double exponent);
Expression sin(const Expression& arg);
Expression cos(const Expression& arg);

/// Value, gradient and Hessian with respect to `local_vars` (sorted). Every
/// variable of the expression must appear in `local_vars`.
struct LocalDerivatives {
    double value = 0.0;
    Eigen::VectorXd gradient;
    Eigen::MatrixXd hessian;
};

LocalDerivatives differentiate(const Expression& expr, std::span<const int> local_vars, std::span<const double> x);

struct SparseGradient {
    std::vector<int> index;
    std::vector<double> value;
};

struct HessianEntry {
    int row = 0;
    int col = 0;  // row >= col
    double value = 0.0;
};

double eval(const Expression& expr, std::span<const double> x);
SparseGradient eval_grad(const Expression& expr, std::span<const double> x);
std::vector<HessianEntry> eval_hess(const Expression& expr, std::span<const double> x);

/// Replaces variables by expressions.
Expression substitute(const Expression& expr, const std::map<int, Expression>& replacements);

/// Rewrites every node bottom-up with `fn`, which receives the node with its
/// children already rewritten.
template <typename Fn>
Expression transform(const Expression& expr, Fn&& fn);

/// Splits a top-level sum into its weighted terms plus the constant offset.
/// Non-sum expressions yield a single term with weight 1.
struct SumDecomposition {
    std::vector<std::pair<double, Expression>> terms;
    double constant = 0.0;
};
SumDecomposition decompose_sum(const Expression& expr);

namespace detail {
Expression rebuild(const Node& original, std::vector<Expression> children);
}

template <typename Fn>
Expression transform(const Expression& expr, Fn&& fn) {
    const Node& n = expr.node();
    if (n.children.empty()) return fn(expr);
    std::vector<Expression> kids;
    kids.reserve(n.children.size());
    for (const auto& c : n.children) kids.push_back(transform(c, fn));
    return fn(detail::rebuild(n, std::move(kids)));
}

}  // namespace convexopf
