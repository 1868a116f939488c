#include "convexopf/expression.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace convexopf {

namespace {

std::shared_ptr<Node> make_node(NodeKind kind) {
    auto n = std::make_shared<Node>();
    n->kind = kind;
    return n;
}

bool is_integer(double p) { return p == std::round(p); }

struct PowerDerivs {
    double f;
    double d1;
    double d2;
};

// u^p and its first two derivatives, with domain checks.
PowerDerivs power_derivs(double u, double p) {
    if (!is_integer(p) && u <= 0.0) {
        throw DomainError("fractional power " + std::to_string(p) + " of non-positive base " + std::to_string(u));
    }
    if (p < 0.0 && u == 0.0) throw DomainError("negative power of zero");
    if (p == 1.0) return {u, 1.0, 0.0};
    if (p == 2.0) return {u * u, 2.0 * u, 2.0};
    const double f = std::pow(u, p);
    const double d1 = p * std::pow(u, p - 1.0);
    const double d2 = p * (p - 1.0) * std::pow(u, p - 2.0);
    return {f, d1, d2};
}

double power_value(double u, double p) {
    if (p == 1.0) return u;
    if (p == 2.0) return u * u;
    if (!is_integer(p) && u <= 0.0) {
        throw DomainError("fractional power " + std::to_string(p) + " of non-positive base " + std::to_string(u));
    }
    if (p < 0.0 && u == 0.0) throw DomainError("negative power of zero");
    return std::pow(u, p);
}


double eval_node(const Node& n, std::span<const double> x) {
    switch (n.kind) {
    case NodeKind::Constant:
        return n.value;
    case NodeKind::Variable:
        return x[static_cast<std::size_t>(n.var)];
    case NodeKind::Sum: {
        double s = n.value;
        for (std::size_t i = 0; i < n.children.size(); ++i) s += n.weights[i] * eval_node(n.children[i].node(), x);
        return s;
    }
    case NodeKind::Product: {
        double p = 1.0;
        for (const auto& c : n.children) p *= eval_node(c.node(), x);
        return p;
    }
    case NodeKind::Power:
        return power_value(eval_node(n.children[0].node(), x), n.value);
    case NodeKind::Sin:
        return std::sin(eval_node(n.children[0].node(), x));
    case NodeKind::Cos:
        return std::cos(eval_node(n.children[0].node(), x));
    case NodeKind::Monomial: {
        double p = n.value;
        for (const auto& [v, e] : n.factors) p *= power_value(x[static_cast<std::size_t>(v)], e);
        return p;
    }
    }
    return 0.0;
}

void collect_vars(const Node& n, std::vector<int>& out) {
    if (n.kind == NodeKind::Variable) out.push_back(n.var);
    for (const auto& [v, e] : n.factors) out.push_back(v);
    for (const auto& c : n.children) collect_vars(c.node(), out);
}

// Second-order forward-mode value over a small set of local variables.
struct Jet {
    double v = 0.0;
    Eigen::VectorXd g;
    Eigen::MatrixXd h;

    explicit Jet(Eigen::Index m) : g(Eigen::VectorXd::Zero(m)), h(Eigen::MatrixXd::Zero(m, m)) {}
};

class JetEvaluator {
  public:
    JetEvaluator(std::span<const int> local, std::span<const double> x)
        : local_(local), x_(x), m_(static_cast<Eigen::Index>(local.size())) {}

    Jet run(const Node& n) const {
        switch (n.kind) {
        case NodeKind::Constant: {
            Jet j(m_);
            j.v = n.value;
            return j;
        }
        case NodeKind::Variable: {
            Jet j(m_);
            j.v = x_[static_cast<std::size_t>(n.var)];
            j.g[position(n.var)] = 1.0;
            return j;
        }
        case NodeKind::Sum: {
            Jet j(m_);
            j.v = n.value;
            for (std::size_t i = 0; i < n.children.size(); ++i) {
                Jet c = run(n.children[i].node());
                const double w = n.weights[i];
                j.v += w * c.v;
                j.g += w * c.g;
                j.h += w * c.h;
            }
            return j;
        }
        case NodeKind::Product: {
            Jet acc = run(n.children[0].node());
            for (std::size_t i = 1; i < n.children.size(); ++i) {
                Jet b = run(n.children[i].node());
                Jet r(m_);
                r.v = acc.v * b.v;
                r.g = acc.g * b.v + b.g * acc.v;
                r.h = acc.h * b.v + b.h * acc.v + acc.g * b.g.transpose() + b.g * acc.g.transpose();
                acc = std::move(r);
            }
            return acc;
        }
        case NodeKind::Power: {
            Jet u = run(n.children[0].node());
            auto [f, d1, d2] = power_derivs(u.v, n.value);
            return chain(u, f, d1, d2);
        }
        case NodeKind::Sin: {
            Jet u = run(n.children[0].node());
            return chain(u, std::sin(u.v), std::cos(u.v), -std::sin(u.v));
        }
        case NodeKind::Cos: {
            Jet u = run(n.children[0].node());
            return chain(u, std::cos(u.v), -std::sin(u.v), -std::cos(u.v));
        }
        case NodeKind::Monomial:
            return monomial(n);
        }
        return Jet(m_);
    }

  private:
    Eigen::Index position(int var) const {
        auto it = std::lower_bound(local_.begin(), local_.end(), var);
        if (it == local_.end() || *it != var) {
            throw std::logic_error("variable " + std::to_string(var) + " missing from local variable list");
        }
        return static_cast<Eigen::Index>(it - local_.begin());
    }

    Jet chain(const Jet& u, double f, double d1, double d2) const {
        Jet r(m_);
        r.v = f;
        r.g = d1 * u.g;
        r.h = d1 * u.h + d2 * (u.g * u.g.transpose());
        return r;
    }

    Jet monomial(const Node& n) const {
        const std::size_t k = n.factors.size();
        std::vector<PowerDerivs> pd(k);
        std::vector<Eigen::Index> pos(k);
        for (std::size_t i = 0; i < k; ++i) {
            pd[i] = power_derivs(x_[static_cast<std::size_t>(n.factors[i].first)], n.factors[i].second);
            pos[i] = position(n.factors[i].first);
        }
        auto product_except = [&](std::size_t a, std::size_t b) {
            double p = n.value;
            for (std::size_t i = 0; i < k; ++i) {
                if (i != a && i != b) p *= pd[i].f;
            }
            return p;
        };
        Jet r(m_);
        r.v = product_except(k, k);
        for (std::size_t i = 0; i < k; ++i) {
            const double rest = product_except(i, k);
            r.g[pos[i]] += pd[i].d1 * rest;
            r.h(pos[i], pos[i]) += pd[i].d2 * rest;
            for (std::size_t j = i + 1; j < k; ++j) {
                const double cross = pd[i].d1 * pd[j].d1 * product_except(i, j);
                r.h(pos[i], pos[j]) += cross;
                r.h(pos[j], pos[i]) += cross;
            }
        }
        return r;
    }

    std::span<const int> local_;
    std::span<const double> x_;
    Eigen::Index m_;
};

void print(const Node& n, std::ostream& out) {
    switch (n.kind) {
    case NodeKind::Constant:
        out << n.value;
        break;
    case NodeKind::Variable:
        out << "x" << n.var;
        break;
    case NodeKind::Sum: {
        out << "(";
        bool first = true;
        if (n.value != 0.0 || n.children.empty()) {
            out << n.value;
            first = false;
        }
        for (std::size_t i = 0; i < n.children.size(); ++i) {
            const double w = n.weights[i];
            out << (first ? (w < 0 ? "-" : "") : (w < 0 ? " - " : " + "));
            if (std::abs(w) != 1.0) out << std::abs(w) << "*";
            print(n.children[i].node(), out);
            first = false;
        }
        out << ")";
        break;
    }
    case NodeKind::Product:
        for (std::size_t i = 0; i < n.children.size(); ++i) {
            if (i) out << "*";
            print(n.children[i].node(), out);
        }
        break;
    case NodeKind::Power:
        out << "(";
        print(n.children[0].node(), out);
        out << ")^" << n.value;
        break;
    case NodeKind::Sin:
    case NodeKind::Cos:
        out << (n.kind == NodeKind::Sin ? "sin(" : "cos(");
        print(n.children[0].node(), out);
        out << ")";
        break;
    case NodeKind::Monomial:
        out << n.value;
        for (const auto& [v, e] : n.factors) {
            out << "*x" << v;
            if (e != 1.0) out << "^" << e;
        }
        break;
    }
}

}  // namespace

// ---------------------------------------------------------------------------

Expression::Expression() : Expression(0.0) {}

Expression::Expression(double constant) {
    auto n = make_node(NodeKind::Constant);
    n->value = constant;
    node_ = std::move(n);
}

Expression Expression::variable(int index) {
    if (index < 0) throw std::invalid_argument("negative variable index");
    auto n = make_node(NodeKind::Variable);
    n->var = index;
    return Expression(std::move(n));
}

Expression Expression::monomial(double coefficient, std::vector<std::pair<int, double>> factors) {
    std::sort(factors.begin(), factors.end());
    std::vector<std::pair<int, double>> merged;
    for (const auto& [v, e] : factors) {
        if (!merged.empty() && merged.back().first == v) {
            merged.back().second += e;
        } else {
            merged.emplace_back(v, e);
        }
    }
    std::erase_if(merged, [](const auto& f) { return f.second == 0.0; });
    if (coefficient == 0.0 || merged.empty()) return Expression(merged.empty() ? coefficient : 0.0);
    if (coefficient == 1.0 && merged.size() == 1 && merged[0].second == 1.0) return variable(merged[0].first);
    auto n = make_node(NodeKind::Monomial);
    n->value = coefficient;
    n->factors = std::move(merged);
    return Expression(std::move(n));
}

Expression Expression::sum(std::vector<Expression> terms, std::vector<double> weights, double constant) {
    if (weights.size() != terms.size()) throw std::invalid_argument("sum: weights/terms size mismatch");
    auto n = make_node(NodeKind::Sum);
    n->value = constant;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        const double w = weights[i];
        if (w == 0.0) continue;
        const Node& t = terms[i].node();
        if (t.kind == NodeKind::Constant) {
            n->value += w * t.value;
        } else if (t.kind == NodeKind::Sum) {
            n->value += w * t.value;
            for (std::size_t k = 0; k < t.children.size(); ++k) {
                n->children.push_back(t.children[k]);
                n->weights.push_back(w * t.weights[k]);
            }
        } else {
            n->children.push_back(terms[i]);
            n->weights.push_back(w);
        }
    }
    if (n->children.empty()) return Expression(n->value);
    if (n->children.size() == 1 && n->weights[0] == 1.0 && n->value == 0.0) return n->children[0];
    return Expression(std::move(n));
}

Expression Expression::product(std::vector<Expression> factors) {
    double coef = 1.0;
    std::vector<Expression> rest;
    std::vector<std::pair<int, double>> mono;
    bool has_mono = false;
    for (const auto& f : factors) {
        const Node& n = f.node();
        if (n.kind == NodeKind::Constant) {
            coef *= n.value;
        } else if (n.kind == NodeKind::Variable) {
            mono.emplace_back(n.var, 1.0);
            has_mono = true;
        } else if (n.kind == NodeKind::Monomial) {
            coef *= n.value;
            mono.insert(mono.end(), n.factors.begin(), n.factors.end());
            has_mono = true;
        } else if (n.kind == NodeKind::Product) {
            rest.insert(rest.end(), n.children.begin(), n.children.end());
        } else if (n.kind == NodeKind::Sum && n.children.size() == 1 && n.value == 0.0) {
            // scaled single term, e.g. -x or 3*sin(y)
            coef *= n.weights[0];
            const Node& inner = n.children[0].node();
            if (inner.kind == NodeKind::Product) {
                rest.insert(rest.end(), inner.children.begin(), inner.children.end());
            } else if (inner.kind == NodeKind::Variable) {
                mono.emplace_back(inner.var, 1.0);
                has_mono = true;
            } else if (inner.kind == NodeKind::Monomial) {
                coef *= inner.value;
                mono.insert(mono.end(), inner.factors.begin(), inner.factors.end());
                has_mono = true;
            } else {
                rest.push_back(n.children[0]);
            }
        } else {
            rest.push_back(f);
        }
    }
    if (coef == 0.0) return Expression(0.0);
    if (has_mono) {
        Expression m = monomial(rest.empty() ? coef : 1.0, std::move(mono));
        if (rest.empty()) return m;
        if (!m.is_constant()) {
            rest.insert(rest.begin(), m);
        }
    }
    if (rest.empty()) return Expression(coef);
    Expression core;
    if (rest.size() == 1) {
        core = rest[0];
    } else {
        auto n = make_node(NodeKind::Product);
        n->children = std::move(rest);
        core = Expression(std::move(n));
    }
    if (coef == 1.0) return core;
    return sum({core}, {coef});
}

NodeKind Expression::kind() const { return node_->kind; }

double Expression::constant_value() const {
    if (!is_constant()) throw std::logic_error("expression is not constant");
    return node_->value;
}

double Expression::evaluate(std::span<const double> x) const { return eval_node(*node_, x); }

std::vector<int> Expression::variables() const {
    std::vector<int> out;
    collect_vars(*node_, out);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::string Expression::to_string() const {
    std::ostringstream out;
    out.precision(17);
    print(*node_, out);
    return out.str();
}

Expression operator+(const Expression& a, const Expression& b) { return Expression::sum({a, b}, {1.0, 1.0}); }
Expression operator-(const Expression& a, const Expression& b) { return Expression::sum({a, b}, {1.0, -1.0}); }
Expression operator-(const Expression& a) { return Expression::sum({a}, {-1.0}); }
Expression operator*(const Expression& a, const Expression& b) { return Expression::product({a, b}); }

Expression pow(const Expression& base, double exponent) {
    if (exponent == 0.0) return Expression(1.0);
    if (exponent == 1.0) return base;
    const Node& b = base.node();
    if (b.kind == NodeKind::Constant) return Expression(power_value(b.value, exponent));
    if (b.kind == NodeKind::Variable) return Expression::monomial(1.0, {{b.var, exponent}});
    if (b.kind == NodeKind::Monomial) {
        // (c prod x^a)^p folds when p is integral, or when every a is
        // fractional and c > 0 (the domain already forces x > 0).
        bool foldable = is_integer(exponent);
        if (!foldable && b.value > 0.0) {
            foldable = std::none_of(b.factors.begin(), b.factors.end(),
                                    [](const auto& f) { return is_integer(f.second); });
        }
        if (foldable) {
            std::vector<std::pair<int, double>> f = b.factors;
            for (auto& [v, e] : f) e *= exponent;
            return Expression::monomial(power_value(b.value, exponent), std::move(f));
        }
    }
    auto n = make_node(NodeKind::Power);
    n->value = exponent;
    n->children = {base};
    return Expression::wrap(std::move(n));
}

Expression sin(const Expression& arg) {
    if (arg.is_constant()) return Expression(std::sin(arg.constant_value()));
    auto n = make_node(NodeKind::Sin);
    n->children = {arg};
    return Expression::wrap(std::move(n));
}

Expression cos(const Expression& arg) {
    if (arg.is_constant()) return Expression(std::cos(arg.constant_value()));
    auto n = make_node(NodeKind::Cos);
    n->children = {arg};
    return Expression::wrap(std::move(n));
}

namespace detail {

Expression rebuild(const Node& original, std::vector<Expression> children) {
    switch (original.kind) {
    case NodeKind::Sum:
        return Expression::sum(std::move(children), original.weights, original.value);
    case NodeKind::Product:
        return Expression::product(std::move(children));
    case NodeKind::Power:
        return pow(children.at(0), original.value);
    case NodeKind::Sin:
        return sin(children.at(0));
    case NodeKind::Cos:
        return cos(children.at(0));
    default:
        throw std::logic_error("rebuild called on a leaf node");
    }
}

}  // namespace detail

LocalDerivatives differentiate(const Expression& expr, std::span<const int> local_vars, std::span<const double> x) {
    JetEvaluator ev(local_vars, x);
    Jet j = ev.run(expr.node());
    return {j.v, std::move(j.g), std::move(j.h)};
}

double eval(const Expression& expr, std::span<const double> x) { return expr.evaluate(x); }

SparseGradient eval_grad(const Expression& expr, std::span<const double> x) {
    const auto vars = expr.variables();
    auto d = differentiate(expr, vars, x);
    SparseGradient g;
    g.index = vars;
    g.value.assign(d.gradient.data(), d.gradient.data() + d.gradient.size());
    return g;
}

std::vector<HessianEntry> eval_hess(const Expression& expr, std::span<const double> x) {
    const auto vars = expr.variables();
    auto d = differentiate(expr, vars, x);
    std::vector<HessianEntry> out;
    for (std::size_t i = 0; i < vars.size(); ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double v = d.hessian(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (v != 0.0) out.push_back({vars[i], vars[j], v});
        }
    }
    return out;
}

Expression substitute(const Expression& expr, const std::map<int, Expression>& replacements) {
    return transform(expr, [&](const Expression& e) -> Expression {
        const Node& n = e.node();
        if (n.kind == NodeKind::Variable) {
            auto it = replacements.find(n.var);
            return it == replacements.end() ? e : it->second;
        }
        if (n.kind == NodeKind::Monomial) {
            std::vector<std::pair<int, double>> kept;
            std::vector<Expression> factors;
            for (const auto& [v, p] : n.factors) {
                auto it = replacements.find(v);
                if (it == replacements.end()) {
                    kept.emplace_back(v, p);
                } else {
                    factors.push_back(pow(it->second, p));
                }
            }
            if (factors.empty()) return e;
            factors.push_back(Expression::monomial(n.value, std::move(kept)));
            return Expression::product(std::move(factors));
        }
        return e;
    });
}

SumDecomposition decompose_sum(const Expression& expr) {
    SumDecomposition d;
    const Node& n = expr.node();
    if (n.kind == NodeKind::Constant) {
        d.constant = n.value;
    } else if (n.kind == NodeKind::Sum) {
        d.constant = n.value;
        for (std::size_t i = 0; i < n.children.size(); ++i) d.terms.emplace_back(n.weights[i], n.children[i]);
    } else {
        d.terms.emplace_back(1.0, expr);
    }
    return d;
}

}  // namespace convexopf
