#include "convexopf/signomial.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace convexopf {

namespace {

constexpr double kSumTol = 1e-12;

using Key = std::vector<std::pair<int, double>>;  // sorted variable/exponent pairs
using Poly = std::map<Key, double>;

constexpr std::size_t kMaxPolyTerms = 200000;

Key multiply_keys(const Key& a, const Key& b) {
    Key out;
    out.reserve(a.size() + b.size());
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
            out.push_back(a[i++]);
        } else if (i == a.size() || b[j].first < a[i].first) {
            out.push_back(b[j++]);
        } else {
            const double e = a[i].second + b[j].second;
            if (e != 0.0) out.emplace_back(a[i].first, e);
            ++i;
            ++j;
        }
    }
    return out;
}

Poly multiply(const Poly& a, const Poly& b) {
    Poly out;
    for (const auto& [ka, ca] : a) {
        for (const auto& [kb, cb] : b) {
            out[multiply_keys(ka, kb)] += ca * cb;
        }
    }
    if (out.size() > kMaxPolyTerms) throw NotSignomial("signomial expansion too large");
    return out;
}

Poly expand(const Node& n) {
    switch (n.kind) {
    case NodeKind::Constant:
        return {{Key{}, n.value}};
    case NodeKind::Variable:
        return {{Key{{n.var, 1.0}}, 1.0}};
    case NodeKind::Monomial:
        return {{n.factors, n.value}};
    case NodeKind::Sum: {
        Poly out;
        if (n.value != 0.0) out[Key{}] += n.value;
        for (std::size_t i = 0; i < n.children.size(); ++i) {
            for (const auto& [k, c] : expand(n.children[i].node())) out[k] += n.weights[i] * c;
        }
        return out;
    }
    case NodeKind::Product: {
        Poly out{{Key{}, 1.0}};
        for (const auto& c : n.children) out = multiply(out, expand(c.node()));
        return out;
    }
    case NodeKind::Power: {
        Poly base = expand(n.children[0].node());
        std::erase_if(base, [](const auto& kv) { return kv.second == 0.0; });
        const double e = n.value;
        const bool integral = e == std::round(e);
        if (base.size() == 1) {
            const auto& [k, c] = *base.begin();
            if (!integral && c <= 0.0) throw NotSignomial("fractional power of a non-positive term");
            Key scaled = k;
            for (auto& [v, p] : scaled) p *= e;
            return {{scaled, std::pow(c, e)}};
        }
        if (base.empty()) return {{Key{}, e > 0.0 ? 0.0 : 1.0}};
        if (!integral || e < 0.0) throw NotSignomial("non-integral or negative power of a sum");
        Poly out{{Key{}, 1.0}};
        for (int i = 0; i < static_cast<int>(e); ++i) out = multiply(out, base);
        return out;
    }
    case NodeKind::Sin:
    case NodeKind::Cos:
        throw NotSignomial("trigonometric node in signomial expansion");
    }
    return {};
}

TermClass classify(double c, const std::vector<double>& exps) {
    if (exps.empty() || c == 0.0) return TermClass::Nonconvex;
    const double sum = std::accumulate(exps.begin(), exps.end(), 0.0);
    const auto positive = std::count_if(exps.begin(), exps.end(), [](double p) { return p > 0.0; });
    const auto negative = std::count_if(exps.begin(), exps.end(), [](double p) { return p < 0.0; });
    const auto n = static_cast<long>(exps.size());
    if (c > 0.0) {
        if (negative == n) return TermClass::ConvexPositive;
        if (positive == 1 && negative == n - 1 && sum >= 1.0 - kSumTol) return TermClass::ConvexPositive;
        return TermClass::Nonconvex;
    }
    if (positive == n && sum >= -kSumTol && sum <= 1.0 + kSumTol) return TermClass::ConvexNegative;
    return TermClass::Nonconvex;
}

std::string format_number(double v) {
    std::ostringstream s;
    s.precision(12);
    s << v;
    return s.str();
}

std::string exponent_text(double p) {
    for (int d : {2, 3}) {
        const double n = p * d;
        if (std::abs(n - std::round(n)) < 1e-12 && std::abs(std::round(n)) != 0.0 && std::fmod(std::round(n), d) != 0.0) {
            return std::to_string(static_cast<long>(std::round(n))) + "/" + std::to_string(d);
        }
    }
    return format_number(p);
}

}  // namespace

double SignomialTerm::evaluate(std::span<const double> x) const {
    double v = coefficient;
    for (const auto& [var, p] : powers) v *= std::pow(x[static_cast<std::size_t>(var)], p);
    return v;
}

Expression SignomialTerm::to_expression() const {
    return Expression::monomial(coefficient, std::vector<std::pair<int, double>>(powers.begin(), powers.end()));
}

bool Signomial::is_affine() const {
    return std::all_of(terms.begin(), terms.end(), [](const SignomialTerm& t) { return t.is_linear(); });
}

Expression Signomial::to_expression() const {
    std::vector<Expression> parts;
    std::vector<double> weights;
    for (const auto& t : terms) {
        parts.push_back(t.to_expression());
        weights.push_back(1.0);
    }
    return Expression::sum(std::move(parts), std::move(weights), constant);
}

Signomial to_signomial(const Expression& expr, double drop_tol) {
    const Poly poly = expand(expr.node());
    Signomial s;
    double biggest = 0.0;
    for (const auto& [k, c] : poly) {
        if (!k.empty()) biggest = std::max(biggest, std::abs(c));
    }
    for (const auto& [k, c] : poly) {
        if (k.empty()) {
            s.constant += c;
            continue;
        }
        if (c == 0.0 || std::abs(c) <= drop_tol * biggest) continue;
        SignomialTerm t;
        t.coefficient = c;
        t.powers.insert(k.begin(), k.end());
        s.terms.push_back(std::move(t));
    }
    return s;
}

std::string to_string(TermClass c) {
    switch (c) {
    case TermClass::ConvexPositive: return "ConvexPositive";
    case TermClass::ConvexNegative: return "ConvexNegative";
    case TermClass::Nonconvex: return "Nonconvex";
    }
    return "Nonconvex";
}

TermClass classify_term(const SignomialTerm& term) {
    std::vector<double> exps;
    for (const auto& [v, p] : term.powers) exps.push_back(p);
    return classify(term.coefficient, exps);
}

// ---------------------------------------------------------------------------
// Sampling oracles

namespace {

std::vector<double> sample_point(const Box& box, std::size_t dim, std::mt19937_64& rng) {
    std::vector<double> x(dim, 0.0);
    for (const auto& [v, b] : box.bounds) {
        if (static_cast<std::size_t>(v) >= dim) continue;
        std::uniform_real_distribution<double> u(b.first, b.second);
        x[static_cast<std::size_t>(v)] = b.first == b.second ? b.first : u(rng);
    }
    return x;
}

std::size_t box_dimension(const Box& box, const std::vector<int>& vars) {
    int top = vars.empty() ? -1 : vars.back();
    if (!box.bounds.empty()) top = std::max(top, box.bounds.rbegin()->first);
    for (int v : vars) {
        if (!box.bounds.contains(v)) throw std::invalid_argument("box does not bound variable " + std::to_string(v));
    }
    return static_cast<std::size_t>(top + 1);
}

}  // namespace

ConvexityCheck verify_convexity_sampled(const Expression& f, const Box& box, std::size_t n_samples,
                                        std::uint64_t seed) {
    const auto vars = f.variables();
    const std::size_t dim = box_dimension(box, vars);
    std::mt19937_64 rng(seed);
    ConvexityCheck res;
    if (vars.empty()) return res;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
    for (std::size_t s = 0; s < n_samples; ++s) {
        auto x = sample_point(box, dim, rng);
        const auto d = differentiate(f, vars, x);
        double lam = 0.0;
        if (d.hessian.rows() == 1) {
            lam = d.hessian(0, 0);
        } else {
            eig.compute(d.hessian, Eigen::EigenvaluesOnly);
            lam = eig.eigenvalues().minCoeff();
        }
        const double scale = std::max(1.0, d.hessian.cwiseAbs().maxCoeff());
        if (s == 0 || lam < res.min_eigenvalue) res.min_eigenvalue = lam;
        if (lam < -1e-8 * scale) {
            res.violation = true;
            res.point = std::move(x);
            res.min_eigenvalue = lam;
            return res;
        }
    }
    return res;
}

UnderestimatorCheck verify_underestimator(const Expression& g, const Expression& f, const Box& box,
                                          std::size_t n_samples, std::uint64_t seed) {
    auto vars = g.variables();
    for (int v : f.variables()) vars.push_back(v);
    std::sort(vars.begin(), vars.end());
    vars.erase(std::unique(vars.begin(), vars.end()), vars.end());
    const std::size_t dim = box_dimension(box, vars);
    std::mt19937_64 rng(seed);
    UnderestimatorCheck res;
    res.max_excess = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < n_samples; ++s) {
        auto x = sample_point(box, dim, rng);
        const double excess = g.evaluate(x) - f.evaluate(x);
        if (excess > res.max_excess) {
            res.max_excess = excess;
            res.worst_point = x;
        }
    }
    res.holds = res.max_excess <= 1e-10;
    return res;
}

// ---------------------------------------------------------------------------
// Transformation planning

std::vector<double> default_exponent_grid() { return {-3.0, -2.0, -1.0, -0.5, -1.0 / 3.0, 1.0 / 3.0, 0.5, 1.0, 2.0, 3.0}; }

double TransformationPlan::reciprocal_cost() const {
    double s = 0.0;
    for (const auto& [k, p] : exponents) s += std::abs(1.0 / p);
    return s;
}

double TransformationPlan::exponent_for(int variable, int sign) const {
    auto it = exponents.find({variable, sign});
    return it == exponents.end() ? 1.0 : it->second;
}

std::string TransformationPlan::dump(const std::vector<VariableInfo>* names) const {
    auto name = [&](int v) {
        if (names && static_cast<std::size_t>(v) < names->size()) return (*names)[static_cast<std::size_t>(v)].name;
        return "x" + std::to_string(v);
    };
    auto term_text = [&](const SignomialTerm& t) {
        std::string s = format_number(t.coefficient);
        for (const auto& [v, p] : t.powers) s += "*" + name(v) + "^" + exponent_text(p);
        return s;
    };
    std::ostringstream out;
    out << "plan transformed=" << num_transformed() << " cost=" << format_number(reciprocal_cost())
        << " optimal=" << (proven_optimal ? "yes" : "no") << "\n";
    for (const auto& [k, p] : exponents) {
        out << "  " << name(k.variable) << (k.sign > 0 ? "(+)" : "(-)") << " = X^" << exponent_text(p)
            << "  inverse X = " << name(k.variable) << "^" << exponent_text(1.0 / p) << "\n";
    }
    out << "terms " << input_terms.size() << "\n";
    for (std::size_t i = 0; i < input_terms.size(); ++i) {
        out << "  [" << i << "] " << term_text(input_terms[i]) << " -> " << term_text(transformed_terms[i]) << " "
            << to_string(classify_term(transformed_terms[i])) << "\n";
    }
    return out.str();
}

namespace {

struct Candidate {
    double p = 1.0;
    int count = 0;
    double cost = 0.0;
};

struct Cost {
    int count = 0;
    double recip = 0.0;
    Cost operator+(const Cost& o) const { return {count + o.count, recip + o.recip}; }
    bool operator<(const Cost& o) const {
        if (count != o.count) return count < o.count;
        return recip < o.recip - 1e-12;
    }
};

std::vector<Candidate> make_candidates(const std::vector<double>& grid) {
    std::vector<Candidate> c{{1.0, 0, 0.0}};
    std::vector<double> g;
    for (double p : grid) {
        if (p == 0.0 || p == 1.0 || !std::isfinite(p)) continue;
        if (std::find(g.begin(), g.end(), p) == g.end()) g.push_back(p);
    }
    std::sort(g.begin(), g.end(), [](double a, double b) {
        const double ca = std::abs(1.0 / a);
        const double cb = std::abs(1.0 / b);
        if (std::abs(ca - cb) > 1e-12) return ca < cb;
        return a < b;  // negative first on ties
    });
    for (double p : g) c.push_back({p, 1, std::abs(1.0 / p)});
    return c;
}

struct TermView {
    double coefficient = 0.0;
    std::vector<int> keys;         // key indices
    std::vector<double> exponents; // original exponent per key
};

class Planner {
  public:
    Planner(const std::vector<SignomialTerm>& terms, const PlanOptions& opt)
        : cands_(make_candidates(opt.grid)), node_limit_(opt.node_limit) {
        for (const auto& t : terms) {
            TermView tv;
            tv.coefficient = t.coefficient;
            const int sign = t.coefficient > 0.0 ? 1 : -1;
            for (const auto& [v, p] : t.powers) {
                PlanKey k{v, sign};
                auto [it, inserted] = key_index_.try_emplace(k, static_cast<int>(keys_.size()));
                if (inserted) keys_.push_back(k);
                tv.keys.push_back(it->second);
                tv.exponents.push_back(p);
            }
            terms_.push_back(std::move(tv));
        }
        const std::size_t nk = keys_.size();
        domain_.assign(nk, std::vector<int>(cands_.size()));
        for (auto& d : domain_) std::iota(d.begin(), d.end(), 0);
        terms_of_.assign(nk, {});
        for (std::size_t t = 0; t < terms_.size(); ++t) {
            for (int k : terms_[t].keys) terms_of_[static_cast<std::size_t>(k)].push_back(t);
        }
        value_.assign(nk, -1);
    }

    TransformationPlan run(const std::vector<SignomialTerm>& terms) {
        std::vector<std::size_t> irreducible;
        for (std::size_t t = 0; t < terms_.size(); ++t) {
            if (!has_completion(t, /*use_domains=*/false)) irreducible.push_back(t);
        }
        if (!irreducible.empty()) {
            throw NoPlanFound(std::to_string(irreducible.size()) + " term(s) cannot be convexified on the grid",
                              irreducible);
        }
        propagate();
        for (std::size_t k = 0; k < keys_.size(); ++k) {
            if (domain_[k].empty()) throw NoPlanFound("conflicting exponent requirements", terms_of_[k]);
        }

        TransformationPlan plan;
        bool optimal = true;
        for (const auto& comp : components()) {
            std::vector<int> best;
            bool found = false;
            optimal = search(comp, best, found) && optimal;
            if (!found) {
                std::vector<std::size_t> ts;
                for (int k : comp) ts.insert(ts.end(), terms_of_[static_cast<std::size_t>(k)].begin(), terms_of_[static_cast<std::size_t>(k)].end());
                std::sort(ts.begin(), ts.end());
                ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
                throw NoPlanFound("no consistent exponent assignment found", ts);
            }
            for (std::size_t i = 0; i < comp.size(); ++i) value_[static_cast<std::size_t>(comp[i])] = best[i];
        }
        plan.proven_optimal = optimal;
        for (std::size_t k = 0; k < keys_.size(); ++k) {
            const double p = cands_[static_cast<std::size_t>(value_[k])].p;
            if (p != 1.0) plan.exponents[keys_[k]] = p;
        }
        plan.input_terms = terms;
        for (const auto& t : terms) {
            SignomialTerm tt = t;
            const int sign = t.coefficient > 0.0 ? 1 : -1;
            for (auto& [v, p] : tt.powers) p *= plan.exponent_for(v, sign);
            plan.transformed_terms.push_back(std::move(tt));
        }
        return plan;
    }

  private:
    bool convex_with(const TermView& t, const std::vector<int>& assign) const {
        std::vector<double> e(t.keys.size());
        for (std::size_t i = 0; i < t.keys.size(); ++i) e[i] = t.exponents[i] * cands_[static_cast<std::size_t>(assign[i])].p;
        return is_convex_class(classify(t.coefficient, e));
    }

    // Enumerates completions of term t; keys with value_ >= 0 are held fixed
    // unless use_domains is false (then every candidate is allowed).
    bool has_completion(std::size_t t, bool use_domains, int fixed_key = -1, int fixed_val = -1,
                        std::size_t limit = 200000) const {
        const auto& tv = terms_[t];
        const std::size_t n = tv.keys.size();
        std::vector<std::vector<int>> choices(n);
        std::size_t total = 1;
        for (std::size_t i = 0; i < n; ++i) {
            const int k = tv.keys[i];
            if (k == fixed_key) {
                choices[i] = {fixed_val};
            } else if (use_domains && value_[static_cast<std::size_t>(k)] >= 0) {
                choices[i] = {value_[static_cast<std::size_t>(k)]};
            } else if (use_domains) {
                choices[i] = domain_[static_cast<std::size_t>(k)];
            } else {
                choices[i].resize(cands_.size());
                std::iota(choices[i].begin(), choices[i].end(), 0);
            }
            if (choices[i].empty()) return false;
            total *= choices[i].size();
            if (total > limit) return true;  // too many to enumerate: assume supported
        }
        std::vector<std::size_t> idx(n, 0);
        std::vector<int> assign(n);
        while (true) {
            for (std::size_t i = 0; i < n; ++i) assign[i] = choices[i][idx[i]];
            if (convex_with(tv, assign)) return true;
            std::size_t i = 0;
            while (i < n && ++idx[i] == choices[i].size()) idx[i++] = 0;
            if (i == n) return false;
        }
    }

    void propagate() {
        bool changed = true;
        while (changed) {
            changed = false;
            for (std::size_t t = 0; t < terms_.size(); ++t) {
                for (int k : terms_[t].keys) {
                    auto& dom = domain_[static_cast<std::size_t>(k)];
                    const auto before = dom.size();
                    std::erase_if(dom, [&](int v) { return !has_completion(t, true, k, v, 20000); });
                    if (dom.size() != before) changed = true;
                    if (dom.empty()) return;
                }
            }
        }
    }

    std::vector<std::vector<int>> components() const {
        const std::size_t nk = keys_.size();
        std::vector<int> parent(nk);
        std::iota(parent.begin(), parent.end(), 0);
        std::function<int(int)> find = [&](int a) { return parent[static_cast<std::size_t>(a)] == a ? a : parent[static_cast<std::size_t>(a)] = find(parent[static_cast<std::size_t>(a)]); };
        for (const auto& t : terms_) {
            for (std::size_t i = 1; i < t.keys.size(); ++i) parent[static_cast<std::size_t>(find(t.keys[i]))] = find(t.keys[0]);
        }
        std::map<int, std::vector<int>> groups;
        for (std::size_t k = 0; k < nk; ++k) groups[find(static_cast<int>(k))].push_back(static_cast<int>(k));
        std::vector<std::vector<int>> out;
        for (auto& [r, g] : groups) {
            // most constrained first
            std::stable_sort(g.begin(), g.end(), [&](int a, int b) {
                const auto da = domain_[static_cast<std::size_t>(a)].size();
                const auto db = domain_[static_cast<std::size_t>(b)].size();
                if (da != db) return da < db;
                return terms_of_[static_cast<std::size_t>(a)].size() > terms_of_[static_cast<std::size_t>(b)].size();
            });
            out.push_back(std::move(g));
        }
        return out;
    }

    Cost cost_of(int cand) const {
        const auto& c = cands_[static_cast<std::size_t>(cand)];
        return {c.count, c.cost};
    }

    // Returns false if the node limit cut the search short.
    bool search(const std::vector<int>& order, std::vector<int>& best, bool& found) {
        const std::size_t n = order.size();
        std::vector<Cost> suffix(n + 1);
        for (std::size_t i = n; i-- > 0;) {
            const auto& dom = domain_[static_cast<std::size_t>(order[i])];
            Cost lo = cost_of(dom.front());
            for (int v : dom) lo = std::min(lo, cost_of(v));
            suffix[i] = suffix[i + 1] + lo;
        }
        Cost best_cost{std::numeric_limits<int>::max(), 0.0};
        std::vector<int> current(n, -1);
        bool complete = true;

        std::function<void(std::size_t, Cost)> dfs = [&](std::size_t depth, Cost acc) {
            if (nodes_ >= node_limit_) {
                complete = false;
                return;
            }
            ++nodes_;
            if (depth == n) {
                if (!found || acc < best_cost) {
                    best_cost = acc;
                    best = current;
                    found = true;
                }
                return;
            }
            if (found && !(acc + suffix[depth] < best_cost)) return;
            const int k = order[depth];
            std::vector<int> vals = domain_[static_cast<std::size_t>(k)];
            std::stable_sort(vals.begin(), vals.end(), [&](int a, int b) { return cost_of(a) < cost_of(b); });
            for (int v : vals) {
                const Cost next = acc + cost_of(v);
                if (found && !(next + suffix[depth + 1] < best_cost)) continue;
                value_[static_cast<std::size_t>(k)] = v;
                bool ok = true;
                for (std::size_t t : terms_of_[static_cast<std::size_t>(k)]) {
                    if (!has_completion(t, true, -1, -1, 5000)) {
                        ok = false;
                        break;
                    }
                }
                if (ok) {
                    current[depth] = v;
                    dfs(depth + 1, next);
                }
                value_[static_cast<std::size_t>(k)] = -1;
                if (!complete) return;
            }
        };
        dfs(0, Cost{});
        for (int k : order) value_[static_cast<std::size_t>(k)] = -1;
        return complete;
    }

    std::vector<Candidate> cands_;
    std::size_t node_limit_;
    std::size_t nodes_ = 0;
    std::vector<PlanKey> keys_;
    std::map<PlanKey, int> key_index_;
    std::vector<TermView> terms_;
    std::vector<std::vector<int>> domain_;
    std::vector<std::vector<std::size_t>> terms_of_;
    std::vector<int> value_;
};

}  // namespace

TransformationPlan plan_transformations(const std::vector<SignomialTerm>& terms, const PlanOptions& options) {
    for (const auto& t : terms) {
        if (t.powers.empty() || t.coefficient == 0.0) throw std::invalid_argument("plan_transformations: constant term");
    }
    Planner planner(terms, options);
    return planner.run(terms);
}

bool term_is_reducible(const SignomialTerm& term, const std::vector<double>& grid) {
    try {
        PlanOptions opt;
        opt.grid = grid;
        plan_transformations({term}, opt);
        return true;
    } catch (const NoPlanFound&) {
        return false;
    }
}

std::vector<Constraint> sign_transform_inverse(int x_var, int big_x_var, double p, InverseMode mode,
                                               const std::string& tag, InverseRecord* record) {
    if (p == 0.0) throw std::invalid_argument("sign_transform_inverse: p must be nonzero");
    const double r = 1.0 / p;
    const Expression xr = Expression::monomial(1.0, {{x_var, r}});
    const Expression big_x = Expression::variable(big_x_var);
    const bool flipped = r > 0.0 && r < 1.0;
    const std::string origin = "transform-inverse@" + tag;
    Constraint convex{flipped ? big_x - xr : xr - big_x, Sense::LessEqual, origin};
    if (record) {
        *record = {x_var, big_x_var, p, r, flipped, convex};
    }
    if (mode == InverseMode::Relaxed) return {convex};
    return {Constraint{big_x - xr, Sense::Equal, origin}};
}

}  // namespace convexopf
