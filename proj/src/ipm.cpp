#include "convexopf/ipm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

namespace convexopf {

std::string to_string(SolverStatus status) {
    switch (status) {
    case SolverStatus::Optimal: return "Optimal";
    case SolverStatus::MaxIter: return "MaxIter";
    case SolverStatus::Infeasible: return "Infeasible";
    case SolverStatus::NumericalFailure: return "NumericalFailure";
    }
    return "NumericalFailure";
}

namespace {

using Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

constexpr double kBoundInf = 1e19;
constexpr double kKappaSigma = 1e10;
constexpr double kArmijo = 1e-4;
constexpr double kMuMin = 1e-11;

bool finite_lower(double l) { return l > -kBoundInf; }
bool finite_upper(double u) { return u < kBoundInf; }

struct Function {
    std::vector<int> vars;        // model variable indices, sorted
    std::vector<int> cols;        // free column per var, -1 when fixed
    std::vector<int> hess_slots;  // per local pair (i >= j), row-major lower; -1 if unused
    std::vector<int> jac_slots;   // per var, constraints only
    int slack_col = -1;
    int slack_slot = -1;
};

struct Step {
    VectorXd dw;
    VectorXd dlambda;
    VectorXd dzl;
    VectorXd dzu;
};

class InteriorPoint {
  public:
    InteriorPoint(const NlpModel& model, const SolverOptions& options) : model_(model), opt_(options) {
        build_structure();
    }

    Solution run(std::vector<double> x0);

  private:
    void build_structure();
    int slot(int row, int col) const;

    std::vector<double> expand(const VectorXd& w) const {
        std::vector<double> x = fixed_x_;
        for (int j = 0; j < nx_; ++j) x[static_cast<std::size_t>(free_[static_cast<std::size_t>(j)])] = w[j];
        return x;
    }

    // Objective (scaled) and constraint values; false on a domain error.
    bool evaluate_values(const VectorXd& w, double& f, VectorXd& c) const;
    void evaluate_derivatives(const VectorXd& w, const VectorXd& lambda);

    bool factorize(const VectorXd& sigma, double delta_w);
    VectorXd solve_system(const VectorXd& rhs) const;

    Step compute_step(const VectorXd& w, const VectorXd& zl, const VectorXd& zu, double mu) const;

    double barrier(const VectorXd& w, double mu) const {
        double b = 0.0;
        for (int i = 0; i < nw_; ++i) {
            if (finite_lower(lo_[i])) b -= std::log(w[i] - lo_[i]);
            if (finite_upper(hi_[i])) b -= std::log(hi_[i] - w[i]);
        }
        return mu * b;
    }

    double fraction_to_boundary(const VectorXd& w, const VectorXd& dw, double tau) const;

    const NlpModel& model_;
    SolverOptions opt_;

    int n_ = 0;   // model variables
    int nx_ = 0;  // free model variables
    int nw_ = 0;  // free variables + slacks
    int m_ = 0;   // constraints
    std::vector<int> free_;
    std::vector<int> col_of_;
    std::vector<double> fixed_x_;
    VectorXd lo_;
    VectorXd hi_;
    Function obj_;
    std::vector<Function> cons_;

    SpMat kkt_;
    std::vector<int> diag_slot_;
    bool dense_ = false;
    Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> sparse_ldlt_;
    Eigen::LDLT<Eigen::MatrixXd> dense_ldlt_;
    Eigen::MatrixXd dense_kkt_;
    double delta_c_ = 0.0;

    // derivative state at the current iterate
    double obj_scale_ = 1.0;
    double f_ = 0.0;
    VectorXd grad_;
    VectorXd c_;
    std::vector<std::vector<double>> jac_;  // per constraint, aligned with Function::vars
    std::vector<double> hess_vals_;         // Lagrangian Hessian contributions per KKT slot
    VectorXd jt_lambda_;
};

void InteriorPoint::build_structure() {
    n_ = static_cast<int>(model_.num_variables());
    m_ = static_cast<int>(model_.constraints.size());
    col_of_.assign(static_cast<std::size_t>(n_), -1);
    fixed_x_.assign(static_cast<std::size_t>(n_), 0.0);
    for (int i = 0; i < n_; ++i) {
        const auto& v = model_.variables[static_cast<std::size_t>(i)];
        if (v.lower == v.upper) {
            fixed_x_[static_cast<std::size_t>(i)] = v.lower;
        } else {
            col_of_[static_cast<std::size_t>(i)] = static_cast<int>(free_.size());
            free_.push_back(i);
        }
    }
    nx_ = static_cast<int>(free_.size());

    std::vector<int> slack_of(static_cast<std::size_t>(m_), -1);
    int ns = 0;
    for (int k = 0; k < m_; ++k) {
        if (model_.constraints[static_cast<std::size_t>(k)].sense == Sense::LessEqual) slack_of[static_cast<std::size_t>(k)] = nx_ + ns++;
    }
    nw_ = nx_ + ns;
    lo_.resize(nw_);
    hi_.resize(nw_);
    for (int j = 0; j < nx_; ++j) {
        const auto& v = model_.variables[static_cast<std::size_t>(free_[static_cast<std::size_t>(j)])];
        lo_[j] = std::isfinite(v.lower) ? v.lower : -kBoundInf * 10;
        hi_[j] = std::isfinite(v.upper) ? v.upper : kBoundInf * 10;
    }
    for (int j = nx_; j < nw_; ++j) {
        lo_[j] = 0.0;
        hi_[j] = kBoundInf * 10;
    }

    auto make_function = [&](const Expression& e) {
        Function fn;
        fn.vars = e.variables();
        for (int v : fn.vars) fn.cols.push_back(col_of_[static_cast<std::size_t>(v)]);
        return fn;
    };
    obj_ = make_function(model_.objective);
    cons_.reserve(static_cast<std::size_t>(m_));
    for (int k = 0; k < m_; ++k) {
        cons_.push_back(make_function(model_.constraints[static_cast<std::size_t>(k)].expr));
        cons_.back().slack_col = slack_of[static_cast<std::size_t>(k)];
    }

    const int dim = nw_ + m_;
    std::vector<Eigen::Triplet<double>> trip;
    for (int i = 0; i < dim; ++i) trip.emplace_back(i, i, 0.0);
    auto add_hessian_pattern = [&](const Function& fn) {
        for (std::size_t a = 0; a < fn.cols.size(); ++a) {
            for (std::size_t b = 0; b <= a; ++b) {
                const int ca = fn.cols[a];
                const int cb = fn.cols[b];
                if (ca < 0 || cb < 0) continue;
                trip.emplace_back(std::max(ca, cb), std::min(ca, cb), 0.0);
            }
        }
    };
    add_hessian_pattern(obj_);
    for (int k = 0; k < m_; ++k) {
        const auto& fn = cons_[static_cast<std::size_t>(k)];
        add_hessian_pattern(fn);
        for (int c : fn.cols) {
            if (c >= 0) trip.emplace_back(nw_ + k, c, 0.0);
        }
        if (fn.slack_col >= 0) trip.emplace_back(nw_ + k, fn.slack_col, 0.0);
    }
    kkt_.resize(dim, dim);
    kkt_.setFromTriplets(trip.begin(), trip.end());
    kkt_.makeCompressed();

    diag_slot_.resize(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) diag_slot_[static_cast<std::size_t>(i)] = slot(i, i);
    auto assign_slots = [&](Function& fn, int row) {
        const std::size_t nv = fn.cols.size();
        fn.hess_slots.assign(nv * (nv + 1) / 2, -1);
        std::size_t idx = 0;
        for (std::size_t a = 0; a < nv; ++a) {
            for (std::size_t b = 0; b <= a; ++b, ++idx) {
                const int ca = fn.cols[a];
                const int cb = fn.cols[b];
                if (ca >= 0 && cb >= 0) fn.hess_slots[idx] = slot(std::max(ca, cb), std::min(ca, cb));
            }
        }
        if (row >= 0) {
            fn.jac_slots.assign(nv, -1);
            for (std::size_t a = 0; a < nv; ++a) {
                if (fn.cols[a] >= 0) fn.jac_slots[a] = slot(row, fn.cols[a]);
            }
            if (fn.slack_col >= 0) fn.slack_slot = slot(row, fn.slack_col);
        }
    };
    assign_slots(obj_, -1);
    for (int k = 0; k < m_; ++k) assign_slots(cons_[static_cast<std::size_t>(k)], nw_ + k);

    dense_ = nx_ < opt_.dense_threshold;
    if (!dense_) sparse_ldlt_.analyzePattern(kkt_);
    delta_c_ = m_ > 0 ? 1e-8 : 0.0;
    jac_.resize(static_cast<std::size_t>(m_));
    hess_vals_.assign(static_cast<std::size_t>(kkt_.nonZeros()), 0.0);
}

int InteriorPoint::slot(int row, int col) const {
    const int* begin = kkt_.innerIndexPtr() + kkt_.outerIndexPtr()[col];
    const int* end = kkt_.innerIndexPtr() + kkt_.outerIndexPtr()[col + 1];
    const int* it = std::lower_bound(begin, end, row);
    if (it == end || *it != row) throw std::logic_error("KKT pattern lookup failed");
    return static_cast<int>(it - kkt_.innerIndexPtr());
}

bool InteriorPoint::evaluate_values(const VectorXd& w, double& f, VectorXd& c) const {
    const auto x = expand(w);
    try {
        f = obj_scale_ * model_.objective.evaluate(x);
        c.resize(m_);
        for (int k = 0; k < m_; ++k) {
            const auto& fn = cons_[static_cast<std::size_t>(k)];
            c[k] = model_.constraints[static_cast<std::size_t>(k)].expr.evaluate(x);
            if (fn.slack_col >= 0) c[k] += w[fn.slack_col];
        }
    } catch (const DomainError&) {
        return false;
    }
    return std::isfinite(f) && c.allFinite();
}

void InteriorPoint::evaluate_derivatives(const VectorXd& w, const VectorXd& lambda) {
    const auto x = expand(w);
    std::fill(hess_vals_.begin(), hess_vals_.end(), 0.0);
    grad_ = VectorXd::Zero(nw_);
    c_.resize(m_);
    jt_lambda_ = VectorXd::Zero(nw_);

    auto scatter_hessian = [&](const Function& fn, const Eigen::MatrixXd& h, double weight) {
        std::size_t idx = 0;
        for (std::size_t a = 0; a < fn.cols.size(); ++a) {
            for (std::size_t b = 0; b <= a; ++b, ++idx) {
                const int s = fn.hess_slots[idx];
                if (s >= 0) hess_vals_[static_cast<std::size_t>(s)] += weight * h(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
            }
        }
    };

    auto d = differentiate(model_.objective, obj_.vars, x);
    f_ = obj_scale_ * d.value;
    for (std::size_t a = 0; a < obj_.cols.size(); ++a) {
        if (obj_.cols[a] >= 0) grad_[obj_.cols[a]] += obj_scale_ * d.gradient[static_cast<Eigen::Index>(a)];
    }
    scatter_hessian(obj_, d.hessian, obj_scale_);

    for (int k = 0; k < m_; ++k) {
        const auto& fn = cons_[static_cast<std::size_t>(k)];
        auto dk = differentiate(model_.constraints[static_cast<std::size_t>(k)].expr, fn.vars, x);
        c_[k] = dk.value + (fn.slack_col >= 0 ? w[fn.slack_col] : 0.0);
        auto& jk = jac_[static_cast<std::size_t>(k)];
        jk.assign(dk.gradient.data(), dk.gradient.data() + dk.gradient.size());
        for (std::size_t a = 0; a < fn.cols.size(); ++a) {
            if (fn.cols[a] >= 0) jt_lambda_[fn.cols[a]] += jk[a] * lambda[k];
        }
        if (fn.slack_col >= 0) jt_lambda_[fn.slack_col] += lambda[k];
        if (lambda[k] != 0.0) scatter_hessian(fn, dk.hessian, lambda[k]);
    }
}

bool InteriorPoint::factorize(const VectorXd& sigma, double delta_w) {
    double* vals = kkt_.valuePtr();
    std::copy(hess_vals_.begin(), hess_vals_.end(), vals);
    for (int k = 0; k < m_; ++k) {
        const auto& fn = cons_[static_cast<std::size_t>(k)];
        const auto& jk = jac_[static_cast<std::size_t>(k)];
        for (std::size_t a = 0; a < fn.cols.size(); ++a) {
            if (fn.jac_slots[a] >= 0) vals[fn.jac_slots[a]] += jk[a];
        }
        if (fn.slack_slot >= 0) vals[fn.slack_slot] += 1.0;
    }
    for (int i = 0; i < nw_; ++i) vals[diag_slot_[static_cast<std::size_t>(i)]] += sigma[i] + delta_w;
    for (int k = 0; k < m_; ++k) vals[diag_slot_[static_cast<std::size_t>(nw_ + k)]] -= delta_c_;

    VectorXd d;
    if (dense_) {
        dense_kkt_ = Eigen::MatrixXd(kkt_).selfadjointView<Eigen::Lower>();
        dense_ldlt_.compute(dense_kkt_);
        if (dense_ldlt_.info() != Eigen::Success) return false;
        d = dense_ldlt_.vectorD();
    } else {
        sparse_ldlt_.factorize(kkt_);
        if (sparse_ldlt_.info() != Eigen::Success) return false;
        d = sparse_ldlt_.vectorD();
    }
    int pos = 0;
    int neg = 0;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        if (d[i] > 0.0) ++pos;
        if (d[i] < 0.0) ++neg;
    }
    return pos == nw_ && neg == m_;
}

VectorXd InteriorPoint::solve_system(const VectorXd& rhs) const {
    VectorXd sol = dense_ ? VectorXd(dense_ldlt_.solve(rhs)) : VectorXd(sparse_ldlt_.solve(rhs));
    // one step of iterative refinement
    VectorXd r = rhs - kkt_.selfadjointView<Eigen::Lower>() * sol;
    sol += dense_ ? VectorXd(dense_ldlt_.solve(r)) : VectorXd(sparse_ldlt_.solve(r));
    return sol;
}

Step InteriorPoint::compute_step(const VectorXd& w, const VectorXd& zl, const VectorXd& zu, double mu) const {
    VectorXd rhs(nw_ + m_);
    for (int i = 0; i < nw_; ++i) {
        double r = -(grad_[i] + jt_lambda_[i]);
        if (finite_lower(lo_[i])) r += mu / (w[i] - lo_[i]);
        if (finite_upper(hi_[i])) r -= mu / (hi_[i] - w[i]);
        rhs[i] = r;
    }
    rhs.tail(m_) = -c_;
    const VectorXd sol = solve_system(rhs);
    Step st;
    st.dw = sol.head(nw_);
    st.dlambda = sol.tail(m_);
    st.dzl = VectorXd::Zero(nw_);
    st.dzu = VectorXd::Zero(nw_);
    for (int i = 0; i < nw_; ++i) {
        if (finite_lower(lo_[i])) {
            const double gap = w[i] - lo_[i];
            st.dzl[i] = mu / gap - zl[i] - zl[i] / gap * st.dw[i];
        }
        if (finite_upper(hi_[i])) {
            const double gap = hi_[i] - w[i];
            st.dzu[i] = mu / gap - zu[i] + zu[i] / gap * st.dw[i];
        }
    }
    return st;
}

double InteriorPoint::fraction_to_boundary(const VectorXd& w, const VectorXd& dw, double tau) const {
    double alpha = 1.0;
    for (int i = 0; i < nw_; ++i) {
        if (dw[i] < 0.0 && finite_lower(lo_[i])) alpha = std::min(alpha, -tau * (w[i] - lo_[i]) / dw[i]);
        if (dw[i] > 0.0 && finite_upper(hi_[i])) alpha = std::min(alpha, tau * (hi_[i] - w[i]) / dw[i]);
    }
    return alpha;
}

double dual_fraction(const VectorXd& z, const VectorXd& dz, double tau) {
    double alpha = 1.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        if (dz[i] < 0.0 && z[i] > 0.0) alpha = std::min(alpha, -tau * z[i] / dz[i]);
    }
    return alpha;
}

Solution InteriorPoint::run(std::vector<double> x0) {
    const auto start = std::chrono::steady_clock::now();
    Solution sol;

    if (static_cast<int>(x0.size()) != n_) throw std::invalid_argument("initial point has the wrong dimension");
    for (int i = 0; i < n_; ++i) {
        if (col_of_[static_cast<std::size_t>(i)] < 0) x0[static_cast<std::size_t>(i)] = fixed_x_[static_cast<std::size_t>(i)];
    }

    // Push free variables strictly inside their bounds.
    VectorXd w(nw_);
    for (int j = 0; j < nx_; ++j) {
        const double l = lo_[j];
        const double u = hi_[j];
        double v = x0[static_cast<std::size_t>(free_[static_cast<std::size_t>(j)])];
        if (finite_lower(l) && finite_upper(u)) {
            const double pl = std::min(opt_.bound_push * std::max(1.0, std::abs(l)), 0.5 * opt_.bound_push * (u - l));
            const double pu = std::min(opt_.bound_push * std::max(1.0, std::abs(u)), 0.5 * opt_.bound_push * (u - l));
            v = std::clamp(v, l + pl, u - pu);
        } else if (finite_lower(l)) {
            v = std::max(v, l + opt_.bound_push * std::max(1.0, std::abs(l)));
        } else if (finite_upper(u)) {
            v = std::min(v, u - opt_.bound_push * std::max(1.0, std::abs(u)));
        }
        w[j] = v;
    }
    for (int j = nx_; j < nw_; ++j) w[j] = 0.0;

    // Objective scaling from the gradient at the start point.
    {
        const auto x = expand(w);
        try {
            const auto g = eval_grad(model_.objective, x);
            double gmax = 0.0;
            for (double v : g.value) gmax = std::max(gmax, std::abs(v));
            obj_scale_ = gmax > 100.0 ? 100.0 / gmax : 1.0;
        } catch (const DomainError& e) {
            sol.status = SolverStatus::NumericalFailure;
            sol.message = std::string("initial point outside the domain: ") + e.what();
            sol.x = x;
            return sol;
        }
    }

    // Slacks start at the constraint value, pushed away from zero.
    {
        const auto x = expand(w);
        for (int k = 0; k < m_; ++k) {
            const auto& fn = cons_[static_cast<std::size_t>(k)];
            if (fn.slack_col < 0) continue;
            double g = 0.0;
            try {
                g = model_.constraints[static_cast<std::size_t>(k)].expr.evaluate(x);
            } catch (const DomainError&) {
                g = 0.0;
            }
            w[fn.slack_col] = std::max(-g, opt_.bound_push);
        }
    }

    VectorXd lambda = VectorXd::Zero(m_);
    VectorXd zl = VectorXd::Zero(nw_);
    VectorXd zu = VectorXd::Zero(nw_);
    for (int i = 0; i < nw_; ++i) {
        if (finite_lower(lo_[i])) zl[i] = 1.0;
        if (finite_upper(hi_[i])) zu[i] = 1.0;
    }
    int n_bounds = 0;
    for (int i = 0; i < nw_; ++i) n_bounds += (finite_lower(lo_[i]) ? 1 : 0) + (finite_upper(hi_[i]) ? 1 : 0);

    double mu = opt_.mu_init;
    double nu = 1.0;
    double last_delta_w = 0.0;
    int ls_failures = 0;
    MuStrategy strategy = opt_.mu_strategy;

    auto complementarity = [&](const VectorXd& ww, const VectorXd& l, const VectorXd& u, double target) {
        double worst = 0.0;
        for (int i = 0; i < nw_; ++i) {
            if (finite_lower(lo_[i])) worst = std::max(worst, std::abs((ww[i] - lo_[i]) * l[i] - target));
            if (finite_upper(hi_[i])) worst = std::max(worst, std::abs((hi_[i] - ww[i]) * u[i] - target));
        }
        return worst;
    };
    auto average_complementarity = [&](const VectorXd& ww, const VectorXd& l, const VectorXd& u) {
        if (n_bounds == 0) return 0.0;
        double s = 0.0;
        for (int i = 0; i < nw_; ++i) {
            if (finite_lower(lo_[i])) s += (ww[i] - lo_[i]) * l[i];
            if (finite_upper(hi_[i])) s += (hi_[i] - ww[i]) * u[i];
        }
        return s / n_bounds;
    };

    sol.status = SolverStatus::MaxIter;
    double alpha_pr = 0.0;
    double alpha_du = 0.0;
    int iter = 0;
    for (;; ++iter) {
        try {
            evaluate_derivatives(w, lambda);
        } catch (const DomainError& e) {
            sol.status = SolverStatus::NumericalFailure;
            sol.message = std::string("derivative evaluation failed: ") + e.what();
            break;
        }

        const VectorXd dual = grad_ + jt_lambda_ - zl + zu;
        const double inf_du = dual.lpNorm<Eigen::Infinity>();
        const double inf_pr = m_ > 0 ? c_.lpNorm<Eigen::Infinity>() : 0.0;
        const double s_max = 100.0;
        const double zsum = zl.lpNorm<1>() + zu.lpNorm<1>();
        const double s_d = std::max(s_max, (lambda.lpNorm<1>() + zsum) / std::max(1, m_ + n_bounds)) / s_max;
        const double s_c = std::max(s_max, zsum / std::max(1, n_bounds)) / s_max;
        const double err0 = std::max({inf_du / s_d, inf_pr, complementarity(w, zl, zu, 0.0) / s_c});
        sol.kkt_error = err0;

        sol.log.push_back({iter, f_ / obj_scale_, inf_pr, inf_du / obj_scale_, mu, alpha_pr, alpha_du});

        if (err0 <= opt_.tol) {
            sol.status = SolverStatus::Optimal;
            break;
        }
        if (iter >= opt_.max_iter) {
            sol.status = SolverStatus::MaxIter;
            sol.message = "iteration limit reached";
            break;
        }

        if (strategy == MuStrategy::Monotone) {
            for (int rep = 0; rep < 10; ++rep) {
                const double err_mu = std::max({inf_du / s_d, inf_pr, complementarity(w, zl, zu, mu) / s_c});
                if (err_mu > 10.0 * mu) break;
                mu = std::max(opt_.tol / 10.0, std::min(0.2 * mu, std::pow(mu, 1.5)));
            }
        }

        // Factorize with inertia correction.
        VectorXd sigma = VectorXd::Zero(nw_);
        for (int i = 0; i < nw_; ++i) {
            if (finite_lower(lo_[i])) sigma[i] += zl[i] / (w[i] - lo_[i]);
            if (finite_upper(hi_[i])) sigma[i] += zu[i] / (hi_[i] - w[i]);
        }
        double delta_w = 0.0;
        if (m_ > 0) delta_c_ = 1e-8 * std::pow(std::min(mu, 1.0), 0.25);
        bool ok = factorize(sigma, delta_w);
        while (!ok) {
            delta_w = delta_w == 0.0
                          ? (last_delta_w > 0.0 ? std::max(opt_.regularization_init, last_delta_w / 3.0)
                                                : opt_.regularization_init)
                          : delta_w * opt_.regularization_growth;
            if (delta_w > opt_.regularization_max) break;
            ok = factorize(sigma, delta_w);
        }
        if (!ok) {
            sol.status = SolverStatus::NumericalFailure;
            sol.message = "KKT system singular after regularization";
            break;
        }
        if (delta_w > 0.0) last_delta_w = delta_w;

        if (strategy == MuStrategy::Adaptive) {
            const double mu_avg = average_complementarity(w, zl, zu);
            const Step aff = compute_step(w, zl, zu, 0.0);
            const double ap = fraction_to_boundary(w, aff.dw, 1.0);
            const double ad = std::min(dual_fraction(zl, aff.dzl, 1.0), dual_fraction(zu, aff.dzu, 1.0));
            const double mu_aff = average_complementarity(w + ap * aff.dw, zl + ad * aff.dzl, zu + ad * aff.dzu);
            const double ratio = mu_avg > 0.0 ? mu_aff / mu_avg : 0.0;
            const double sigma_c = std::clamp(ratio * ratio * ratio, 0.0, 1.0);
            // keep the barrier from outrunning primal feasibility
            mu = std::clamp(sigma_c * mu_avg, std::max(kMuMin, std::min(inf_pr, 1.0) * 1e-2 * mu_avg), 1e5);
        }

        Step st = compute_step(w, zl, zu, mu);
        if (!st.dw.allFinite() || !st.dlambda.allFinite()) {
            sol.status = SolverStatus::NumericalFailure;
            sol.message = "non-finite search direction";
            break;
        }

        const double tau = std::max(0.99, 1.0 - mu);
        const double alpha_max = fraction_to_boundary(w, st.dw, tau);
        alpha_du = std::min(dual_fraction(zl, st.dzl, tau), dual_fraction(zu, st.dzu, tau));

        double alpha = alpha_max;
        if (opt_.line_search) {
            // l1 merit: phi_mu + nu * ||c||_1
            VectorXd grad_phi = grad_;
            for (int i = 0; i < nw_; ++i) {
                if (finite_lower(lo_[i])) grad_phi[i] -= mu / (w[i] - lo_[i]);
                if (finite_upper(hi_[i])) grad_phi[i] += mu / (hi_[i] - w[i]);
            }
            const double cnorm = m_ > 0 ? c_.lpNorm<1>() : 0.0;
            const double gd = grad_phi.dot(st.dw);
            if (cnorm > 0.0) {
                // curvature term from the solved system: dw'(W+Sigma)dw = dw'r_w + c'dlambda
                VectorXd r_w = -grad_phi - jt_lambda_;
                const double quad = std::max(0.0, st.dw.dot(r_w) + c_.dot(st.dlambda));
                const double nu_trial = (gd + 0.5 * quad) / (0.9 * cnorm);
                if (nu_trial > nu) nu = nu_trial + 1e-3;
            }
            const double phi0 = f_ + barrier(w, mu) + nu * cnorm;
            const double slope = gd - nu * cnorm;

            bool accepted = false;
            VectorXd ctrial;
            for (int bt = 0; bt < 40; ++bt) {
                const VectorXd wt = w + alpha * st.dw;
                double ft = 0.0;
                if (evaluate_values(wt, ft, ctrial)) {
                    const double phit = ft + barrier(wt, mu) + nu * (m_ > 0 ? ctrial.lpNorm<1>() : 0.0);
                    if (std::isfinite(phit) && (slope >= 0.0 || phit <= phi0 + kArmijo * alpha * slope)) {
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if (!accepted) {
                ++ls_failures;
                if (ls_failures >= 5) {
                    sol.status = inf_pr > std::sqrt(opt_.tol) ? SolverStatus::Infeasible : SolverStatus::NumericalFailure;
                    sol.message = "line search failed repeatedly";
                    break;
                }
                // take a small step to escape
                alpha = std::min(alpha_max, 1e-4);
                double ft = 0.0;
                if (!evaluate_values(w + alpha * st.dw, ft, ctrial)) {
                    sol.status = SolverStatus::NumericalFailure;
                    sol.message = "trial point outside the domain";
                    break;
                }
                if (strategy == MuStrategy::Adaptive) strategy = MuStrategy::Monotone;
            } else {
                ls_failures = 0;
            }
        }
        alpha_pr = alpha;

        w += alpha * st.dw;
        lambda += alpha * st.dlambda;
        zl += alpha_du * st.dzl;
        zu += alpha_du * st.dzu;
        // keep bound multipliers near the central path
        for (int i = 0; i < nw_; ++i) {
            if (finite_lower(lo_[i])) {
                const double t = mu / (w[i] - lo_[i]);
                zl[i] = std::clamp(zl[i], t / kKappaSigma, t * kKappaSigma);
            }
            if (finite_upper(hi_[i])) {
                const double t = mu / (hi_[i] - w[i]);
                zu[i] = std::clamp(zu[i], t / kKappaSigma, t * kKappaSigma);
            }
        }
    }

    sol.iterations = iter;
    sol.x = expand(w);
    sol.lambda.resize(static_cast<std::size_t>(m_));
    for (int k = 0; k < m_; ++k) sol.lambda[static_cast<std::size_t>(k)] = lambda[k] / obj_scale_;
    sol.z_lower.assign(static_cast<std::size_t>(n_), 0.0);
    sol.z_upper.assign(static_cast<std::size_t>(n_), 0.0);
    for (int j = 0; j < nx_; ++j) {
        sol.z_lower[static_cast<std::size_t>(free_[static_cast<std::size_t>(j)])] = zl[j] / obj_scale_;
        sol.z_upper[static_cast<std::size_t>(free_[static_cast<std::size_t>(j)])] = zu[j] / obj_scale_;
    }
    try {
        sol.objective = model_.objective.evaluate(sol.x);
        for (const auto& c : model_.constraints) {
            const double g = c.expr.evaluate(sol.x);
            if (c.sense == Sense::Equal) {
                sol.max_equality_residual = std::max(sol.max_equality_residual, std::abs(g));
            } else {
                sol.max_inequality_violation = std::max(sol.max_inequality_violation, g);
            }
        }
    } catch (const DomainError&) {
        sol.objective = std::numeric_limits<double>::quiet_NaN();
        if (sol.status == SolverStatus::Optimal) sol.status = SolverStatus::NumericalFailure;
    }
    sol.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return sol;
}

}  // namespace

Solution solve(const NlpModel& model, const SolverOptions& options, const std::optional<std::vector<double>>& x0) {
    InteriorPoint ip(model, options);
    return ip.run(x0 ? *x0 : model.initial_point());
}

KktReport verify_kkt(const NlpModel& model, const Solution& solution) {
    const std::size_t n = model.num_variables();
    const auto& x = solution.x;
    KktReport rep;
    std::vector<double> grad_l(n, 0.0);
    std::vector<double> scale(n, 1.0);

    const auto gf = eval_grad(model.objective, x);
    double gf_max = 1.0;
    for (double v : gf.value) gf_max = std::max(gf_max, std::abs(v));
    for (std::size_t a = 0; a < gf.index.size(); ++a) {
        const auto i = static_cast<std::size_t>(gf.index[a]);
        grad_l[i] += gf.value[a];
        scale[i] = std::max(scale[i], std::abs(gf.value[a]));
    }
    for (std::size_t k = 0; k < model.constraints.size(); ++k) {
        const auto& c = model.constraints[k];
        const double lam = solution.lambda[k];
        const double g = c.expr.evaluate(x);
        if (c.sense == Sense::Equal) {
            rep.primal = std::max(rep.primal, std::abs(g));
        } else {
            rep.primal = std::max(rep.primal, g);
            rep.complementarity = std::max(rep.complementarity, std::abs(lam * g));
            rep.dual_sign = std::max(rep.dual_sign, -lam);
        }
        const auto gc = eval_grad(c.expr, x);
        for (std::size_t a = 0; a < gc.index.size(); ++a) {
            const auto i = static_cast<std::size_t>(gc.index[a]);
            grad_l[i] += lam * gc.value[a];
            scale[i] = std::max(scale[i], std::abs(lam * gc.value[a]));
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        const auto& v = model.variables[i];
        if (v.lower == v.upper) continue;  // fixed: its bound multiplier absorbs the residual
        const double zl = solution.z_lower[i];
        const double zu = solution.z_upper[i];
        grad_l[i] += -zl + zu;
        scale[i] = std::max({scale[i], std::abs(zl), std::abs(zu)});
        rep.primal = std::max({rep.primal, v.lower - x[i], x[i] - v.upper});
        if (std::isfinite(v.lower)) rep.complementarity = std::max(rep.complementarity, std::abs(zl * (x[i] - v.lower)));
        if (std::isfinite(v.upper)) rep.complementarity = std::max(rep.complementarity, std::abs(zu * (v.upper - x[i])));
        rep.dual_sign = std::max({rep.dual_sign, -zl, -zu});
        rep.stationarity = std::max(rep.stationarity, std::abs(grad_l[i]));
        rep.stationarity_rel = std::max(rep.stationarity_rel, std::abs(grad_l[i]) / scale[i]);
    }
    rep.complementarity_rel = rep.complementarity / gf_max;
    return rep;
}

void write_iteration_csv(std::ostream& out, const std::vector<IterationRecord>& log) {
    out << "iter,objective,inf_pr,inf_du,mu,alpha_pr,alpha_du\n";
    out.precision(10);
    for (const auto& r : log) {
        out << r.iter << ',' << r.objective << ',' << r.inf_pr << ',' << r.inf_du << ',' << r.mu << ',' << r.alpha_pr
            << ',' << r.alpha_du << '\n';
    }
}

}  // namespace convexopf
