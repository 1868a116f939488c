#include "convexopf/opf_model.hpp"

#include <cmath>
#include <numbers>

namespace convexopf {

namespace {

// Visits off-diagonal entries (m, G_km, B_km) of row k.
template <typename Fn>
void for_each_neighbor(const AdmittanceMatrix& y, std::size_t k, Fn&& fn) {
    // G and B are symmetric in pattern, so column k lists row k's neighbours.
    const auto col = static_cast<Eigen::Index>(k);
    Eigen::SparseMatrix<double>::InnerIterator git(y.G, col);
    Eigen::SparseMatrix<double>::InnerIterator bit(y.B, col);
    for (; git; ++git, ++bit) {
        const auto m = static_cast<std::size_t>(git.row());
        if (m == k) continue;
        fn(m, y.G.coeff(col, git.row()), y.B.coeff(col, git.row()));
    }
}

Expression vv(const OpfLayout& l, std::size_t a, std::size_t b) {
    return Expression::monomial(1.0, {{l.vm[a], 1.0}, {l.vm[b], 1.0}});
}

Expression angle_diff(const OpfLayout& l, std::size_t a, std::size_t b) {
    return Expression::variable(l.va[a]) - Expression::variable(l.va[b]);
}

Expression flow_sq(const OpfLayout& l, std::size_t near, std::size_t far, Complex y_near, Complex y_far,
                   bool near_is_from) {
    // |S|^2 = V_n^2 |y_n V_n + y_f V_f|^2
    //       = V_n^2 (|y_n|^2 V_n^2 + |y_f|^2 V_f^2 + 2 V_n V_f Re(y_n conj(y_f) e^{j(th_n - th_f)}))
    const Complex a = y_near * std::conj(y_far);
    const Expression phi = near_is_from ? angle_diff(l, near, far) : -angle_diff(l, far, near);
    const Expression vn2 = Expression::monomial(1.0, {{l.vm[near], 2.0}});
    const Expression current_sq =
        Expression::sum({Expression::monomial(1.0, {{l.vm[near], 2.0}}), Expression::monomial(1.0, {{l.vm[far], 2.0}}),
                         vv(l, near, far) * cos(phi), vv(l, near, far) * sin(phi)},
                        {std::norm(y_near), std::norm(y_far), 2.0 * a.real(), -2.0 * a.imag()});
    return vn2 * current_sq;
}

}  // namespace

Expression injection_p(const AdmittanceMatrix& y, const OpfLayout& l, std::size_t k) {
    std::vector<Expression> terms{Expression::monomial(1.0, {{l.vm[k], 2.0}})};
    std::vector<double> weights{y.G.coeff(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k))};
    for_each_neighbor(y, k, [&](std::size_t m, double g, double b) {
        const Expression d = angle_diff(l, k, m);
        if (g != 0.0) {
            terms.push_back(vv(l, k, m) * cos(d));
            weights.push_back(g);
        }
        if (b != 0.0) {
            terms.push_back(vv(l, k, m) * sin(d));
            weights.push_back(b);
        }
    });
    return Expression::sum(std::move(terms), std::move(weights));
}

Expression injection_q(const AdmittanceMatrix& y, const OpfLayout& l, std::size_t k) {
    std::vector<Expression> terms{Expression::monomial(1.0, {{l.vm[k], 2.0}})};
    std::vector<double> weights{-y.B.coeff(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k))};
    for_each_neighbor(y, k, [&](std::size_t m, double g, double b) {
        const Expression d = angle_diff(l, k, m);
        if (g != 0.0) {
            terms.push_back(vv(l, k, m) * sin(d));
            weights.push_back(g);
        }
        if (b != 0.0) {
            terms.push_back(vv(l, k, m) * cos(d));
            weights.push_back(-b);
        }
    });
    return Expression::sum(std::move(terms), std::move(weights));
}

Expression flow_from_sq(const BranchAdmittance& br, const OpfLayout& l) {
    return flow_sq(l, br.from, br.to, br.yff, br.yft, true);
}

Expression flow_to_sq(const BranchAdmittance& br, const OpfLayout& l) {
    return flow_sq(l, br.to, br.from, br.ytt, br.ytf, false);
}

double generation_cost(const NetworkData& net, std::span<const double> pg_pu) {
    double cost = 0.0;
    for (std::size_t i = 0; i < net.generators.size(); ++i) {
        const auto& g = net.generators[i];
        if (!g.in_service) continue;
        const double p = pg_pu[i] * net.base_mva;
        cost += g.c2 * p * p + g.c1 * p + g.c0;
    }
    return cost;
}

OpfModel build_opf(const NetworkData& net, const AdmittanceMatrix& y) {
    OpfModel out;
    out.net = net;
    out.y = y;
    auto& nlp = out.nlp;
    auto& l = out.layout;
    const std::size_t nb = net.num_buses();
    const double base = net.base_mva;

    std::vector<int> degree(nb, 0);
    for (const auto& br : y.branches) {
        ++degree[br.from];
        ++degree[br.to];
    }
    for (std::size_t k = 0; k < nb; ++k) {
        if (degree[k] == 0 && nb > 1) throw ModelError("bus " + std::to_string(net.buses[k].id) + " is isolated");
    }

    for (std::size_t i = 0; i < net.generators.size(); ++i) {
        const auto& g = net.generators[i];
        const bool on = g.in_service;
        if (on && (g.pmin > g.pmax || g.qmin > g.qmax)) {
            throw ModelError("generator " + std::to_string(i + 1) + " has inverted limits");
        }
        const double plo = on ? g.pmin : 0.0;
        const double phi = on ? g.pmax : 0.0;
        const double qlo = on ? g.qmin : 0.0;
        const double qhi = on ? g.qmax : 0.0;
        l.pg.push_back(nlp.add_variable({"Pg" + std::to_string(i + 1), plo, phi, 0.5 * (plo + phi),
                                         VariableRole::ActivePower, static_cast<int>(i)}));
        l.qg.push_back(nlp.add_variable({"Qg" + std::to_string(i + 1), qlo, qhi, 0.5 * (qlo + qhi),
                                         VariableRole::ReactivePower, static_cast<int>(i)}));
    }
    for (std::size_t k = 0; k < nb; ++k) {
        const auto& b = net.buses[k];
        if (b.vmin > b.vmax || b.vmin <= 0.0) throw ModelError("bus " + std::to_string(b.id) + " has invalid voltage limits");
        l.vm.push_back(nlp.add_variable({"V" + std::to_string(b.id), b.vmin, b.vmax, std::clamp(1.0, b.vmin, b.vmax),
                                         VariableRole::VoltageMagnitude, static_cast<int>(k)}));
    }
    for (std::size_t k = 0; k < nb; ++k) {
        const bool slack = k == net.slack;
        const double lim = slack ? 0.0 : std::numbers::pi;
        l.va.push_back(nlp.add_variable({"theta" + std::to_string(net.buses[k].id), slack ? 0.0 : -lim, lim, 0.0,
                                         VariableRole::VoltageAngle, static_cast<int>(k)}));
    }

    std::vector<Expression> cost_terms;
    std::vector<double> cost_weights;
    double cost_const = 0.0;
    for (std::size_t i = 0; i < net.generators.size(); ++i) {
        const auto& g = net.generators[i];
        if (!g.in_service) continue;
        if (g.c2 != 0.0) {
            cost_terms.push_back(Expression::monomial(1.0, {{l.pg[i], 2.0}}));
            cost_weights.push_back(g.c2 * base * base);
        }
        if (g.c1 != 0.0) {
            cost_terms.push_back(Expression::variable(l.pg[i]));
            cost_weights.push_back(g.c1 * base);
        }
        cost_const += g.c0;
    }
    nlp.objective = Expression::sum(std::move(cost_terms), std::move(cost_weights), cost_const);

    std::vector<std::vector<std::size_t>> gens_at(nb);
    for (std::size_t i = 0; i < net.generators.size(); ++i) {
        if (net.generators[i].in_service) gens_at[net.generators[i].bus].push_back(i);
    }
    for (std::size_t k = 0; k < nb; ++k) {
        const auto& bus = net.buses[k];
        std::vector<Expression> pt;
        std::vector<Expression> qt;
        std::vector<double> w;
        for (std::size_t i : gens_at[k]) {
            pt.push_back(Expression::variable(l.pg[i]));
            qt.push_back(Expression::variable(l.qg[i]));
            w.push_back(1.0);
        }
        pt.push_back(injection_p(y, l, k));
        qt.push_back(injection_q(y, l, k));
        w.push_back(-1.0);
        const std::string id = std::to_string(bus.id);
        nlp.add_constraint(Expression::sum(std::move(pt), w, -bus.pd), Sense::Equal, "P-balance@" + id);
        nlp.add_constraint(Expression::sum(std::move(qt), w, -bus.qd), Sense::Equal, "Q-balance@" + id);
    }

    for (const auto& br : y.branches) {
        if (br.s_max <= 0.0) continue;
        const double smax2 = br.s_max * br.s_max;
        const std::string id = std::to_string(br.branch + 1);
        nlp.add_constraint(flow_from_sq(br, l) - smax2, Sense::LessEqual, "flow-from@" + id);
        nlp.add_constraint(flow_to_sq(br, l) - smax2, Sense::LessEqual, "flow-to@" + id);
    }
    nlp.validate();
    return out;
}

}  // namespace convexopf
