#pragma once

#include <complex>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Sparse>

#include "convexopf/case_io.hpp"

namespace convexopf {

using Complex = std::complex<double>;

/// Terminal admittance blocks of one branch in the Pi model:
///   I_from = yff * V_from + yft * V_to
///   I_to   = ytf * V_from + ytt * V_to
struct BranchAdmittance {
    std::size_t branch = 0;  // index into NetworkData::branches
    std::size_t from = 0;
    std::size_t to = 0;
    Complex yff;
    Complex yft;
    Complex ytf;
    Complex ytt;
    double s_max = 0.0;  // p.u., 0 = unlimited
};

/// Bus admittance matrix Y = G + jB. G and B share one sparsity pattern.
struct AdmittanceMatrix {
    std::size_t dimension = 0;
    Eigen::SparseMatrix<double> G;
    Eigen::SparseMatrix<double> B;
    std::vector<BranchAdmittance> branches;  // in-service branches only
    std::vector<Complex> shunts;              // per-bus shunt admittance, p.u.

    Complex entry(std::size_t row, std::size_t col) const {
        return {G.coeff(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)),
                B.coeff(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col))};
    }
};

/// Standard Pi-model assembly. Throws CaseError for zero-impedance branches
/// and for nonzero phase shifters, which are not supported.
AdmittanceMatrix build_admittance(const NetworkData& net);

/// Squared apparent power at the from and to terminals, p.u.^2.
std::pair<double, double> apparent_flow_sq(const BranchAdmittance& branch, std::span<const double> v,
                                           std::span<const double> theta);

/// Complex power flowing into the branch at each terminal.
std::pair<Complex, Complex> branch_flows(const BranchAdmittance& branch, std::span<const double> v,
                                         std::span<const double> theta);

/// Net complex power injected at each bus, S = V .* conj(Y V).
std::vector<Complex> bus_injections(const AdmittanceMatrix& y, std::span<const double> v,
                                    std::span<const double> theta);

}  // namespace convexopf
