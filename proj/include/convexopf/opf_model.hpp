#pragma once

#include <vector>

#include "convexopf/network.hpp"
#include "convexopf/nlp_model.hpp"

namespace convexopf {

/// Variable indices of the OPF quantities inside an NlpModel.
struct OpfLayout {
    std::vector<int> pg;     // per generator (in-service only hold meaningful values)
    std::vector<int> qg;
    std::vector<int> vm;     // per bus
    std::vector<int> va;
};

struct OpfModel {
    NetworkData net;
    AdmittanceMatrix y;
    NlpModel nlp;
    OpfLayout layout;
};

/// Polar AC-OPF: quadratic generation cost, exact P/Q balance per bus,
/// generator and voltage bounds, squared apparent-power limits per limited
/// branch end, slack angle fixed at zero. Powers are per-unit; the objective
/// is in $/h. Throws ModelError for inverted bounds or isolated buses.
OpfModel build_opf(const NetworkData& net, const AdmittanceMatrix& y);

/// Expression for the net active (reactive) power leaving bus k through the
/// network, V_k sum_m V_m (G cos + B sin), over the model's V/theta variables.
Expression injection_p(const AdmittanceMatrix& y, const OpfLayout& layout, std::size_t k);
Expression injection_q(const AdmittanceMatrix& y, const OpfLayout& layout, std::size_t k);

/// Squared apparent flow at the from (to) end of a branch.
Expression flow_from_sq(const BranchAdmittance& br, const OpfLayout& layout);
Expression flow_to_sq(const BranchAdmittance& br, const OpfLayout& layout);

/// Objective value in $/h for a dispatch given in per-unit.
double generation_cost(const NetworkData& net, std::span<const double> pg_pu);

}  // namespace convexopf
