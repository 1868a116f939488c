#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace convexopf {

enum class BusType { Slack, PV, PQ };

std::string_view to_string(BusType type);

/// Error raised for malformed or inconsistent case data. `line()` is 0 when
/// the problem is not tied to a particular input line.
class CaseError : public std::runtime_error {
  public:
    explicit CaseError(const std::string& what, std::size_t line = 0);
    std::size_t line() const noexcept { return line_; }

  private:
    std::size_t line_;
};

struct BusRecord {
    int id = 0;
    BusType type = BusType::PQ;
    double pd = 0.0;  // MW
    double qd = 0.0;  // MVAr
    double gs = 0.0;  // MW consumed at V = 1 p.u.
    double bs = 0.0;  // MVAr injected at V = 1 p.u.
    double vmin = 0.9;
    double vmax = 1.1;
    double base_kv = 0.0;

    bool operator==(const BusRecord&) const = default;
};

struct BranchRecord {
    int from_bus = 0;
    int to_bus = 0;
    double r = 0.0;  // p.u.
    double x = 0.0;  // p.u.
    double b = 0.0;  // total line charging, p.u.
    double s_max = 0.0;  // MVA, 0 = unlimited
    double tap = 1.0;    // off-nominal ratio, 0 in the file means 1
    double shift_deg = 0.0;
    bool in_service = true;

    bool operator==(const BranchRecord&) const = default;
};

struct GenRecord {
    int bus = 0;
    double pg = 0.0;  // MW
    double qg = 0.0;  // MVAr
    double pmin = 0.0;
    double pmax = 0.0;
    double qmin = 0.0;
    double qmax = 0.0;
    double vg = 1.0;  // voltage setpoint, p.u.
    bool in_service = true;

    bool operator==(const GenRecord&) const = default;
};

/// Polynomial cost c2*P^2 + c1*P + c0 with P in MW, result in $/h.
struct CostRecord {
    std::size_t generator = 0;
    double c2 = 0.0;
    double c1 = 0.0;
    double c0 = 0.0;

    bool operator==(const CostRecord&) const = default;
};

struct CaseData {
    std::string name;
    double base_mva = 100.0;
    std::vector<BusRecord> buses;
    std::vector<BranchRecord> branches;
    std::vector<GenRecord> generators;
    std::vector<CostRecord> costs;

    bool operator==(const CaseData&) const = default;

    double total_load_mw() const;
};

/// Throws CaseError if any structural invariant is violated.
void validate(const CaseData& data);

/// Parses the MATPOWER text subset: mpc.baseMVA, mpc.bus, mpc.gen, mpc.branch and
/// mpc.gencost matrices, `%` comments, `;` row terminators. Other assignments
/// are skipped. Ignored columns (area, zone, Vm, Va, ...) are noted in
/// `warnings` when it is non-null.
CaseData parse_matpower(std::string_view text, std::vector<std::string>* warnings = nullptr);
std::string serialize_matpower(const CaseData& data);

/// Canonical JSON interchange format; field names mirror CaseData.
CaseData parse_case_json(std::string_view text);
std::string serialize_case_json(const CaseData& data);

/// Loads a case file, picking the format from the extension (.m or .json).
CaseData load_case(const std::string& path, std::vector<std::string>* warnings = nullptr);

// ---------------------------------------------------------------------------
// Per-unit network view

struct NetworkBus {
    int id = 0;
    BusType type = BusType::PQ;
    double pd = 0.0;
    double qd = 0.0;
    double gs = 0.0;
    double bs = 0.0;
    double vmin = 0.9;
    double vmax = 1.1;
    double base_kv = 0.0;
};

struct NetworkBranch {
    std::size_t from = 0;
    std::size_t to = 0;
    double r = 0.0;
    double x = 0.0;
    double b = 0.0;
    double s_max = 0.0;  // p.u.
    double tap = 1.0;
    double shift_rad = 0.0;
    bool in_service = true;
};

struct NetworkGenerator {
    std::size_t bus = 0;
    double pg = 0.0;
    double qg = 0.0;
    double pmin = 0.0;
    double pmax = 0.0;
    double qmin = 0.0;
    double qmax = 0.0;
    double vg = 1.0;
    bool in_service = true;
    // cost coefficients in the case file's $/MW units
    double c2 = 0.0;
    double c1 = 0.0;
    double c0 = 0.0;
};

struct NetworkData {
    std::string name;
    double base_mva = 100.0;
    std::vector<NetworkBus> buses;
    std::vector<NetworkBranch> branches;
    std::vector<NetworkGenerator> generators;
    std::map<int, std::size_t> index_of;  // external bus id -> dense index
    std::size_t slack = 0;

    std::size_t num_buses() const { return buses.size(); }
    double total_load_pu() const;
};

NetworkData to_network(const CaseData& data);
CaseData from_network(const NetworkData& net);

}  // namespace convexopf
