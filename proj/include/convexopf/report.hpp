#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "convexopf/convexify.hpp"
#include "convexopf/ipm.hpp"

namespace convexopf {

enum class RunMode { Nonconvex, Convex, Both };

RunMode parse_run_mode(const std::string& text);  // throws InputError
std::string to_string(RunMode mode);

enum class ExitCode { Success = 0, ToleranceFailure = 1, InputError = 2, SolverFailure = 3 };

/// Bad command-line values, unreadable files, malformed manifests.
class InputError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct RunOptions {
    RunMode mode = RunMode::Both;
    ConvexifyOptions convexify;
    SolverOptions solver;
    double tol_kkt = 1e-6;  // solver tolerance and independent KKT re-check
    bool validate_power_flow = true;
    std::optional<std::string> trace_dir;  // pipeline dumps when set
};

struct ModeRecord {
    std::string mode;    // "nonconvex" or "convex"
    std::string status;  // solver status
    std::string message;
    double objective = 0.0;      // $/h, original cost at the recovered point
    double total_pg_mw = 0.0;
    double total_qg_mvar = 0.0;
    double load_mw = 0.0;
    double cpu_s = 0.0;
    int iterations = 0;
    double kkt_error = 0.0;
    bool kkt_verified = false;   // independent re-check within tol_kkt
    double max_violation = 0.0;  // worst constraint/bound violation in the exact model
};

struct TaylorGap {
    double max_p_residual = 0.0;  // p.u., exact balance at the recovered point
    double max_q_residual = 0.0;
    double max_inverse_gap = 0.0;
    double sin_remainder_bound = 0.0;
    double cos_remainder_bound = 0.0;
};

struct PlanSummary {
    std::size_t transformed_variables = 0;
    std::size_t inverse_constraints = 0;
    std::size_t lifted_variables = 0;
    std::size_t angle_pairs = 0;
    std::size_t variables = 0;  // convex model size
    std::size_t constraints = 0;
    bool proven_optimal = false;
};

struct PowerFlowCheck {
    bool converged = false;
    int iterations = 0;
    double mismatch = 0.0;
    double slack_pg_change_mw = 0.0;
    double repriced_objective = 0.0;  // $/h with the slack generation from power flow
    std::string message;
};

struct RunReport {
    std::string case_name;
    double load_mw = 0.0;
    std::vector<ModeRecord> modes;
    std::optional<TaylorGap> taylor_gap;
    std::optional<PlanSummary> plan;
    std::optional<PowerFlowCheck> power_flow;

    const ModeRecord* find(const std::string& mode) const;
    ExitCode exit_code() const;  // SolverFailure or ToleranceFailure when any record falls short
};

/// Loads the case and runs the requested pipelines. Throws CaseError or
/// InputError for bad input, ModelError or NoPlanFound when the model cannot
/// be built or convexified.
RunReport run_case(const std::string& path, const RunOptions& options = {});

std::string format_table(const std::vector<RunReport>& reports);
std::string format_csv(const std::vector<RunReport>& reports);
std::string format_json(const std::vector<RunReport>& reports, bool include_timing = true);

/// CSV columns, in output order.
const std::vector<std::string>& csv_columns();

struct ExpectedValues {
    std::string mode;
    std::optional<double> objective;
    std::optional<double> total_pg_mw;
};

struct ManifestCase {
    std::string path;  // resolved against the manifest directory
    RunMode mode = RunMode::Both;
    std::vector<ExpectedValues> expected;
    double objective_rel_tol = 5e-3;
    double pg_abs_tol_mw = 1.0;
};

struct Manifest {
    std::vector<ManifestCase> cases;
};

Manifest parse_manifest(const std::string& text, const std::string& base_dir = ".");  // throws InputError
Manifest load_manifest(const std::string& path);

struct SuiteCaseResult {
    std::string path;
    std::optional<RunReport> report;
    ExitCode code = ExitCode::Success;
    std::vector<std::string> diffs;  // one line per out-of-tolerance value
    std::string error;               // diagnostic for input or solver errors
};

struct SuiteResult {
    std::vector<SuiteCaseResult> cases;
    ExitCode exit_code() const;  // the most severe of input, solver, tolerance failures
    std::vector<RunReport> reports() const;
    std::string summary_table() const;
};

/// Runs every manifest case concurrently; `base` supplies the non-mode options.
SuiteResult run_suite(const Manifest& manifest, const RunOptions& base = {});

}  // namespace convexopf
