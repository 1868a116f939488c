// convexopf command-line harness.

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "convexopf/case_io.hpp"
#include "convexopf/report.hpp"
#include "convexopf/signomial.hpp"

using namespace convexopf;

namespace {

// Comma-separated exponents; "a/b" fractions allowed.
std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> grid;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            const auto slash = item.find('/');
            double v = 0.0;
            if (slash == std::string::npos) {
                v = std::stod(item, &used);
                if (used != item.size()) throw std::invalid_argument(item);
            } else {
                const std::string num = item.substr(0, slash);
                const std::string den = item.substr(slash + 1);
                const double n = std::stod(num, &used);
                if (used != num.size()) throw std::invalid_argument(item);
                const double d = std::stod(den, &used);
                if (used != den.size() || d == 0.0) throw std::invalid_argument(item);
                v = n / d;
            }
            if (v == 0.0) throw std::invalid_argument(item);
            grid.push_back(v);
        } catch (const std::exception&) {
            throw InputError("bad exponent '" + item + "' in --exponent-grid");
        }
    }
    if (grid.empty()) throw InputError("--exponent-grid is empty");
    return grid;
}

std::string render(const std::vector<RunReport>& reports, const std::string& format) {
    if (format == "csv") return format_csv(reports);
    if (format == "json") return format_json(reports);
    return format_table(reports);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Convexified AC optimal power flow toolkit"};
    app.require_subcommand(1);

    std::string mode = "both";
    double max_angle = 0.6;
    std::string grid;
    double tol_kkt = 1e-6;
    std::string format = "table";
    std::string trace;
    bool relaxed = false;
    bool no_pf = false;
    int max_iter = SolverOptions{}.max_iter;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--max-angle-diff", max_angle, "Bound on angle differences, rad")->check(CLI::PositiveNumber);
        sub->add_option("--exponent-grid", grid, "Candidate exponents, comma separated (e.g. -3,-1/3,1/3,3)");
        sub->add_option("--tol-kkt", tol_kkt, "Solver and KKT re-check tolerance")->check(CLI::PositiveNumber);
        sub->add_option("--format", format, "Output format")->check(CLI::IsMember({"table", "csv", "json"}));
        sub->add_option("--trace", trace, "Directory for pipeline dumps");
        sub->add_option("--max-iter", max_iter, "Interior-point iteration limit")->check(CLI::PositiveNumber);
        sub->add_flag("--relaxed-inverse", relaxed, "Keep only the convex side of each inverse relation");
        sub->add_flag("--no-power-flow", no_pf, "Skip Newton-Raphson validation");
    };

    std::string case_path;
    auto* run = app.add_subcommand("run", "Solve one case");
    run->add_option("case", case_path, "MATPOWER .m or JSON case file")->required();
    run->add_option("--mode", mode, "Pipelines to run")->check(CLI::IsMember({"nonconvex", "convex", "both"}));
    add_common(run);

    std::string manifest_path;
    auto* suite = app.add_subcommand("suite", "Run a manifest of cases in parallel");
    suite->add_option("manifest", manifest_path, "Manifest JSON")->required();
    add_common(suite);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ExitCode::InputError);
    }

    RunOptions opts;
    try {
        opts.mode = parse_run_mode(mode);
        opts.convexify.max_angle_diff = max_angle;
        if (!grid.empty()) opts.convexify.exponent_grid = parse_grid(grid);
        if (relaxed) opts.convexify.inverse_mode = InverseMode::Relaxed;
        opts.tol_kkt = tol_kkt;
        opts.solver.max_iter = max_iter;
        opts.validate_power_flow = !no_pf;
        if (!trace.empty()) opts.trace_dir = trace;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::InputError);
    }

    if (run->parsed()) {
        RunReport report;
        try {
            report = run_case(case_path, opts);
        } catch (const CaseError& e) {
            std::cerr << case_path << ": " << e.what() << "\n";
            return static_cast<int>(ExitCode::InputError);
        } catch (const InputError& e) {
            std::cerr << "error: " << e.what() << "\n";
            return static_cast<int>(ExitCode::InputError);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return static_cast<int>(ExitCode::SolverFailure);
        }
        std::cout << render({report}, format);
        const ExitCode code = report.exit_code();
        if (code == ExitCode::SolverFailure) std::cerr << "solver did not reach an optimal point\n";
        if (code == ExitCode::ToleranceFailure) std::cerr << "KKT re-check or power-flow validation failed\n";
        return static_cast<int>(code);
    }

    Manifest manifest;
    try {
        manifest = load_manifest(manifest_path);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(ExitCode::InputError);
    }
    const SuiteResult result = run_suite(manifest, opts);
    for (const auto& c : result.cases) {
        if (!c.error.empty()) std::cerr << c.error << "\n";
    }
    std::cout << render(result.reports(), format);
    const std::string summary = result.summary_table();
    if (format == "table") std::cout << "\n" << summary;
    else std::cerr << summary;
    return static_cast<int>(result.exit_code());
}
