#include <map>
#include <string>
#include <utility>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "convexopf/case_io.hpp"
#include "convexopf/report.hpp"
#include "convexopf/signomial.hpp"

namespace py = pybind11;
using namespace convexopf;

namespace {

RunOptions make_options(const std::string& mode, double max_angle_diff, double tol_kkt,
                        const std::optional<std::vector<double>>& grid, bool relaxed_inverse) {
    RunOptions o;
    o.mode = parse_run_mode(mode);
    o.convexify.max_angle_diff = max_angle_diff;
    if (grid) o.convexify.exponent_grid = *grid;
    if (relaxed_inverse) o.convexify.inverse_mode = InverseMode::Relaxed;
    o.tol_kkt = tol_kkt;
    return o;
}

SignomialTerm make_term(double coefficient, const std::map<int, double>& powers) { return {coefficient, powers}; }

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Convexified AC optimal power flow";

    py::register_exception<CaseError>(m, "CaseError", PyExc_ValueError);
    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<NoPlanFound>(m, "NoPlanFound", PyExc_RuntimeError);

    m.def(
        "run_case_json",
        [](const std::string& path, const std::string& mode, double max_angle_diff, double tol_kkt,
           const std::optional<std::vector<double>>& grid, bool relaxed_inverse, bool include_timing) {
            const RunOptions o = make_options(mode, max_angle_diff, tol_kkt, grid, relaxed_inverse);
            RunReport r;
            {
                py::gil_scoped_release release;
                r = run_case(path, o);
            }
            return std::make_pair(format_json({r}, include_timing), static_cast<int>(r.exit_code()));
        },
        py::arg("path"), py::arg("mode") = "both", py::arg("max_angle_diff") = 0.6, py::arg("tol_kkt") = 1e-6,
        py::arg("exponent_grid") = py::none(), py::arg("relaxed_inverse") = false, py::arg("include_timing") = true,
        "Runs one case; returns (report JSON, exit code).");

    m.def(
        "run_suite_json",
        [](const std::string& manifest_path) {
            const Manifest manifest = load_manifest(manifest_path);
            SuiteResult r;
            {
                py::gil_scoped_release release;
                r = run_suite(manifest);
            }
            std::vector<std::string> diffs;
            for (const auto& c : r.cases) {
                diffs.insert(diffs.end(), c.diffs.begin(), c.diffs.end());
                if (!c.error.empty()) diffs.push_back(c.error);
            }
            return py::make_tuple(format_json(r.reports()), static_cast<int>(r.exit_code()), diffs);
        },
        py::arg("manifest_path"), "Runs a manifest; returns (reports JSON, exit code, diff and error lines).");

    m.def(
        "case_summary",
        [](const std::string& path) {
            const CaseData c = load_case(path);
            py::dict d;
            d["name"] = c.name;
            d["base_mva"] = c.base_mva;
            d["buses"] = c.buses.size();
            d["branches"] = c.branches.size();
            d["generators"] = c.generators.size();
            d["load_mw"] = c.total_load_mw();
            return d;
        },
        py::arg("path"));

    m.def(
        "classify_term",
        [](double coefficient, const std::map<int, double>& powers) {
            return to_string(classify_term(make_term(coefficient, powers)));
        },
        py::arg("coefficient"), py::arg("powers"));

    m.def(
        "plan_exponents",
        [](const std::vector<std::pair<double, std::map<int, double>>>& terms,
           const std::optional<std::vector<double>>& grid) {
            std::vector<SignomialTerm> ts;
            for (const auto& [c, p] : terms) ts.push_back(make_term(c, p));
            PlanOptions o;
            if (grid) o.grid = *grid;
            const TransformationPlan plan = plan_transformations(ts, o);
            std::map<std::pair<int, int>, double> out;
            for (const auto& [k, p] : plan.exponents) out[{k.variable, k.sign}] = p;
            return out;
        },
        py::arg("terms"), py::arg("grid") = py::none(),
        "Exponent per (variable, term sign) for the transformed keys.");

    m.def("default_exponent_grid", &default_exponent_grid);
}
