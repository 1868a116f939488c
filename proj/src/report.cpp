#include "convexopf/report.hpp"

#include <time.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "convexopf/case_io.hpp"
#include "convexopf/network.hpp"
#include "convexopf/opf_model.hpp"
#include "convexopf/power_flow.hpp"

namespace convexopf {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

RunMode parse_run_mode(const std::string& text) {
    if (text == "nonconvex") return RunMode::Nonconvex;
    if (text == "convex") return RunMode::Convex;
    if (text == "both") return RunMode::Both;
    throw InputError("unknown mode '" + text + "' (expected nonconvex, convex or both)");
}

std::string to_string(RunMode mode) {
    switch (mode) {
        case RunMode::Nonconvex: return "nonconvex";
        case RunMode::Convex: return "convex";
        case RunMode::Both: return "both";
    }
    return "?";
}

namespace {

double thread_cpu_seconds() {
    timespec ts{};
    clock_gettime(CLOCK_THREAD_CPUTIME_ID, &ts);
    return static_cast<double>(ts.tv_sec) + 1e-9 * static_cast<double>(ts.tv_nsec);
}

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path.string());
    out << text;
}

struct Totals {
    std::vector<double> pg;  // per generator, p.u.
    double pg_mw = 0.0;
    double qg_mvar = 0.0;
};

Totals totals(const OpfModel& opf, std::span<const double> x) {
    Totals t;
    t.pg.assign(opf.net.generators.size(), 0.0);
    for (std::size_t i = 0; i < opf.net.generators.size(); ++i) {
        if (!opf.net.generators[i].in_service) continue;
        t.pg[i] = x[static_cast<std::size_t>(opf.layout.pg[i])];
        t.pg_mw += t.pg[i] * opf.net.base_mva;
        t.qg_mvar += x[static_cast<std::size_t>(opf.layout.qg[i])] * opf.net.base_mva;
    }
    return t;
}

ModeRecord make_record(const std::string& mode, const OpfModel& opf, const Solution& sol,
                       std::span<const double> x, const NlpModel& solved, double tol_kkt, double cpu) {
    ModeRecord r;
    r.mode = mode;
    r.status = to_string(sol.status);
    r.message = sol.message;
    const Totals t = totals(opf, x);
    r.objective = generation_cost(opf.net, t.pg);
    r.total_pg_mw = t.pg_mw;
    r.total_qg_mvar = t.qg_mvar;
    r.load_mw = opf.net.total_load_pu() * opf.net.base_mva;
    r.cpu_s = cpu;
    r.iterations = sol.iterations;
    r.kkt_error = sol.kkt_error;
    r.kkt_verified = sol.status == SolverStatus::Optimal && verify_kkt(solved, sol).satisfied(tol_kkt);
    r.max_violation = max_violation(opf.nlp, x);
    return r;
}

TaylorGap balance_gap(const OpfModel& opf, std::span<const double> x) {
    TaylorGap g;
    for (const auto& c : opf.nlp.constraints) {
        const double r = std::abs(c.expr.evaluate(x));
        if (c.origin.rfind("P-balance", 0) == 0) g.max_p_residual = std::max(g.max_p_residual, r);
        if (c.origin.rfind("Q-balance", 0) == 0) g.max_q_residual = std::max(g.max_q_residual, r);
    }
    return g;
}

PowerFlowCheck validate_dispatch(const OpfModel& opf, std::span<const double> x) {
    const auto& net = opf.net;
    Dispatch d;
    d.pg = totals(opf, x).pg;
    for (std::size_t k = 0; k < net.num_buses(); ++k) {
        d.vm.push_back(x[static_cast<std::size_t>(opf.layout.vm[k])]);
        d.va.push_back(x[static_cast<std::size_t>(opf.layout.va[k])]);
    }
    const PfSolution pf = newton_raphson_pf(net, opf.y, d);
    PowerFlowCheck c;
    c.converged = pf.converged;
    c.iterations = pf.iterations;
    c.mismatch = pf.mismatch;
    c.message = pf.message;
    double before = 0.0;
    double after = 0.0;
    for (std::size_t i = 0; i < d.pg.size(); ++i) {
        before += d.pg[i];
        after += pf.pg[i];
    }
    c.slack_pg_change_mw = (after - before) * net.base_mva;
    c.repriced_objective = generation_cost(net, pf.pg);
    return c;
}

std::string slug(const std::string& name) {
    std::string s = name.empty() ? "case" : name;
    for (char& ch : s) {
        if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '-' && ch != '_') ch = '_';
    }
    return s;
}

}  // namespace

const ModeRecord* RunReport::find(const std::string& mode) const {
    for (const auto& m : modes) {
        if (m.mode == mode) return &m;
    }
    return nullptr;
}

ExitCode RunReport::exit_code() const {
    for (const auto& m : modes) {
        if (m.status != to_string(SolverStatus::Optimal)) return ExitCode::SolverFailure;
    }
    for (const auto& m : modes) {
        if (!m.kkt_verified) return ExitCode::ToleranceFailure;
    }
    if (power_flow && !power_flow->converged) return ExitCode::ToleranceFailure;
    return ExitCode::Success;
}

RunReport run_case(const std::string& path, const RunOptions& options) {
    if (!fs::exists(path)) throw InputError("case file not found: " + path);
    const double cpu0 = thread_cpu_seconds();
    const CaseData data = load_case(path);
    const NetworkData net = to_network(data);
    const AdmittanceMatrix y = build_admittance(net);
    const OpfModel opf = build_opf(net, y);
    const double setup = thread_cpu_seconds() - cpu0;

    RunReport report;
    report.case_name = net.name.empty() ? fs::path(path).stem().string() : net.name;
    report.load_mw = net.total_load_pu() * net.base_mva;

    SolverOptions sopt = options.solver;
    sopt.tol = options.tol_kkt;

    std::optional<fs::path> trace;
    if (options.trace_dir) {
        trace = fs::path(*options.trace_dir);
        fs::create_directories(*trace);
    }
    const std::string stem = slug(report.case_name);

    if (options.mode != RunMode::Convex) {
        const double t0 = thread_cpu_seconds();
        const Solution sol = solve(opf.nlp, sopt);
        const double cpu = thread_cpu_seconds() - t0 + setup;
        report.modes.push_back(make_record("nonconvex", opf, sol, sol.x, opf.nlp, options.tol_kkt, cpu));
        if (trace) {
            write_file(*trace / (stem + ".nonconvex.model.txt"), opf.nlp.dump());
            std::ostringstream csv;
            write_iteration_csv(csv, sol.log);
            write_file(*trace / (stem + ".nonconvex.iterations.csv"), csv.str());
        }
    }

    if (options.mode != RunMode::Nonconvex) {
        const double t0 = thread_cpu_seconds();
        const ConvexModel cm = convexify(opf.nlp, options.convexify);
        const Solution sol = solve(cm.nlp, sopt);
        const RecoveredPoint rp = recover(sol, cm);
        const double cpu = thread_cpu_seconds() - t0 + setup;
        report.modes.push_back(make_record("convex", opf, sol, rp.x, cm.nlp, options.tol_kkt, cpu));

        TaylorGap gap = balance_gap(opf, rp.x);
        gap.max_inverse_gap = rp.max_inverse_gap;
        gap.sin_remainder_bound = cm.taylor.sin_remainder_bound();
        gap.cos_remainder_bound = cm.taylor.cos_remainder_bound();
        report.taylor_gap = gap;

        PlanSummary plan;
        plan.transformed_variables = cm.transformed_vars.size();
        plan.inverse_constraints = cm.inverses.size();
        plan.lifted_variables = cm.lifts.size();
        plan.angle_pairs = cm.taylor.pairs.size();
        plan.variables = cm.nlp.num_variables();
        plan.constraints = cm.nlp.constraints.size();
        plan.proven_optimal = cm.plan.proven_optimal;
        report.plan = plan;

        if (options.validate_power_flow && sol.status == SolverStatus::Optimal) {
            report.power_flow = validate_dispatch(opf, rp.x);
        }
        if (trace) {
            write_file(*trace / (stem + ".convex.model.txt"), cm.nlp.dump());
            write_file(*trace / (stem + ".plan.txt"), cm.plan.dump(&cm.nlp.variables));
            write_file(*trace / (stem + ".trace.json"), pipeline_trace_json(cm) + "\n");
            std::ostringstream csv;
            write_iteration_csv(csv, sol.log);
            write_file(*trace / (stem + ".convex.iterations.csv"), csv.str());
        }
    }
    return report;
}

std::string format_table(const std::vector<RunReport>& reports) {
    std::ostringstream out;
    out << std::left << std::setw(12) << "case" << std::setw(11) << "mode" << std::right << std::setw(14)
        << "objective" << std::setw(11) << "Pg MW" << std::setw(11) << "Qg MVAr" << std::setw(11) << "load MW"
        << std::setw(9) << "CPU s" << "  status\n";
    for (const auto& r : reports) {
        for (const auto& m : r.modes) {
            out << std::left << std::setw(12) << r.case_name << std::setw(11) << m.mode << std::right << std::setw(14)
                << fmt("%.2f", m.objective) << std::setw(11) << fmt("%.2f", m.total_pg_mw) << std::setw(11)
                << fmt("%.2f", m.total_qg_mvar) << std::setw(11) << fmt("%.2f", m.load_mw) << std::setw(9)
                << fmt("%.3f", m.cpu_s) << "  " << m.status << "\n";
        }
        if (r.taylor_gap) {
            out << "  taylor gap: max |P| " << fmt("%.3e", r.taylor_gap->max_p_residual) << " p.u., max |Q| "
                << fmt("%.3e", r.taylor_gap->max_q_residual) << " p.u.\n";
        }
        if (r.plan) {
            out << "  plan: " << r.plan->transformed_variables << " transformed variables, "
                << r.plan->inverse_constraints << " inverse constraints, " << r.plan->lifted_variables
                << " lifted variables\n";
        }
        if (r.power_flow) {
            out << "  power flow: " << (r.power_flow->converged ? "converged" : "not converged") << " in "
                << r.power_flow->iterations << " iterations, repriced objective "
                << fmt("%.2f", r.power_flow->repriced_objective) << "\n";
        }
    }
    return out.str();
}

const std::vector<std::string>& csv_columns() {
    static const std::vector<std::string> cols = {
        "case",          "mode",           "status",        "objective",      "total_pg_mw",
        "total_qg_mvar", "load_mw",        "cpu_s",         "iterations",     "kkt_verified",
        "max_violation", "taylor_gap_p",   "taylor_gap_q",  "transformed_vars", "inverse_constraints",
        "pf_converged",  "pf_repriced_objective",
    };
    return cols;
}

std::string format_csv(const std::vector<RunReport>& reports) {
    std::ostringstream out;
    const auto& cols = csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << "\n";
    for (const auto& r : reports) {
        for (const auto& m : r.modes) {
            const bool convex = m.mode == "convex";
            out << r.case_name << "," << m.mode << "," << m.status << "," << fmt("%.6f", m.objective) << ","
                << fmt("%.6f", m.total_pg_mw) << "," << fmt("%.6f", m.total_qg_mvar) << ","
                << fmt("%.6f", m.load_mw) << "," << fmt("%.6f", m.cpu_s) << "," << m.iterations << ","
                << (m.kkt_verified ? "true" : "false") << "," << fmt("%.6e", m.max_violation) << ",";
            if (convex && r.taylor_gap) {
                out << fmt("%.6e", r.taylor_gap->max_p_residual) << "," << fmt("%.6e", r.taylor_gap->max_q_residual);
            } else {
                out << ",";
            }
            out << ",";
            if (convex && r.plan) out << r.plan->transformed_variables << "," << r.plan->inverse_constraints;
            else out << ",";
            out << ",";
            if (convex && r.power_flow) {
                out << (r.power_flow->converged ? "true" : "false") << ","
                    << fmt("%.6f", r.power_flow->repriced_objective);
            } else {
                out << ",";
            }
            out << "\n";
        }
    }
    return out.str();
}

namespace {

// Round to 10 significant digits so the JSON is stable across platforms.
double stable(double v) {
    if (v == 0.0 || !std::isfinite(v)) return v;
    return std::stod(fmt("%.10g", v));
}

ordered_json report_json(const RunReport& r, bool include_timing) {
    ordered_json j;
    j["case"] = r.case_name;
    j["load_mw"] = stable(r.load_mw);
    ordered_json modes = ordered_json::array();
    for (const auto& m : r.modes) {
        ordered_json mj;
        mj["mode"] = m.mode;
        mj["status"] = m.status;
        mj["message"] = m.message;
        mj["objective"] = stable(m.objective);
        mj["total_pg_mw"] = stable(m.total_pg_mw);
        mj["total_qg_mvar"] = stable(m.total_qg_mvar);
        mj["load_mw"] = stable(m.load_mw);
        if (include_timing) mj["cpu_s"] = m.cpu_s;
        mj["iterations"] = m.iterations;
        mj["kkt_error"] = stable(m.kkt_error);
        mj["kkt_verified"] = m.kkt_verified;
        mj["max_violation"] = stable(m.max_violation);
        modes.push_back(mj);
    }
    j["modes"] = modes;
    if (r.taylor_gap) {
        const auto& g = *r.taylor_gap;
        j["taylor_gap"] = {{"max_p_residual", stable(g.max_p_residual)},
                           {"max_q_residual", stable(g.max_q_residual)},
                           {"max_inverse_gap", stable(g.max_inverse_gap)},
                           {"sin_remainder_bound", stable(g.sin_remainder_bound)},
                           {"cos_remainder_bound", stable(g.cos_remainder_bound)}};
    }
    if (r.plan) {
        const auto& p = *r.plan;
        j["plan"] = {{"transformed_variables", p.transformed_variables},
                     {"inverse_constraints", p.inverse_constraints},
                     {"lifted_variables", p.lifted_variables},
                     {"angle_pairs", p.angle_pairs},
                     {"variables", p.variables},
                     {"constraints", p.constraints},
                     {"proven_optimal", p.proven_optimal}};
    }
    if (r.power_flow) {
        const auto& p = *r.power_flow;
        j["power_flow"] = {{"converged", p.converged},
                           {"iterations", p.iterations},
                           {"mismatch", stable(p.mismatch)},
                           {"slack_pg_change_mw", stable(p.slack_pg_change_mw)},
                           {"repriced_objective", stable(p.repriced_objective)},
                           {"message", p.message}};
    }
    return j;
}

}  // namespace

std::string format_json(const std::vector<RunReport>& reports, bool include_timing) {
    ordered_json arr = ordered_json::array();
    for (const auto& r : reports) arr.push_back(report_json(r, include_timing));
    ordered_json root;
    root["schema"] = "convexopf-report/1";
    root["reports"] = arr;
    return root.dump(2) + "\n";
}

Manifest parse_manifest(const std::string& text, const std::string& base_dir) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(std::string("manifest is not valid JSON: ") + e.what());
    }
    Manifest m;
    if (!j.is_object() || !j.contains("cases") || !j["cases"].is_array()) {
        throw InputError("manifest must be an object with a \"cases\" array");
    }
    try {
        for (const auto& c : j["cases"]) {
            ManifestCase mc;
            const fs::path p = c.at("path").get<std::string>();
            mc.path = p.is_absolute() ? p.string() : (fs::path(base_dir) / p).string();
            if (c.contains("mode")) mc.mode = parse_run_mode(c["mode"].get<std::string>());
            if (c.contains("objective_rel_tol")) mc.objective_rel_tol = c["objective_rel_tol"].get<double>();
            if (c.contains("pg_abs_tol_mw")) mc.pg_abs_tol_mw = c["pg_abs_tol_mw"].get<double>();
            if (c.contains("expected")) {
                for (const auto& [mode, vals] : c["expected"].items()) {
                    if (mode != "nonconvex" && mode != "convex") throw InputError("unknown expected mode " + mode);
                    ExpectedValues ev;
                    ev.mode = mode;
                    if (vals.contains("objective")) ev.objective = vals["objective"].get<double>();
                    if (vals.contains("total_pg_mw")) ev.total_pg_mw = vals["total_pg_mw"].get<double>();
                    mc.expected.push_back(ev);
                }
            }
            m.cases.push_back(mc);
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed manifest entry: ") + e.what());
    }
    return m;
}

Manifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read manifest " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_manifest(ss.str(), fs::path(path).parent_path().string());
}

namespace {

SuiteCaseResult run_one(const ManifestCase& mc, RunOptions opts) {
    SuiteCaseResult res;
    res.path = mc.path;
    opts.mode = mc.mode;
    try {
        res.report = run_case(mc.path, opts);
    } catch (const CaseError& e) {
        res.code = ExitCode::InputError;
        res.error = mc.path + ": " + e.what();
        return res;
    } catch (const InputError& e) {
        res.code = ExitCode::InputError;
        res.error = e.what();
        return res;
    } catch (const std::exception& e) {
        res.code = ExitCode::SolverFailure;
        res.error = mc.path + ": " + e.what();
        return res;
    }
    res.code = res.report->exit_code();
    if (res.code == ExitCode::SolverFailure) {
        res.error = mc.path + ": solver did not reach an optimal point";
    }
    for (const auto& ev : mc.expected) {
        const ModeRecord* m = res.report->find(ev.mode);
        if (!m) {
            res.diffs.push_back("DIFF " + res.report->case_name + " " + ev.mode + ": mode was not run");
            continue;
        }
        if (ev.objective) {
            const double rel = std::abs(m->objective - *ev.objective) / std::max(1.0, std::abs(*ev.objective));
            if (rel > mc.objective_rel_tol) {
                res.diffs.push_back("DIFF " + res.report->case_name + " " + ev.mode + " objective: expected " +
                                    fmt("%.2f", *ev.objective) + " got " + fmt("%.2f", m->objective) + " (rel " +
                                    fmt("%.2e", rel) + " > " + fmt("%.2e", mc.objective_rel_tol) + ")");
            }
        }
        if (ev.total_pg_mw) {
            const double d = std::abs(m->total_pg_mw - *ev.total_pg_mw);
            if (d > mc.pg_abs_tol_mw) {
                res.diffs.push_back("DIFF " + res.report->case_name + " " + ev.mode + " total_pg_mw: expected " +
                                    fmt("%.2f", *ev.total_pg_mw) + " got " + fmt("%.2f", m->total_pg_mw) + " (abs " +
                                    fmt("%.2f", d) + " > " + fmt("%.2f", mc.pg_abs_tol_mw) + ")");
            }
        }
    }
    if (!res.diffs.empty() && res.code == ExitCode::Success) res.code = ExitCode::ToleranceFailure;
    return res;
}

int severity(ExitCode c) {
    switch (c) {
        case ExitCode::Success: return 0;
        case ExitCode::ToleranceFailure: return 1;
        case ExitCode::SolverFailure: return 2;
        case ExitCode::InputError: return 3;
    }
    return 0;
}

}  // namespace

ExitCode SuiteResult::exit_code() const {
    ExitCode worst = ExitCode::Success;
    for (const auto& c : cases) {
        if (severity(c.code) > severity(worst)) worst = c.code;
    }
    return worst;
}

std::vector<RunReport> SuiteResult::reports() const {
    std::vector<RunReport> out;
    for (const auto& c : cases) {
        if (c.report) out.push_back(*c.report);
    }
    return out;
}

std::string SuiteResult::summary_table() const {
    std::ostringstream out;
    for (const auto& c : cases) {
        const std::string name = c.report ? c.report->case_name : c.path;
        out << (c.code == ExitCode::Success ? "PASS " : "FAIL ") << name << "\n";
        for (const auto& d : c.diffs) out << d << "\n";
    }
    return out.str();
}

SuiteResult run_suite(const Manifest& manifest, const RunOptions& base) {
    std::vector<std::future<SuiteCaseResult>> futures;
    for (const auto& mc : manifest.cases) futures.push_back(std::async(std::launch::async, run_one, mc, base));
    SuiteResult result;
    for (auto& f : futures) result.cases.push_back(f.get());
    return result;
}

}  // namespace convexopf
