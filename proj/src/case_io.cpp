#include "convexopf/case_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace convexopf {

namespace {

using Matrix = std::vector<std::vector<double>>;

struct ParsedMatrix {
    Matrix rows;
    std::size_t line = 0;  // line of the assignment
};

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class MatpowerLexer {
  public:
    explicit MatpowerLexer(std::string_view text) : text_(text) {}

    void run() {
        while (true) {
            skip_space(true);
            if (at_end()) break;
            if (peek() == '%') {
                skip_line();
                continue;
            }
            if (starts_with("function")) {
                skip_line();
                continue;
            }
            if (!starts_with("mpc.")) {
                throw CaseError("syntax error: expected 'mpc.<field> = ...'", line_);
            }
            pos_ += 4;
            const std::size_t stmt_line = line_;
            std::string name = read_identifier();
            if (name.empty()) throw CaseError("syntax error: missing field name after 'mpc.'", line_);
            skip_space(false);
            if (at_end() || peek() != '=') throw CaseError("syntax error: expected '=' after mpc." + name, line_);
            ++pos_;
            skip_space(false);
            if (at_end()) throw CaseError("syntax error: unexpected end of input", line_);
            if (peek() == '[') {
                ++pos_;
                if (matrices_.contains(name)) throw CaseError("duplicate definition of mpc." + name, stmt_line);
                matrices_[name] = ParsedMatrix{read_matrix(), stmt_line};
            } else if (peek() == '{') {
                skip_cell();
            } else {
                scalars_[name] = {read_scalar_text(), stmt_line};
            }
        }
    }

    const std::map<std::string, ParsedMatrix>& matrices() const { return matrices_; }
    const std::map<std::string, std::pair<std::string, std::size_t>>& scalars() const { return scalars_; }

  private:
    bool at_end() const { return pos_ >= text_.size(); }
    char peek() const { return text_[pos_]; }
    bool starts_with(std::string_view s) const { return text_.substr(pos_, s.size()) == s; }

    void skip_line() {
        while (!at_end() && peek() != '\n') ++pos_;
    }

    // Skips blanks; newlines too when `newlines` is set. Comments run to end of line.
    void skip_space(bool newlines) {
        while (!at_end()) {
            char c = peek();
            if (c == '\n') {
                if (!newlines) return;
                ++line_;
                ++pos_;
            } else if (c == ' ' || c == '\t' || c == '\r') {
                ++pos_;
            } else if (c == '%' && !newlines) {
                skip_line();
            } else {
                return;
            }
        }
    }

    std::string read_identifier() {
        std::size_t start = pos_;
        while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) ++pos_;
        return std::string(text_.substr(start, pos_ - start));
    }

    std::string read_scalar_text() {
        std::size_t start = pos_;
        bool quoted = false;
        while (!at_end()) {
            char c = peek();
            if (c == '\'') quoted = !quoted;
            if (!quoted && (c == ';' || c == '\n' || c == '%')) break;
            ++pos_;
        }
        std::string value(text_.substr(start, pos_ - start));
        if (!at_end() && peek() == ';') ++pos_;
        while (!value.empty() && std::isspace(static_cast<unsigned char>(value.back()))) value.pop_back();
        return value;
    }

    void skip_cell() {
        int depth = 0;
        bool quoted = false;
        while (!at_end()) {
            char c = peek();
            ++pos_;
            if (c == '\n') {
                ++line_;
                quoted = false;
            } else if (c == '\'') {
                quoted = !quoted;
            } else if (!quoted && c == '%') {
                skip_line();
            } else if (!quoted && c == '{') {
                ++depth;
            } else if (!quoted && c == '}') {
                if (--depth == 0) break;
            }
        }
        if (depth != 0) throw CaseError("syntax error: unterminated cell array", line_);
        skip_space(false);
        if (!at_end() && peek() == ';') ++pos_;
    }

    Matrix read_matrix() {
        Matrix rows;
        std::vector<double> row;
        auto finish_row = [&]() {
            if (row.empty()) return;
            if (!rows.empty() && rows.front().size() != row.size()) {
                throw CaseError("syntax error: row has " + std::to_string(row.size()) + " columns, expected " +
                                    std::to_string(rows.front().size()),
                                line_);
            }
            rows.push_back(std::move(row));
            row.clear();
        };
        while (true) {
            if (at_end()) throw CaseError("syntax error: unterminated matrix", line_);
            char c = peek();
            if (c == ']') {
                ++pos_;
                finish_row();
                skip_space(false);
                if (!at_end() && peek() == ';') ++pos_;
                return rows;
            }
            if (c == '\n') {
                finish_row();
                ++line_;
                ++pos_;
            } else if (c == ';') {
                finish_row();
                ++pos_;
            } else if (c == ' ' || c == '\t' || c == '\r' || c == ',') {
                ++pos_;
            } else if (c == '%') {
                skip_line();
            } else if (starts_with("...")) {
                skip_line();
                if (!at_end()) {
                    ++line_;
                    ++pos_;
                }
            } else {
                std::size_t start = pos_;
                while (!at_end()) {
                    char d = peek();
                    if (d == ' ' || d == '\t' || d == '\r' || d == '\n' || d == ';' || d == ',' || d == ']' ||
                        d == '%')
                        break;
                    ++pos_;
                }
                std::string token(text_.substr(start, pos_ - start));
                row.push_back(parse_number(token));
            }
        }
    }

    double parse_number(const std::string& token) const {
        if (token == "Inf" || token == "inf") return std::numeric_limits<double>::infinity();
        if (token == "-Inf" || token == "-inf") return -std::numeric_limits<double>::infinity();
        char* end = nullptr;
        double v = std::strtod(token.c_str(), &end);
        if (token.empty() || end != token.c_str() + token.size()) {
            throw CaseError("syntax error: unexpected token '" + token + "' in matrix", line_);
        }
        return v;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::map<std::string, ParsedMatrix> matrices_;
    std::map<std::string, std::pair<std::string, std::size_t>> scalars_;
};

BusType bus_type_from_code(double code, std::size_t line) {
    switch (static_cast<int>(code)) {
    case 1:
        return BusType::PQ;
    case 2:
        return BusType::PV;
    case 3:
        return BusType::Slack;
    default:
        throw CaseError("unsupported bus type " + format_double(code) + " (expected 1, 2 or 3)", line);
    }
}

int bus_type_code(BusType t) {
    switch (t) {
    case BusType::PQ:
        return 1;
    case BusType::PV:
        return 2;
    case BusType::Slack:
        return 3;
    }
    return 1;
}

BusType bus_type_from_name(const std::string& name) {
    if (name == "slack") return BusType::Slack;
    if (name == "PV") return BusType::PV;
    if (name == "PQ") return BusType::PQ;
    throw CaseError("unknown bus type '" + name + "'");
}

const ParsedMatrix& require_matrix(const MatpowerLexer& lex, const std::string& name) {
    auto it = lex.matrices().find(name);
    if (it == lex.matrices().end()) throw CaseError("missing required matrix mpc." + name);
    return it->second;
}

void require_columns(const ParsedMatrix& m, std::size_t n, const std::string& name) {
    if (!m.rows.empty() && m.rows.front().size() < n) {
        throw CaseError("mpc." + name + " needs at least " + std::to_string(n) + " columns", m.line);
    }
}

double column_or(const std::vector<double>& row, std::size_t col, double fallback) {
    return col < row.size() ? row[col] : fallback;
}

}  // namespace

CaseError::CaseError(const std::string& what, std::size_t line)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

std::string_view to_string(BusType type) {
    switch (type) {
    case BusType::Slack:
        return "slack";
    case BusType::PV:
        return "PV";
    case BusType::PQ:
        return "PQ";
    }
    return "PQ";
}

double CaseData::total_load_mw() const {
    double total = 0.0;
    for (const auto& b : buses) total += b.pd;
    return total;
}

void validate(const CaseData& data) {
    if (!(data.base_mva > 0.0)) throw CaseError("base_mva must be positive");
    std::set<int> ids;
    int slack_count = 0;
    for (const auto& b : data.buses) {
        if (!ids.insert(b.id).second) throw CaseError("duplicate bus id " + std::to_string(b.id));
        if (b.type == BusType::Slack) ++slack_count;
        if (b.vmin > b.vmax) throw CaseError("bus " + std::to_string(b.id) + ": Vmin > Vmax");
    }
    if (slack_count != 1) throw CaseError("expected exactly one slack bus, found " + std::to_string(slack_count));
    for (std::size_t k = 0; k < data.branches.size(); ++k) {
        const auto& br = data.branches[k];
        if (!ids.contains(br.from_bus) || !ids.contains(br.to_bus)) {
            throw CaseError("branch " + std::to_string(k + 1) + " refers to an unknown bus");
        }
    }
    for (std::size_t g = 0; g < data.generators.size(); ++g) {
        const auto& gen = data.generators[g];
        if (!ids.contains(gen.bus)) throw CaseError("generator " + std::to_string(g + 1) + " refers to an unknown bus");
        if (gen.pmin > gen.pmax) throw CaseError("generator " + std::to_string(g + 1) + ": Pmin > Pmax");
        if (gen.qmin > gen.qmax) throw CaseError("generator " + std::to_string(g + 1) + ": Qmin > Qmax");
    }
    std::vector<int> cost_count(data.generators.size(), 0);
    for (const auto& c : data.costs) {
        if (c.generator >= data.generators.size()) throw CaseError("cost record refers to an unknown generator");
        ++cost_count[c.generator];
    }
    for (std::size_t g = 0; g < data.generators.size(); ++g) {
        if (cost_count[g] > 1) throw CaseError("generator " + std::to_string(g + 1) + " has more than one cost record");
        if (data.generators[g].in_service && cost_count[g] == 0) {
            throw CaseError("generator " + std::to_string(g + 1) + " has no cost record");
        }
    }
}

CaseData parse_matpower(std::string_view text, std::vector<std::string>* warnings) {
    MatpowerLexer lex(text);
    lex.run();
    auto warn = [&](std::string msg) {
        if (warnings) warnings->push_back(std::move(msg));
    };

    CaseData data;
    auto base_it = lex.scalars().find("baseMVA");
    if (base_it == lex.scalars().end()) throw CaseError("missing required field mpc.baseMVA");
    {
        const auto& [value, line] = base_it->second;
        char* end = nullptr;
        data.base_mva = std::strtod(value.c_str(), &end);
        if (value.empty() || end != value.c_str() + value.size()) {
            throw CaseError("syntax error: mpc.baseMVA is not a number", line);
        }
    }
    // Leading "function mpc = name" gives the case name.
    {
        auto pos = text.find("function");
        if (pos != std::string_view::npos) {
            auto eol = text.find('\n', pos);
            std::string_view decl = text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
            auto eq = decl.find('=');
            if (eq != std::string_view::npos) {
                std::string_view n = decl.substr(eq + 1);
                while (!n.empty() && std::isspace(static_cast<unsigned char>(n.front()))) n.remove_prefix(1);
                while (!n.empty() && std::isspace(static_cast<unsigned char>(n.back()))) n.remove_suffix(1);
                data.name = std::string(n);
            }
        }
    }

    const auto& bus = require_matrix(lex, "bus");
    const auto& gen = require_matrix(lex, "gen");
    const auto& branch = require_matrix(lex, "branch");
    const auto& gencost = require_matrix(lex, "gencost");
    require_columns(bus, 13, "bus");
    require_columns(gen, 10, "gen");
    require_columns(branch, 4, "branch");
    require_columns(gencost, 4, "gencost");

    std::set<int> seen;
    for (std::size_t i = 0; i < bus.rows.size(); ++i) {
        const auto& r = bus.rows[i];
        BusRecord b;
        b.id = static_cast<int>(r[0]);
        if (!seen.insert(b.id).second) throw CaseError("duplicate bus id " + std::to_string(b.id), bus.line + i + 1);
        b.type = bus_type_from_code(r[1], bus.line + i + 1);
        b.pd = r[2];
        b.qd = r[3];
        b.gs = r[4];
        b.bs = r[5];
        b.base_kv = r[9];
        b.vmax = r[11];
        b.vmin = r[12];
        data.buses.push_back(b);
    }
    if (!bus.rows.empty()) warn("mpc.bus: ignoring columns area, Vm, Va and zone");

    for (const auto& r : gen.rows) {
        GenRecord g;
        g.bus = static_cast<int>(r[0]);
        g.pg = r[1];
        g.qg = r[2];
        g.qmax = r[3];
        g.qmin = r[4];
        g.vg = r[5];
        g.in_service = r[7] > 0.0;
        g.pmax = r[8];
        g.pmin = r[9];
        data.generators.push_back(g);
    }

    bool nonstandard_angle_limits = false;
    for (const auto& r : branch.rows) {
        BranchRecord br;
        br.from_bus = static_cast<int>(r[0]);
        br.to_bus = static_cast<int>(r[1]);
        br.r = r[2];
        br.x = r[3];
        br.b = column_or(r, 4, 0.0);
        br.s_max = column_or(r, 5, 0.0);
        double ratio = column_or(r, 8, 0.0);
        br.tap = ratio == 0.0 ? 1.0 : ratio;
        br.shift_deg = column_or(r, 9, 0.0);
        br.in_service = column_or(r, 10, 1.0) > 0.0;
        double angmin = column_or(r, 11, -360.0);
        double angmax = column_or(r, 12, 360.0);
        if (angmin > -360.0 || angmax < 360.0) nonstandard_angle_limits = true;
        data.branches.push_back(br);
    }
    if (nonstandard_angle_limits) warn("mpc.branch: angle difference limits (angmin/angmax) are ignored");

    const std::size_t ng = data.generators.size();
    if (gencost.rows.size() < ng) {
        throw CaseError("mpc.gencost has " + std::to_string(gencost.rows.size()) + " rows for " + std::to_string(ng) +
                            " generators",
                        gencost.line);
    }
    if (gencost.rows.size() > ng) warn("mpc.gencost: reactive power cost rows are ignored");
    for (std::size_t g = 0; g < ng; ++g) {
        const auto& r = gencost.rows[g];
        const std::size_t line = gencost.line + g + 1;
        if (r[0] == 1.0) throw CaseError("piecewise-linear cost model is not supported", line);
        if (r[0] != 2.0) throw CaseError("unknown cost model " + format_double(r[0]), line);
        const auto n = static_cast<std::size_t>(r[3]);
        if (4 + n > r.size()) throw CaseError("gencost row has fewer coefficients than declared", line);
        // coefficients are stored highest degree first
        std::vector<double> coeffs(r.begin() + 4, r.begin() + 4 + static_cast<std::ptrdiff_t>(n));
        while (coeffs.size() > 3) {
            if (coeffs.front() != 0.0) {
                throw CaseError("polynomial cost of degree " + std::to_string(coeffs.size() - 1) +
                                    " is not supported (max 2)",
                                line);
            }
            coeffs.erase(coeffs.begin());
        }
        CostRecord c;
        c.generator = g;
        const std::size_t m = coeffs.size();
        if (m >= 1) c.c0 = coeffs[m - 1];
        if (m >= 2) c.c1 = coeffs[m - 2];
        if (m >= 3) c.c2 = coeffs[m - 3];
        data.costs.push_back(c);
    }

    validate(data);
    return data;
}

std::string serialize_matpower(const CaseData& data) {
    std::ostringstream out;
    out << "function mpc = " << (data.name.empty() ? "case" : data.name) << "\n";
    out << "mpc.version = '2';\n";
    out << "mpc.baseMVA = " << format_double(data.base_mva) << ";\n\n";
    out << "%% bus_i type Pd Qd Gs Bs area Vm Va baseKV zone Vmax Vmin\n";
    out << "mpc.bus = [\n";
    for (const auto& b : data.buses) {
        out << "\t" << b.id << "\t" << bus_type_code(b.type) << "\t" << format_double(b.pd) << "\t"
            << format_double(b.qd) << "\t" << format_double(b.gs) << "\t" << format_double(b.bs) << "\t1\t1\t0\t"
            << format_double(b.base_kv) << "\t1\t" << format_double(b.vmax) << "\t" << format_double(b.vmin) << ";\n";
    }
    out << "];\n\n";
    out << "%% bus Pg Qg Qmax Qmin Vg mBase status Pmax Pmin\n";
    out << "mpc.gen = [\n";
    for (const auto& g : data.generators) {
        out << "\t" << g.bus << "\t" << format_double(g.pg) << "\t" << format_double(g.qg) << "\t"
            << format_double(g.qmax) << "\t" << format_double(g.qmin) << "\t" << format_double(g.vg) << "\t"
            << format_double(data.base_mva) << "\t" << (g.in_service ? 1 : 0) << "\t" << format_double(g.pmax)
            << "\t" << format_double(g.pmin) << ";\n";
    }
    out << "];\n\n";
    out << "%% fbus tbus r x b rateA rateB rateC ratio angle status angmin angmax\n";
    out << "mpc.branch = [\n";
    for (const auto& br : data.branches) {
        out << "\t" << br.from_bus << "\t" << br.to_bus << "\t" << format_double(br.r) << "\t" << format_double(br.x)
            << "\t" << format_double(br.b) << "\t" << format_double(br.s_max) << "\t0\t0\t" << format_double(br.tap)
            << "\t" << format_double(br.shift_deg) << "\t" << (br.in_service ? 1 : 0) << "\t-360\t360;\n";
    }
    out << "];\n\n";
    out << "%% 2 startup shutdown n c2 c1 c0\n";
    out << "mpc.gencost = [\n";
    std::vector<const CostRecord*> by_gen(data.generators.size(), nullptr);
    for (const auto& c : data.costs) by_gen.at(c.generator) = &c;
    for (const auto* c : by_gen) {
        CostRecord zero;
        if (!c) c = &zero;
        out << "\t2\t0\t0\t3\t" << format_double(c->c2) << "\t" << format_double(c->c1) << "\t"
            << format_double(c->c0) << ";\n";
    }
    out << "];\n";
    return out.str();
}

CaseData parse_case_json(std::string_view text) {
    using nlohmann::json;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw CaseError(std::string("JSON syntax error: ") + e.what());
    }
    CaseData data;
    try {
        data.name = j.value("name", std::string{});
        data.base_mva = j.at("base_mva").get<double>();
        for (const auto& b : j.at("buses")) {
            BusRecord r;
            r.id = b.at("id").get<int>();
            r.type = bus_type_from_name(b.at("type").get<std::string>());
            r.pd = b.at("pd").get<double>();
            r.qd = b.at("qd").get<double>();
            r.gs = b.value("gs", 0.0);
            r.bs = b.value("bs", 0.0);
            r.vmin = b.at("vmin").get<double>();
            r.vmax = b.at("vmax").get<double>();
            r.base_kv = b.value("base_kv", 0.0);
            data.buses.push_back(r);
        }
        for (const auto& b : j.at("branches")) {
            BranchRecord r;
            r.from_bus = b.at("from_bus").get<int>();
            r.to_bus = b.at("to_bus").get<int>();
            r.r = b.at("r").get<double>();
            r.x = b.at("x").get<double>();
            r.b = b.value("b", 0.0);
            r.s_max = b.value("s_max", 0.0);
            r.tap = b.value("tap", 1.0);
            if (r.tap == 0.0) r.tap = 1.0;
            r.shift_deg = b.value("shift_deg", 0.0);
            r.in_service = b.value("in_service", true);
            data.branches.push_back(r);
        }
        for (const auto& g : j.at("generators")) {
            GenRecord r;
            r.bus = g.at("bus").get<int>();
            r.pg = g.value("pg", 0.0);
            r.qg = g.value("qg", 0.0);
            r.pmin = g.at("pmin").get<double>();
            r.pmax = g.at("pmax").get<double>();
            r.qmin = g.at("qmin").get<double>();
            r.qmax = g.at("qmax").get<double>();
            r.vg = g.value("vg", 1.0);
            r.in_service = g.value("in_service", true);
            data.generators.push_back(r);
        }
        for (const auto& c : j.at("costs")) {
            CostRecord r;
            r.generator = c.at("generator").get<std::size_t>();
            r.c2 = c.value("c2", 0.0);
            r.c1 = c.value("c1", 0.0);
            r.c0 = c.value("c0", 0.0);
            data.costs.push_back(r);
        }
    } catch (const json::exception& e) {
        throw CaseError(std::string("invalid case JSON: ") + e.what());
    }
    validate(data);
    return data;
}

std::string serialize_case_json(const CaseData& data) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["name"] = data.name;
    j["base_mva"] = data.base_mva;
    j["buses"] = ordered_json::array();
    for (const auto& b : data.buses) {
        j["buses"].push_back({{"id", b.id},
                              {"type", std::string(to_string(b.type))},
                              {"pd", b.pd},
                              {"qd", b.qd},
                              {"gs", b.gs},
                              {"bs", b.bs},
                              {"vmin", b.vmin},
                              {"vmax", b.vmax},
                              {"base_kv", b.base_kv}});
    }
    j["branches"] = ordered_json::array();
    for (const auto& br : data.branches) {
        j["branches"].push_back({{"from_bus", br.from_bus},
                                 {"to_bus", br.to_bus},
                                 {"r", br.r},
                                 {"x", br.x},
                                 {"b", br.b},
                                 {"s_max", br.s_max},
                                 {"tap", br.tap},
                                 {"shift_deg", br.shift_deg},
                                 {"in_service", br.in_service}});
    }
    j["generators"] = ordered_json::array();
    for (const auto& g : data.generators) {
        j["generators"].push_back({{"bus", g.bus},
                                   {"pg", g.pg},
                                   {"qg", g.qg},
                                   {"pmin", g.pmin},
                                   {"pmax", g.pmax},
                                   {"qmin", g.qmin},
                                   {"qmax", g.qmax},
                                   {"vg", g.vg},
                                   {"in_service", g.in_service}});
    }
    j["costs"] = ordered_json::array();
    for (const auto& c : data.costs) {
        j["costs"].push_back({{"generator", c.generator}, {"c2", c.c2}, {"c1", c.c1}, {"c0", c.c0}});
    }
    return j.dump(2) + "\n";
}

CaseData load_case(const std::string& path, std::vector<std::string>* warnings) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CaseError("cannot open case file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    const bool is_json = path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
    CaseData data = is_json ? parse_case_json(text) : parse_matpower(text, warnings);
    if (data.name.empty()) {
        auto slash = path.find_last_of('/');
        std::string stem = path.substr(slash == std::string::npos ? 0 : slash + 1);
        data.name = stem.substr(0, stem.find_last_of('.'));
    }
    return data;
}

// ---------------------------------------------------------------------------

double NetworkData::total_load_pu() const {
    double total = 0.0;
    for (const auto& b : buses) total += b.pd;
    return total;
}

NetworkData to_network(const CaseData& data) {
    validate(data);
    NetworkData net;
    net.name = data.name;
    net.base_mva = data.base_mva;
    const double base = data.base_mva;
    for (const auto& b : data.buses) {
        const std::size_t index = net.buses.size();
        net.index_of[b.id] = index;
        NetworkBus nb;
        nb.id = b.id;
        nb.type = b.type;
        nb.pd = b.pd / base;
        nb.qd = b.qd / base;
        nb.gs = b.gs / base;
        nb.bs = b.bs / base;
        nb.vmin = b.vmin;
        nb.vmax = b.vmax;
        nb.base_kv = b.base_kv;
        if (b.type == BusType::Slack) net.slack = index;
        net.buses.push_back(nb);
    }
    for (const auto& br : data.branches) {
        NetworkBranch nb;
        nb.from = net.index_of.at(br.from_bus);
        nb.to = net.index_of.at(br.to_bus);
        nb.r = br.r;
        nb.x = br.x;
        nb.b = br.b;
        nb.s_max = br.s_max / base;
        nb.tap = br.tap;
        nb.shift_rad = br.shift_deg * std::numbers::pi / 180.0;
        nb.in_service = br.in_service;
        net.branches.push_back(nb);
    }
    for (const auto& g : data.generators) {
        NetworkGenerator ng;
        ng.bus = net.index_of.at(g.bus);
        ng.pg = g.pg / base;
        ng.qg = g.qg / base;
        ng.pmin = g.pmin / base;
        ng.pmax = g.pmax / base;
        ng.qmin = g.qmin / base;
        ng.qmax = g.qmax / base;
        ng.vg = g.vg;
        ng.in_service = g.in_service;
        net.generators.push_back(ng);
    }
    for (const auto& c : data.costs) {
        auto& g = net.generators.at(c.generator);
        g.c2 = c.c2;
        g.c1 = c.c1;
        g.c0 = c.c0;
    }
    return net;
}

CaseData from_network(const NetworkData& net) {
    CaseData data;
    data.name = net.name;
    data.base_mva = net.base_mva;
    const double base = net.base_mva;
    for (const auto& b : net.buses) {
        BusRecord r;
        r.id = b.id;
        r.type = b.type;
        r.pd = b.pd * base;
        r.qd = b.qd * base;
        r.gs = b.gs * base;
        r.bs = b.bs * base;
        r.vmin = b.vmin;
        r.vmax = b.vmax;
        r.base_kv = b.base_kv;
        data.buses.push_back(r);
    }
    for (const auto& br : net.branches) {
        BranchRecord r;
        r.from_bus = net.buses.at(br.from).id;
        r.to_bus = net.buses.at(br.to).id;
        r.r = br.r;
        r.x = br.x;
        r.b = br.b;
        r.s_max = br.s_max * base;
        r.tap = br.tap;
        r.shift_deg = br.shift_rad * 180.0 / std::numbers::pi;
        r.in_service = br.in_service;
        data.branches.push_back(r);
    }
    for (std::size_t i = 0; i < net.generators.size(); ++i) {
        const auto& g = net.generators[i];
        GenRecord r;
        r.bus = net.buses.at(g.bus).id;
        r.pg = g.pg * base;
        r.qg = g.qg * base;
        r.pmin = g.pmin * base;
        r.pmax = g.pmax * base;
        r.qmin = g.qmin * base;
        r.qmax = g.qmax * base;
        r.vg = g.vg;
        r.in_service = g.in_service;
        data.generators.push_back(r);
        data.costs.push_back(CostRecord{i, g.c2, g.c1, g.c0});
    }
    return data;
}

}  // namespace convexopf
