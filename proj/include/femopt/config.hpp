#ifndef FEMOPT_CONFIG_HPP
#define FEMOPT_CONFIG_HPP

// Experiment configuration: a small TOML-like format of [sections] holding
// `key = value` lines. Values are quoted strings, numbers, booleans or
// single-line arrays of those. Expressions are quoted strings.
//
//   [problem]
//   dim = 1
//   D = "1"                 # or ["Dxx", "Dxy", "Dyx", "Dyy"]
//   r = "0"
//   u = "exp(-(x-0.5)^2)"   # exact solution; f, g, h are generated
//   bc = ["dirichlet", "dirichlet", "neumann", "neumann"]   # left right bottom top
//
//   [mesh]
//   kind = "interval"
//   type = 1
//
//   [fem]
//   degrees = "1..5"
//
//   [run]
//   mode = "both"
//   variables = ["u", "grad", "hess"]
//
//   [output]
//   dir = "out"

#include <cctype>
#include <cstdint>
#include <fstream>
#include <limits>
#include <locale>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "femopt/analysis.hpp"
#include "femopt/error.hpp"
#include "femopt/expr.hpp"
#include "femopt/mesh.hpp"
#include "femopt/predictor.hpp"
#include "femopt/problem.hpp"

namespace femopt {

enum class RunMode { BruteForce, Predict, Both };

inline std::string_view to_string(RunMode m) {
    switch (m) {
    case RunMode::BruteForce: return "bf";
    case RunMode::Predict: return "pred";
    case RunMode::Both: return "both";
    }
    return "?";
}

struct ExperimentConfig {
    std::string source = "<config>";
    Experiment experiment;
    std::vector<int> degrees{1, 2, 3, 4, 5};
    std::vector<Variable> variables{Variable::U, Variable::Grad, Variable::Hess};
    RunMode mode = RunMode::Both;
    /// Manufactured solution for MS+; the per-degree default when empty.
    std::optional<Expr> u_M;
    std::string output_dir = "femopt_out";
    bool emit_plots = true;

    /// Variables that exist at degree p (no Hessian error for p = 1).
    std::vector<Variable> variables_for(int p) const {
        std::vector<Variable> out;
        for (Variable v : variables)
            if (derivative_order(v) <= p) out.push_back(v);
        return out;
    }
    Expr manufactured_solution(int p) const { return u_M ? *u_M : default_manufactured_solution(experiment.dim(), p); }
};

namespace detail {

struct ConfigValue {
    using Scalar = std::variant<std::string, double, bool>;
    std::variant<Scalar, std::vector<Scalar>> v;
    int line = 0;
    bool used = false;
};

class ConfigReader {
public:
    ConfigReader(std::string source, std::istream& in) : source_(std::move(source)) { parse(in); }

    [[noreturn]] void fail(int line, const std::string& msg) const {
        if (line <= 0) throw ConfigError(source_ + ": " + msg);
        throw ConfigError(source_ + ":" + std::to_string(line) + ": " + msg);
    }

    ConfigValue* find(const std::string& section, const std::string& key) {
        auto it = values_.find(section + "." + key);
        if (it == values_.end()) return nullptr;
        it->second.used = true;
        return &it->second;
    }

    std::optional<std::string> string(const std::string& s, const std::string& k) {
        ConfigValue* v = find(s, k);
        if (!v) return std::nullopt;
        return as_string(*v, s + "." + k);
    }
    std::optional<double> number(const std::string& s, const std::string& k) {
        ConfigValue* v = find(s, k);
        if (!v) return std::nullopt;
        const auto* sc = std::get_if<ConfigValue::Scalar>(&v->v);
        const double* d = sc ? std::get_if<double>(sc) : nullptr;
        if (!d) fail(v->line, s + "." + k + " must be a number");
        return *d;
    }
    std::optional<int> integer(const std::string& s, const std::string& k) {
        const ConfigValue* v = peek(s, k);
        const auto d = number(s, k);
        if (!d) return std::nullopt;
        if (*d != static_cast<double>(static_cast<long long>(*d)) || std::fabs(*d) > 2e9)
            fail(v->line, s + "." + k + " must be an integer");
        return static_cast<int>(*d);
    }
    std::optional<bool> boolean(const std::string& s, const std::string& k) {
        ConfigValue* v = find(s, k);
        if (!v) return std::nullopt;
        const auto* sc = std::get_if<ConfigValue::Scalar>(&v->v);
        const bool* b = sc ? std::get_if<bool>(sc) : nullptr;
        if (!b) fail(v->line, s + "." + k + " must be true or false");
        return *b;
    }
    /// A scalar is accepted as a one-element list.
    std::optional<std::vector<ConfigValue::Scalar>> list(const std::string& s, const std::string& k) {
        ConfigValue* v = find(s, k);
        if (!v) return std::nullopt;
        if (const auto* a = std::get_if<std::vector<ConfigValue::Scalar>>(&v->v)) return *a;
        return std::vector<ConfigValue::Scalar>{std::get<ConfigValue::Scalar>(v->v)};
    }
    const ConfigValue* peek(const std::string& s, const std::string& k) const {
        auto it = values_.find(s + "." + k);
        return it == values_.end() ? nullptr : &it->second;
    }
    int line_of(const std::string& s, const std::string& k) const {
        const ConfigValue* v = peek(s, k);
        return v ? v->line : 0;
    }
    void check_all_used() const {
        for (const auto& [key, v] : values_)
            if (!v.used) fail(v.line, "unknown key '" + key + "'");
    }

    std::string as_string(const ConfigValue& v, const std::string& what) const {
        const auto* sc = std::get_if<ConfigValue::Scalar>(&v.v);
        const std::string* s = sc ? std::get_if<std::string>(sc) : nullptr;
        if (!s) fail(v.line, what + " must be a quoted string");
        return *s;
    }

private:
    void parse(std::istream& in) {
        std::string raw, section;
        int line = 0;
        while (std::getline(in, raw)) {
            ++line;
            std::string text = strip(remove_comment(raw, line));
            if (text.empty()) continue;
            if (text.front() == '[') {
                if (text.back() != ']') fail(line, "unterminated section header");
                section = strip(text.substr(1, text.size() - 2));
                if (section.empty() || !is_name(section)) fail(line, "invalid section name '" + section + "'");
                continue;
            }
            const auto eq = text.find('=');
            if (eq == std::string::npos) fail(line, "expected key = value");
            const std::string key = strip(text.substr(0, eq));
            if (!is_name(key)) fail(line, "invalid key '" + key + "'");
            if (section.empty()) fail(line, "key '" + key + "' outside of a section");
            const std::string full = section + "." + key;
            if (values_.count(full)) fail(line, "duplicate key '" + full + "'");
            ConfigValue v;
            v.line = line;
            std::string rest = strip(text.substr(eq + 1));
            if (rest.empty()) fail(line, "missing value for '" + key + "'");
            if (rest.front() == '[') {
                if (rest.back() != ']') fail(line, "unterminated array");
                v.v = parse_array(rest.substr(1, rest.size() - 2), line);
            } else {
                std::size_t pos = 0;
                v.v = parse_scalar(rest, pos, line);
                if (pos != rest.size()) fail(line, "unexpected text after value");
            }
            values_.emplace(full, std::move(v));
        }
    }

    std::string remove_comment(const std::string& s, int line) const {
        bool quoted = false;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '"') quoted = !quoted;
            else if (s[i] == '#' && !quoted) return s.substr(0, i);
        }
        if (quoted) fail(line, "unterminated string");
        return s;
    }

    static std::string strip(const std::string& s) {
        std::size_t a = 0, b = s.size();
        while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
        while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
        return s.substr(a, b - a);
    }
    static bool is_name(const std::string& s) {
        if (s.empty()) return false;
        for (char c : s)
            if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
        return true;
    }

    std::vector<ConfigValue::Scalar> parse_array(const std::string& body, int line) const {
        std::vector<ConfigValue::Scalar> out;
        std::size_t pos = 0;
        auto skip = [&] {
            while (pos < body.size() && std::isspace(static_cast<unsigned char>(body[pos]))) ++pos;
        };
        skip();
        if (pos == body.size()) return out;
        while (true) {
            out.push_back(parse_scalar(body, pos, line));
            skip();
            if (pos == body.size()) break;
            if (body[pos] != ',') fail(line, "expected ',' between array items");
            ++pos;
            skip();
            if (pos == body.size()) break; // trailing comma
        }
        return out;
    }

    ConfigValue::Scalar parse_scalar(const std::string& s, std::size_t& pos, int line) const {
        if (s[pos] == '"') {
            const auto end = s.find('"', pos + 1);
            if (end == std::string::npos) fail(line, "unterminated string");
            std::string out = s.substr(pos + 1, end - pos - 1);
            pos = end + 1;
            return out;
        }
        std::size_t end = pos;
        while (end < s.size() && s[end] != ',' && !std::isspace(static_cast<unsigned char>(s[end]))) ++end;
        const std::string tok = s.substr(pos, end - pos);
        pos = end;
        if (tok == "true") return true;
        if (tok == "false") return false;
        if (tok == "inf" || tok == "+inf") return std::numeric_limits<double>::infinity();
        std::istringstream is(tok);
        is.imbue(std::locale::classic());
        double d = 0.0;
        is >> d;
        if (!is || !is.eof()) fail(line, "cannot read value '" + tok + "' (strings must be quoted)");
        return d;
    }

    std::string source_;
    std::map<std::string, ConfigValue> values_;
};

inline Expr config_expr(ConfigReader& rd, const std::string& s, const std::string& k, const std::string& text) {
    try {
        return parse(text);
    } catch (const ParseError& e) {
        rd.fail(rd.line_of(s, k), s + "." + k + ": " + e.what());
    }
}

inline std::vector<int> parse_degrees(ConfigReader& rd) {
    const ConfigValue* v = rd.peek("fem", "degrees");
    if (!v) return {1, 2, 3, 4, 5};
    const int line = v->line;
    std::vector<int> out;
    auto add = [&](int p) {
        if (p < 1 || p > 5) rd.fail(line, "degree " + std::to_string(p) + " outside 1..5");
        for (int q : out)
            if (q == p) rd.fail(line, "degree " + std::to_string(p) + " listed twice");
        out.push_back(p);
    };
    auto items = *rd.list("fem", "degrees");
    if (items.size() == 1 && std::holds_alternative<std::string>(items[0])) {
        const std::string s = std::get<std::string>(items[0]);
        const auto dots = s.find("..");
        int a = 0, b = 0;
        try {
            std::size_t used = 0;
            if (dots == std::string::npos) {
                a = b = std::stoi(s, &used);
                if (used != s.size()) throw std::invalid_argument(s);
            } else {
                a = std::stoi(s.substr(0, dots), &used);
                if (used != dots) throw std::invalid_argument(s);
                const std::string tail = s.substr(dots + 2);
                b = std::stoi(tail, &used);
                if (used != tail.size()) throw std::invalid_argument(s);
            }
        } catch (const std::logic_error&) {
            rd.fail(line, "fem.degrees: cannot read range '" + s + "'");
        }
        if (a > b) rd.fail(line, "fem.degrees: empty range '" + s + "'");
        for (int p = a; p <= b; ++p) add(p);
        return out;
    }
    for (const auto& it : items) {
        const double* d = std::get_if<double>(&it);
        if (!d || *d != static_cast<double>(static_cast<int>(*d))) rd.fail(line, "fem.degrees must list integers");
        add(static_cast<int>(*d));
    }
    if (out.empty()) rd.fail(line, "fem.degrees is empty");
    return out;
}

inline BoundaryKind parse_boundary(ConfigReader& rd, int line, const std::string& s) {
    if (s == "dirichlet" || s == "D") return BoundaryKind::Dirichlet;
    if (s == "neumann" || s == "N") return BoundaryKind::Neumann;
    rd.fail(line, "unknown boundary type '" + s + "'");
}

inline ExperimentConfig read_config(ConfigReader& rd, const std::string& source) {
    ExperimentConfig cfg;
    cfg.source = source;
    Experiment& ex = cfg.experiment;

    // mesh
    if (auto k = rd.string("mesh", "kind")) {
        try {
            ex.kind = parse_element_kind(*k);
        } catch (const Error& e) {
            rd.fail(rd.line_of("mesh", "kind"), e.what());
        }
    }
    int dim = dimension_of(ex.kind);
    if (auto d = rd.integer("problem", "dim")) {
        if (*d != dim)
            rd.fail(rd.line_of("problem", "dim"),
                    "problem.dim = " + std::to_string(*d) + " does not match mesh kind " + std::string(to_string(ex.kind)));
    }
    if (auto t = rd.integer("mesh", "type")) {
        if (*t < 1 || *t > 4) rd.fail(rd.line_of("mesh", "type"), "mesh.type must be 1..4");
        if (*t != 1 && dim != 1) rd.fail(rd.line_of("mesh", "type"), "distorted mesh types are only defined in 1D");
        ex.distortion.mesh_type = *t;
    }
    if (auto m = rd.number("mesh", "magnitude")) {
        if (!(std::fabs(*m) < 0.5)) rd.fail(rd.line_of("mesh", "magnitude"), "mesh.magnitude must satisfy |f_h| < 0.5");
        ex.distortion.magnitude = *m;
    }
    if (auto s = rd.number("mesh", "seed")) {
        if (*s < 0 || *s != std::floor(*s) || *s > 9.007e15) rd.fail(rd.line_of("mesh", "seed"), "mesh.seed must be a non-negative integer");
        ex.distortion.seed = static_cast<std::uint64_t>(*s);
    }

    // problem
    ExprMatrix D = ExprMatrix::identity();
    if (auto items = rd.list("problem", "D")) {
        const int line = rd.line_of("problem", "D");
        std::vector<Expr> e;
        for (const auto& it : *items) {
            const std::string* s = std::get_if<std::string>(&it);
            if (!s) rd.fail(line, "problem.D entries must be quoted expressions");
            e.push_back(config_expr(rd, "problem", "D", *s));
        }
        if (e.size() == 1) D = ExprMatrix{{e[0], Expr(0.0), Expr(0.0), e[0]}};
        else if (e.size() == 4) D = ExprMatrix{{e[0], e[1], e[2], e[3]}};
        else rd.fail(line, "problem.D takes 1 or 4 entries");
    }
    Expr r(0.0);
    if (auto s = rd.string("problem", "r")) r = config_expr(rd, "problem", "r", *s);
    std::array<BoundaryKind, 4> bc{BoundaryKind::Dirichlet, BoundaryKind::Dirichlet, BoundaryKind::Neumann,
                                   BoundaryKind::Neumann};
    if (auto items = rd.list("problem", "bc")) {
        const int line = rd.line_of("problem", "bc");
        const std::size_t need = dim == 1 ? 2 : 4;
        if (items->size() != need && items->size() != 4)
            rd.fail(line, "problem.bc needs " + std::to_string(need) + " entries (left, right" +
                              (dim == 2 ? ", bottom, top)" : ")"));
        for (std::size_t i = 0; i < items->size(); ++i) {
            const std::string* s = std::get_if<std::string>(&(*items)[i]);
            if (!s) rd.fail(line, "problem.bc entries must be quoted strings");
            bc[i] = parse_boundary(rd, line, *s);
        }
    }
    if (auto s = rd.string("problem", "u")) {
        for (const char* k : {"f", "g", "h_left", "h_right", "h_bottom", "h_top"})
            if (rd.peek("problem", k))
                rd.fail(rd.line_of("problem", k), std::string("problem.") + k + " is generated from problem.u; remove it");
        const Expr u = config_expr(rd, "problem", "u", *s);
        ex.problem = ProblemSpec::manufactured(dim, D, r, u, bc);
    } else {
        ProblemSpec ps;
        ps.dim = dim;
        ps.D = D;
        ps.r = r;
        ps.bc = bc;
        if (dim == 1) ps.bc[2] = ps.bc[3] = BoundaryKind::Neumann;
        auto f = rd.string("problem", "f");
        if (!f) rd.fail(0, "problem needs either u (exact solution) or f");
        ps.f = config_expr(rd, "problem", "f", *f);
        if (auto g = rd.string("problem", "g")) ps.g = config_expr(rd, "problem", "g", *g);
        const char* names[4] = {"h_left", "h_right", "h_bottom", "h_top"};
        for (int i = 0; i < 4; ++i)
            if (auto h = rd.string("problem", names[i])) ps.h[static_cast<std::size_t>(i)] = config_expr(rd, "problem", names[i], *h);
        ex.problem = std::move(ps);
    }

    // fem
    cfg.degrees = parse_degrees(rd);

    // run
    if (auto m = rd.string("run", "mode")) {
        if (*m == "bf") cfg.mode = RunMode::BruteForce;
        else if (*m == "pred") cfg.mode = RunMode::Predict;
        else if (*m == "both") cfg.mode = RunMode::Both;
        else rd.fail(rd.line_of("run", "mode"), "run.mode must be bf, pred or both");
    }
    if (auto items = rd.list("run", "variables")) {
        const int line = rd.line_of("run", "variables");
        cfg.variables.clear();
        for (const auto& it : *items) {
            const std::string* s = std::get_if<std::string>(&it);
            if (!s) rd.fail(line, "run.variables entries must be quoted strings");
            try {
                const Variable v = parse_variable(*s);
                for (Variable w : cfg.variables)
                    if (w == v) rd.fail(line, "variable '" + *s + "' listed twice");
                cfg.variables.push_back(v);
            } catch (const AnalysisError& e) {
                rd.fail(line, e.what());
            }
        }
        if (cfg.variables.empty()) rd.fail(line, "run.variables is empty");
    }
    ex.mode = ex.problem.exact ? ReferenceMode::Exact : ReferenceMode::HalfGrid;
    if (auto ref = rd.string("run", "reference")) {
        const int line = rd.line_of("run", "reference");
        if (*ref == "exact") {
            if (!ex.problem.exact) rd.fail(line, "run.reference = \"exact\" needs problem.u");
            ex.mode = ReferenceMode::Exact;
        } else if (*ref == "half-grid") {
            ex.mode = ReferenceMode::HalfGrid;
        } else {
            rd.fail(line, "run.reference must be exact or half-grid");
        }
    }
    AlgoConfig& algo = ex.algo;
    if (auto v = rd.integer("run", "r_min")) {
        if (*v < 0) rd.fail(rd.line_of("run", "r_min"), "run.r_min must be non-negative");
        algo.r_min_override = *v;
    }
    if (auto v = rd.number("run", "c_s")) {
        if (!(*v > 0.0)) rd.fail(rd.line_of("run", "c_s"), "run.c_s must be positive");
        algo.c_s = *v;
    }
    if (auto v = rd.number("run", "c_r")) {
        if (!(*v > 0.0) || !(*v <= 1.0)) rd.fail(rd.line_of("run", "c_r"), "run.c_r must be in (0, 1]");
        algo.c_r_override = *v;
    }
    if (auto v = rd.number("run", "n_max")) {
        if (!(*v >= 1.0) || *v > 1e15) rd.fail(rd.line_of("run", "n_max"), "run.n_max must be at least 1");
        algo.n_max = static_cast<std::int64_t>(*v);
    }
    if (auto v = rd.integer("run", "msplus_offset")) algo.msplus_offset = *v;
    if (auto v = rd.integer("run", "msplus_levels")) {
        if (*v < 3) rd.fail(rd.line_of("run", "msplus_levels"), "run.msplus_levels must be at least 3");
        algo.msplus_levels = *v;
    }
    if (auto v = rd.number("run", "max_factor_entries")) {
        if (!(*v >= 1.0)) rd.fail(rd.line_of("run", "max_factor_entries"), "run.max_factor_entries must be positive");
        algo.solver.max_factor_entries = static_cast<std::int64_t>(*v);
    }
    if (auto s = rd.string("run", "u_m")) {
        const Expr u = config_expr(rd, "run", "u_m", *s);
        const auto deg = polynomial_degree(u);
        const int line = rd.line_of("run", "u_m");
        if (!deg) rd.fail(line, "run.u_m must be a polynomial");
        for (int p : cfg.degrees)
            if (*deg > p) rd.fail(line, "run.u_m has degree " + std::to_string(*deg) + ", above p = " + std::to_string(p));
        cfg.u_M = u;
    }
    // output
    if (auto d = rd.string("output", "dir")) {
        if (d->empty()) rd.fail(rd.line_of("output", "dir"), "output.dir is empty");
        cfg.output_dir = *d;
    }
    if (auto b = rd.boolean("output", "emit_plots")) cfg.emit_plots = *b;

    rd.check_all_used();
    return cfg;
}

} // namespace detail

inline ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>") {
    std::istringstream in(text);
    detail::ConfigReader rd(source, in);
    return detail::read_config(rd, source);
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

} // namespace femopt

#endif
