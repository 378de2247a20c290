#pragma once

// Problem files, result files and their provenance block.

#include "indefshoot/bifurcation.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace indefshoot {

inline constexpr const char* tool_version = "indefshoot 1.0.0";

using json = nlohmann::json;

struct Problem {
    std::string name;
    WeightSpec weight;
    Nonlinearity g;
    json source; ///< the parsed file, echoed into provenance
};

namespace detail {

inline const json& require(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw AdmissibilityError(where + ": missing key '" + key + "'");
    return j.at(key);
}

inline std::vector<double> number_array(const json& j, const std::string& where) {
    if (!j.is_array()) throw AdmissibilityError(where + " must be an array of numbers");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) throw AdmissibilityError(where + " must be an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

inline double number(const json& j, const std::string& where) {
    if (!j.is_number()) throw AdmissibilityError(where + " must be a number");
    return j.get<double>();
}

inline WeightSpec::Fn segment_function(const json& seg, const std::string& where) {
    const std::string kind = require(seg, "kind", where).get<std::string>();
    if (kind == "constant") {
        const double c = number(require(seg, "value", where), where + ".value");
        return [c](double) { return c; };
    }
    if (kind == "sin_pi") {
        const double a = seg.contains("amplitude") ? number(seg.at("amplitude"), where + ".amplitude") : 1.0;
        return [a](double t) { return a * std::sin(std::numbers::pi * t); };
    }
    if (kind == "poly") {
        const auto c = number_array(require(seg, "coeffs", where), where + ".coeffs");
        if (c.empty()) throw AdmissibilityError(where + ".coeffs must not be empty");
        return [c](double t) {
            double v = 0.0;
            for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * t + *it;
            return v;
        };
    }
    throw AdmissibilityError(where + ": unknown segment kind '" + kind + "' (constant, sin_pi, poly)");
}

inline std::vector<double> problem_nodes(const json& j) {
    if (j.contains("nodes")) return number_array(j.at("nodes"), "nodes");
    std::vector<double> nodes;
    if (j.contains("sigma")) nodes.push_back(number(j.at("sigma"), "sigma"));
    if (j.contains("tau")) nodes.push_back(number(j.at("tau"), "tau"));
    if (nodes.size() == 1) throw AdmissibilityError("sigma and tau must be given together");
    return nodes;
}

} // namespace detail

/// Builds a problem from its JSON description:
/// {"T", "weight": {"kind": "sin_pi" | "table" | "piecewise", ...},
///  "g": {"kind": "s2_1ms" | "table", ...}, "sigma", "tau" or "nodes"}.
inline Problem parse_problem(const json& j) {
    if (!j.is_object()) throw AdmissibilityError("problem file: top level must be an object");
    const double T = detail::number(detail::require(j, "T", "problem"), "T");
    if (!(T > 0.0)) throw AdmissibilityError("problem: T must be positive");
    const auto nodes = detail::problem_nodes(j);

    const json& wj = detail::require(j, "weight", "problem");
    const std::string wkind = detail::require(wj, "kind", "weight").get<std::string>();
    auto weight = [&]() -> WeightSpec {
        if (wkind == "sin_pi") return WeightSpec::sin_pi(T, nodes);
        if (wkind == "table")
            return WeightSpec::table(T, detail::number_array(detail::require(wj, "t", "weight"), "weight.t"),
                                     detail::number_array(detail::require(wj, "a", "weight"), "weight.a"), nodes);
        if (wkind == "piecewise") {
            const auto pnodes = wj.contains("nodes") ? detail::number_array(wj.at("nodes"), "weight.nodes") : nodes;
            const json& segs = detail::require(wj, "segments", "weight");
            if (!segs.is_array()) throw AdmissibilityError("weight.segments must be an array");
            std::vector<WeightSpec::Fn> pieces;
            for (std::size_t i = 0; i < segs.size(); ++i)
                pieces.push_back(detail::segment_function(segs[i], "weight.segments[" + std::to_string(i) + "]"));
            return WeightSpec::piecewise(T, pnodes, std::move(pieces));
        }
        throw AdmissibilityError("weight: unknown kind '" + wkind + "' (sin_pi, table, piecewise)");
    }();

    const json& gj = detail::require(j, "g", "problem");
    const std::string gkind = detail::require(gj, "kind", "g").get<std::string>();
    auto g = [&]() -> Nonlinearity {
        if (gkind == "s2_1ms") return Nonlinearity::s2_1ms();
        if (gkind == "table")
            return Nonlinearity::table(detail::number_array(detail::require(gj, "s", "g"), "g.s"),
                                       detail::number_array(detail::require(gj, "g", "g"), "g.g"));
        throw AdmissibilityError("g: unknown kind '" + gkind + "' (s2_1ms, table)");
    }();

    Problem p{j.value("name", wkind + "/" + gkind), std::move(weight), std::move(g), j};
    p.weight.validate();
    p.g.validate();
    return p;
}

inline Problem parse_problem_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw AdmissibilityError(std::string("problem file: malformed JSON: ") + e.what());
    }
    return parse_problem(j);
}

inline Problem load_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw AdmissibilityError("problem file: cannot read '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_problem_text(ss.str());
}

/// a = sin(pi t) on [0,3], g = s^2 (1-s).
inline json builtin_problem_json() {
    return json{{"name", "sin_pi_two_humps"}, {"T", 3.0}, {"weight", {{"kind", "sin_pi"}}}, {"g", {{"kind", "s2_1ms"}}},
                {"sigma", 1.0}, {"tau", 2.0}};
}

// ---------------------------------------------------------------------------
// provenance

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

/// Config plus tool version; the hash covers the canonical dump of config.
inline json make_provenance(const json& config) {
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(fnv1a64(config.dump())));
    return json{{"tool", tool_version}, {"config_hash", hex}, {"config", config}};
}

/// One-line form for CSV headers.
inline std::string provenance_line(const json& prov) {
    return std::string(tool_version) + " config_hash=" + prov.at("config_hash").get<std::string>()
           + " config=" + prov.at("config").dump();
}

inline json tolerances_json(const SolverConfig& c) {
    return json{{"rtol", c.shoot.integrator.rel_tol},
                {"atol", c.shoot.integrator.abs_tol},
                {"refine_bound", c.shoot.refine_bound},
                {"exit_refine_bound", c.shoot.exit_refine_bound},
                {"break_tol", c.shoot.break_tol},
                {"refine_rtol", c.refine_integrator.rel_tol},
                {"refine_atol", c.refine_integrator.abs_tol},
                {"refine_tol", c.refine_tol},
                {"merge_tol", c.merge_tol},
                {"fd_h", c.fd_h}};
}

// ---------------------------------------------------------------------------
// solutions

inline json solution_json(const BvpSolution& s) {
    return json{{"bc", s.bc.name()},
                {"lambda", s.p.lambda},
                {"mu", s.p.mu},
                {"kappa", s.kappa},
                {"u0", s.u0()},
                {"du0", s.du0()},
                {"uT", s.uT()},
                {"duT", s.duT()},
                {"bands", {s.band_index_left, s.band_index_right}},
                {"residuals",
                 {{"eq", s.residuals.equation},
                  {"eq_scaled", s.residuals.equation_scaled},
                  {"bcL", s.residuals.bc_left},
                  {"bcR", s.residuals.bc_right}}},
                {"u_min", s.residuals.u_min},
                {"u_max", s.residuals.u_max}};
}

inline json solutions_json(const std::vector<BvpSolution>& sols, const json& provenance) {
    json arr = json::array();
    for (const auto& s : sols) arr.push_back(solution_json(s));
    return json{{"provenance", provenance}, {"solutions", arr}};
}

// ---------------------------------------------------------------------------
// sweeps

inline json sweep_summary_json(const SweepResult& r, const json& provenance) {
    json branches = json::array();
    for (const auto& b : r.branches) {
        json tags = json::array();
        for (const auto& t : b.tags) {
            json jt{{"kind", to_string(t.kind)}, {"mu", t.mu}, {"u0", t.u0}, {"point", t.index}};
            if (t.kind == SingularKind::pitchfork_candidate) jt["symmetric_weight"] = t.symmetric_weight;
            tags.push_back(jt);
        }
        double lo = b.points.empty() ? 0.0 : b.points.front().mu, hi = lo;
        for (const auto& p : b.points) {
            lo = std::min(lo, p.mu);
            hi = std::max(hi, p.mu);
        }
        branches.push_back(json{{"id", b.id},
                                {"trivial", b.trivial},
                                {"closed", b.closed},
                                {"fragile", b.fragile},
                                {"points", b.points.size()},
                                {"mu_min", lo},
                                {"mu_max", hi},
                                {"tags", tags}});
    }
    json window = nullptr;
    if (const auto w = detect_existence_window(r))
        window = json{{"m0", w->m0}, {"m1", w->m1}, {"truncated_low", w->truncated_low},
                      {"truncated_high", w->truncated_high}};
    json counts = json::array();
    for (const auto& [m, c] : solution_counts(r)) counts.push_back({m, c});
    std::size_t closed = 0;
    for (const auto* b : r.nontrivial()) closed += b->closed ? 1 : 0;
    return json{{"provenance", provenance},
                {"parameter", r.config.parameter == SweepParameter::mu ? "mu" : "lambda"},
                {"fixed", r.config.fixed},
                {"range", {r.config.min, r.config.max}},
                {"n_steps", r.config.n_steps},
                {"bc", r.config.bc.name()},
                {"branches", branches},
                {"closed_branches", closed},
                {"existence_window", window},
                {"counts", counts},
                {"log", r.log}};
}

} // namespace indefshoot
