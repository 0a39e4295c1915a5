#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <string>

#include <json.hpp>

#include "dps/energy.hpp"
#include "dps/errors.hpp"

namespace dps {

// NaN means "derive from the spectrum constants at run time".
struct CurveRange {
    double s_min = std::numeric_limits<double>::quiet_NaN();
    double s_max = std::numeric_limits<double>::quiet_NaN();
    int count = 15;
};

struct MapRange {
    double alpha_min = std::numeric_limits<double>::quiet_NaN();
    double alpha_max = std::numeric_limits<double>::quiet_NaN();
    double beta_min = std::numeric_limits<double>::quiet_NaN();
    double beta_max = std::numeric_limits<double>::quiet_NaN();
    int resolution = 9;
};

struct RunConfig {
    int dim = 1;
    std::array<double, 2> extent = {1.0, 1.0};
    int nodes = 201;
    Exponents exps;
    WeightSpec weight = {WeightKind::Bump, 1.0, 0.5, 2.0, 0.5, {0.5, 0.5}};
    EigenOpts eigen;
    SolverOpts solver;
    double li_threshold = 1e-3;
    double curve_tol = 0.0; // 0 -> auto
    CurveRange curve;
    MapRange map;
    std::string out_dir = "out";
};

namespace detail {

template <class T>
T json_get(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        if (j.at(key).is_null()) return fallback;
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config field '") + key + "': " + e.what());
    }
}

inline double json_get_opt_double(const nlohmann::json& j, const char* key, double fallback) {
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    if (!j.at(key).is_number()) throw ConfigError(std::string("config field '") + key + "' must be a number or null");
    return j.at(key).get<double>();
}

inline const char* weight_kind_name(WeightKind k) {
    switch (k) {
        case WeightKind::Constant: return "constant";
        case WeightKind::Bump: return "bump";
        case WeightKind::Power: return "power";
    }
    return "constant";
}

inline WeightKind weight_kind_from(const std::string& s) {
    if (s == "constant") return WeightKind::Constant;
    if (s == "bump") return WeightKind::Bump;
    if (s == "power") return WeightKind::Power;
    throw ConfigError("unknown weight kind: " + s + " (expected constant | bump | power)");
}

} // namespace detail

inline nlohmann::json to_json(const RunConfig& c) {
    nlohmann::json j;
    j["dim"] = c.dim;
    j["extent"] = c.dim == 2 ? nlohmann::json{c.extent[0], c.extent[1]} : nlohmann::json{c.extent[0]};
    j["nodes"] = c.nodes;
    j["p"] = c.exps.p;
    j["q"] = c.exps.q;
    j["weight"] = {{"kind", detail::weight_kind_name(c.weight.kind)}, {"value", c.weight.value},
                   {"base", c.weight.base},  {"amplitude", c.weight.amplitude},
                   {"gamma", c.weight.gamma}, {"center", {c.weight.center[0], c.weight.center[1]}}};
    j["eigen"] = {{"tol", c.eigen.tol},
                  {"max_iters", c.eigen.max_iters},
                  {"restarts", c.eigen.restarts},
                  {"seed", c.eigen.seed}};
    j["solver"] = {{"seed", c.solver.seed},
                   {"restarts", c.solver.restarts},
                   {"max_iters", c.solver.max_iters},
                   {"descent_tol", c.solver.descent_tol},
                   {"residual_tol", c.solver.residual_tol},
                   {"armijo_c", c.solver.armijo_c},
                   {"backtrack", c.solver.backtrack},
                   {"initial_step", c.solver.initial_step},
                   {"exist_rel", c.solver.exist_rel},
                   {"sup_guard", c.solver.sup_guard}};
    j["li_threshold"] = c.li_threshold;
    j["curve_tol"] = c.curve_tol;
    j["curve"] = {{"s_min", std::isnan(c.curve.s_min) ? nlohmann::json() : nlohmann::json(c.curve.s_min)},
                  {"s_max", std::isnan(c.curve.s_max) ? nlohmann::json() : nlohmann::json(c.curve.s_max)},
                  {"count", c.curve.count}};
    j["map"] = {{"alpha_min", std::isnan(c.map.alpha_min) ? nlohmann::json() : nlohmann::json(c.map.alpha_min)},
                {"alpha_max", std::isnan(c.map.alpha_max) ? nlohmann::json() : nlohmann::json(c.map.alpha_max)},
                {"beta_min", std::isnan(c.map.beta_min) ? nlohmann::json() : nlohmann::json(c.map.beta_min)},
                {"beta_max", std::isnan(c.map.beta_max) ? nlohmann::json() : nlohmann::json(c.map.beta_max)},
                {"resolution", c.map.resolution}};
    j["out_dir"] = c.out_dir;
    return j;
}

inline RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig c;
    c.dim = detail::json_get(j, "dim", c.dim);
    if (c.dim != 1 && c.dim != 2) throw ConfigError("dim must be 1 or 2");
    if (j.contains("extent")) {
        const auto& e = j.at("extent");
        if (e.is_number()) {
            c.extent[0] = c.extent[1] = e.get<double>();
        } else if (e.is_array() && !e.empty() && e.size() <= 2) {
            c.extent[0] = e.at(0).get<double>();
            c.extent[1] = e.size() == 2 ? e.at(1).get<double>() : c.extent[0];
        } else {
            throw ConfigError("extent must be a number or an array of one or two numbers");
        }
    }
    c.nodes = detail::json_get(j, "nodes", c.nodes);
    c.exps.p = detail::json_get(j, "p", c.exps.p);
    c.exps.q = detail::json_get(j, "q", c.exps.q);
    if (j.contains("weight")) {
        const auto& w = j.at("weight");
        if (!w.is_object()) throw ConfigError("weight must be an object");
        c.weight.kind = detail::weight_kind_from(detail::json_get<std::string>(w, "kind", "bump"));
        c.weight.value = detail::json_get(w, "value", c.weight.value);
        c.weight.base = detail::json_get(w, "base", c.weight.base);
        c.weight.amplitude = detail::json_get(w, "amplitude", c.weight.amplitude);
        c.weight.gamma = detail::json_get(w, "gamma", c.weight.gamma);
        if (w.contains("center")) {
            const auto& ctr = w.at("center");
            if (ctr.is_number()) {
                c.weight.center[0] = c.weight.center[1] = ctr.get<double>();
            } else if (ctr.is_array() && !ctr.empty() && ctr.size() <= 2) {
                c.weight.center[0] = ctr.at(0).get<double>();
                c.weight.center[1] = ctr.size() == 2 ? ctr.at(1).get<double>() : c.weight.center[0];
            } else {
                throw ConfigError("weight.center must be a number or an array of one or two numbers");
            }
        }
    }
    if (j.contains("eigen")) {
        const auto& e = j.at("eigen");
        c.eigen.tol = detail::json_get(e, "tol", c.eigen.tol);
        c.eigen.max_iters = detail::json_get(e, "max_iters", c.eigen.max_iters);
        c.eigen.restarts = detail::json_get(e, "restarts", c.eigen.restarts);
        c.eigen.seed = detail::json_get(e, "seed", c.eigen.seed);
    }
    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        c.solver.seed = detail::json_get(s, "seed", c.solver.seed);
        c.solver.restarts = detail::json_get(s, "restarts", c.solver.restarts);
        c.solver.max_iters = detail::json_get(s, "max_iters", c.solver.max_iters);
        c.solver.descent_tol = detail::json_get(s, "descent_tol", c.solver.descent_tol);
        c.solver.residual_tol = detail::json_get(s, "residual_tol", c.solver.residual_tol);
        c.solver.armijo_c = detail::json_get(s, "armijo_c", c.solver.armijo_c);
        c.solver.backtrack = detail::json_get(s, "backtrack", c.solver.backtrack);
        c.solver.initial_step = detail::json_get(s, "initial_step", c.solver.initial_step);
        c.solver.exist_rel = detail::json_get(s, "exist_rel", c.solver.exist_rel);
        c.solver.sup_guard = detail::json_get(s, "sup_guard", c.solver.sup_guard);
    }
    c.li_threshold = detail::json_get(j, "li_threshold", c.li_threshold);
    c.curve_tol = detail::json_get(j, "curve_tol", c.curve_tol);
    if (j.contains("curve")) {
        const auto& cv = j.at("curve");
        c.curve.s_min = detail::json_get_opt_double(cv, "s_min", c.curve.s_min);
        c.curve.s_max = detail::json_get_opt_double(cv, "s_max", c.curve.s_max);
        c.curve.count = detail::json_get(cv, "count", c.curve.count);
    }
    if (j.contains("map")) {
        const auto& m = j.at("map");
        c.map.alpha_min = detail::json_get_opt_double(m, "alpha_min", c.map.alpha_min);
        c.map.alpha_max = detail::json_get_opt_double(m, "alpha_max", c.map.alpha_max);
        c.map.beta_min = detail::json_get_opt_double(m, "beta_min", c.map.beta_min);
        c.map.beta_max = detail::json_get_opt_double(m, "beta_max", c.map.beta_max);
        c.map.resolution = detail::json_get(m, "resolution", c.map.resolution);
    }
    c.out_dir = detail::json_get<std::string>(j, "out_dir", c.out_dir);
    return c;
}

inline RunConfig parse_config(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be an object");
    return config_from_json(j);
}

// Structural validation; throws ConfigError on any violation.
inline void validate_config(const RunConfig& c) {
    try {
        Grid g = build_grid(c.dim, c.extent, c.nodes);
        validate_exponents(c.exps, c.dim);
        validate_weight(c.weight, g);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    if (c.eigen.tol <= 0 || c.eigen.max_iters <= 0 || c.eigen.restarts < 1)
        throw ConfigError("eigen options must be positive (tol, max_iters, restarts)");
    if (c.solver.max_iters <= 0 || c.solver.descent_tol <= 0 || c.solver.residual_tol <= 0 ||
        c.solver.backtrack <= 0 || c.solver.backtrack >= 1 || c.solver.armijo_c <= 0 || c.solver.initial_step <= 0)
        throw ConfigError("solver options out of range");
    if (c.li_threshold <= 0) throw ConfigError("li_threshold must be positive");
    if (c.curve.count < 1) throw ConfigError("curve.count must be at least 1");
    if (c.map.resolution < 2) throw ConfigError("map.resolution must be at least 2");
}

// The part of the configuration that determines every computed number,
// serialized canonically for hashing.
inline std::string numeric_fingerprint(const RunConfig& c) {
    nlohmann::json j = to_json(c);
    j.erase("out_dir");
    j.erase("curve");
    j.erase("map");
    j.erase("curve_tol");
    return j.dump();
}

} // namespace dps
