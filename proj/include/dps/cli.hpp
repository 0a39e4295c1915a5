#pragma once

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dps/cache.hpp"
#include "dps/config.hpp"
#include "dps/io.hpp"
#include "dps/spectrum.hpp"

namespace dps::cli {

inline constexpr const char* kVersion = "0.1.0";

namespace detail {

inline std::string stamp_comment(const std::string& hash) {
    return std::string("# dps ") + kVersion + " config " + hash + "\n";
}

inline std::string svg_stamp(const std::string& hash) {
    return std::string("<!-- dps ") + kVersion + " config " + hash + " -->\n";
}

inline nlohmann::json report_header(const std::string& hash) {
    return {{"version", kVersion}, {"config_hash", hash}};
}

inline nlohmann::json solve_result_json(const dps::SolveResult& r) {
    return {{"energy", r.energy},
            {"residual", r.grad_norm},
            {"nontrivial", r.nontrivial},
            {"positive_interior", r.positive_interior},
            {"on_nehari", r.on_nehari},
            {"iterations", r.iterations},
            {"converged", r.converged},
            {"note", r.note}};
}

inline nlohmann::json picone_json(const dps::PiconeReport& p) {
    return {{"lhs", p.lhs},           {"rhs", p.rhs},       {"lhs_p", p.lhs_p},
            {"lhs_q", p.lhs_q},       {"rhs_p", p.rhs_p},   {"rhs_q", p.rhs_q},
            {"margin", p.margin},     {"rel_tol", p.rel_tol}, {"satisfied", p.satisfied}};
}

inline std::filesystem::path out_path(const RunConfig& cfg, const char* name) {
    return std::filesystem::path(cfg.out_dir) / name;
}

} // namespace detail

inline int cmd_eig(const RunConfig& cfg) {
    ContextHandle h = acquire_context(cfg, kVersion);
    std::cerr << (h.from_cache ? "eigen context: cache hit\n" : "eigen context: computed\n");
    nlohmann::json j = detail::report_header(h.hash);
    j["lambda1_ap"] = {{"lambda", h.ctx.eig_pa.lambda},
                       {"residual", h.ctx.eig_pa.residual},
                       {"iterations", h.ctx.eig_pa.iterations},
                       {"restarts_used", h.ctx.eig_pa.restarts_used}};
    j["lambda1_q"] = {{"lambda", h.ctx.eig_q.lambda},
                      {"residual", h.ctx.eig_q.residual},
                      {"iterations", h.ctx.eig_q.iterations},
                      {"restarts_used", h.ctx.eig_q.restarts_used}};
    atomic_write(detail::out_path(cfg, "eig.json"), j.dump(2) + "\n");
    atomic_write(detail::out_path(cfg, "phi_p.csv"), detail::stamp_comment(h.hash) + field_csv(h.ctx.eig_pa.phi));
    atomic_write(detail::out_path(cfg, "phi_q.csv"), detail::stamp_comment(h.hash) + field_csv(h.ctx.eig_q.phi));
    std::cout << "lambda1_ap " << fmt_double(h.ctx.eig_pa.lambda) << "  lambda1_q " << fmt_double(h.ctx.eig_q.lambda)
              << "\n";
    return 0;
}

inline int cmd_constants(const RunConfig& cfg) {
    ContextHandle h = acquire_context(cfg, kVersion);
    const SpectrumConstants& c = h.ctx.consts;
    bool ordered = c.s_tilde_plus >= c.lambda1_ap && c.s_tilde_minus >= c.lambda1_q &&
                   c.s_star_minus <= c.s_star && c.s_star <= c.s_star_plus;
    if (!ordered) {
        std::cerr << "constants violate the ordering invariants; refusing to write\n";
        return 1;
    }
    nlohmann::json j = detail::report_header(h.hash);
    j["constants"] = dps::detail::constants_to_json(c);
    j["li"] = dps::detail::li_to_json(h.ctx.li);
    atomic_write(detail::out_path(cfg, "constants.json"), j.dump(2) + "\n");
    std::cout << "lambda1_ap " << fmt_double(c.lambda1_ap) << "  lambda1_q " << fmt_double(c.lambda1_q)
              << "  s_tilde_plus " << fmt_double(c.s_tilde_plus) << "  li " << (h.ctx.li.holds ? "holds" : "fails")
              << "\n";
    return 0;
}

inline int cmd_solve(const RunConfig& cfg, double alpha, double beta) {
    ContextHandle h = acquire_context(cfg, kVersion);
    Detection det = detect_existence(h.ctx, alpha, beta, cfg.solver);
    nlohmann::json j = detail::report_header(h.hash);
    j["alpha"] = alpha;
    j["beta"] = beta;
    j["seed"] = cfg.solver.seed;
    j["found"] = det.found == 1;
    j["numeric_state"] = det.found; // 1 evidence, 0 none, -1 solver trouble
    j["nontrivial"] = det.best ? det.best->nontrivial : false;
    j["manifold_empty"] = det.manifold_empty;
    j["notes"] = det.notes;
    j["theory"] = {{"verdict", to_string(classify_theoretical(alpha, beta, h.ctx.consts, h.ctx.li).verdict)},
                   {"source", classify_theoretical(alpha, beta, h.ctx.consts, h.ctx.li).source}};
    if (det.best) j["result"] = detail::solve_result_json(*det.best);
    if (det.picone) j["picone"] = detail::picone_json(*det.picone);
    atomic_write(detail::out_path(cfg, "solve.json"), j.dump(2) + "\n");
    if (det.best)
        atomic_write(detail::out_path(cfg, "solution.csv"), detail::stamp_comment(h.hash) + field_csv(det.best->u));
    std::cout << "(" << fmt_double(alpha) << ", " << fmt_double(beta) << "): "
              << (det.found == 1 ? "positive solution found" : det.found == 0 ? "no solution found" : "solver trouble")
              << (det.best ? "  energy " + fmt_double(det.best->energy) : std::string()) << "\n";
    return det.found == -1 ? 1 : 0;
}

inline int cmd_curve(const RunConfig& cfg) {
    ContextHandle h = acquire_context(cfg, kVersion);
    double smin = cfg.curve.s_min, smax = cfg.curve.s_max;
    if (std::isnan(smin)) smin = h.ctx.consts.s_star - 2.0;
    if (std::isnan(smax)) smax = std::isfinite(h.ctx.consts.s_star_plus) ? h.ctx.consts.s_star_plus + 2.0
                                                                         : h.ctx.consts.s_star + 4.0;
    int count = cfg.curve.count;
    if (!(smin < smax) && count > 1) throw ConfigError("curve: empty s-range");
    std::vector<double> ss;
    for (int k = 0; k < count; ++k)
        ss.push_back(count == 1 ? smin : smin + (smax - smin) * k / (count - 1));

    CurveOpts opts;
    opts.tol = cfg.curve_tol;
    opts.solver = cfg.solver;
    CurveTrace trace = trace_curve(h.ctx, ss, opts);

    nlohmann::json j = detail::report_header(h.hash);
    j["lambda_monotone"] = trace.lambda_monotone;
    j["alpha_monotone"] = trace.alpha_monotone;
    j["max_lambda_violation"] = trace.max_lambda_violation;
    j["max_alpha_violation"] = trace.max_alpha_violation;
    nlohmann::json pts = nlohmann::json::array();
    int failures = 0;
    for (const CurvePoint& p : trace.points) {
        pts.push_back({{"s", p.s},
                       {"lambda_star", p.lambda_star},
                       {"alpha", p.lambda_star + p.s},
                       {"bracket_width", num_json(p.bracket_width)},
                       {"certificate", p.certificate},
                       {"probes", p.probes},
                       {"failed", p.failed}});
        if (p.failed) ++failures;
    }
    j["points"] = pts;
    atomic_write(detail::out_path(cfg, "curve.json"), j.dump(2) + "\n");
    atomic_write(detail::out_path(cfg, "curve.csv"), detail::stamp_comment(h.hash) + curve_csv(trace));
    atomic_write(detail::out_path(cfg, "curve.svg"), detail::svg_stamp(h.hash) + curve_svg(trace, h.ctx.consts));
    std::cout << "curve: " << trace.points.size() << " points, " << failures << " failures, lambda* monotone "
              << (trace.lambda_monotone ? "yes" : "no") << "\n";
    return failures == static_cast<int>(trace.points.size()) && !trace.points.empty() ? 1 : 0;
}

inline int cmd_map(const RunConfig& cfg, int jobs, bool no_numeric) {
    ContextHandle h = acquire_context(cfg, kVersion);
    const SpectrumConstants& c = h.ctx.consts;
    double amin = cfg.map.alpha_min, amax = cfg.map.alpha_max;
    double bmin = cfg.map.beta_min, bmax = cfg.map.beta_max;
    double wide = std::isfinite(c.s_tilde_plus) ? std::max(1.0, c.s_tilde_plus - c.lambda1_ap) : 2.0;
    double tall = std::max(1.0, c.s_star);
    if (std::isnan(amin)) amin = c.lambda1_ap - 0.6 * wide;
    if (std::isnan(amax)) amax = (std::isfinite(c.s_tilde_plus) ? c.s_tilde_plus : c.lambda1_ap) + 0.6 * wide;
    if (std::isnan(bmin)) bmin = c.lambda1_q - 0.75 * tall;
    if (std::isnan(bmax)) bmax = c.lambda1_q + 1.25 * tall;

    RegionMap map = region_map(h.ctx, amin, amax, bmin, bmax, cfg.map.resolution, !no_numeric, jobs, cfg.solver);

    nlohmann::json j = detail::report_header(h.hash);
    j["compared"] = map.compared;
    j["disagreements"] = map.disagreements;
    nlohmann::json bad = nlohmann::json::array();
    for (const MapCell& cell : map.cells) {
        if (!cell.compared || cell.agree) continue;
        bad.push_back({{"alpha", cell.alpha},
                       {"beta", cell.beta},
                       {"theory", to_string(cell.theory.verdict)},
                       {"source", cell.theory.source},
                       {"numeric_found", cell.numeric_found}});
    }
    j["cells"] = bad;
    atomic_write(detail::out_path(cfg, "disagreements.json"), j.dump(2) + "\n");
    atomic_write(detail::out_path(cfg, "map.csv"), detail::stamp_comment(h.hash) + map_csv(map));
    atomic_write(detail::out_path(cfg, "map.svg"), detail::svg_stamp(h.hash) + map_svg(map));
    std::cout << "map: " << map.cells.size() << " cells, compared " << map.compared << ", disagreements "
              << map.disagreements << "\n";
    return 0;
}

inline int run(int argc, const char* const* argv) {
    CLI::App app{"numerical explorer for the two-parameter double-phase eigenvalue problem"};
    app.set_version_flag("--version", kVersion);
    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    int jobs = 1;
    double alpha = 0.0, beta = 0.0;
    bool no_numeric = false;
    app.add_option("--config", config_path, "JSON configuration file");
    app.add_option("--out", out_dir, "output directory (overrides config)");
    auto* seed_opt = app.add_option("--seed", seed, "seed for eigen and solver randomness");
    app.add_option("--jobs", jobs, "worker threads for the map sweep")->check(CLI::PositiveNumber);
    app.require_subcommand(1);

    CLI::App* sub_eig = app.add_subcommand("eig", "compute the two first eigenpairs");
    CLI::App* sub_constants = app.add_subcommand("constants", "threshold constants and alignment report");
    CLI::App* sub_solve = app.add_subcommand("solve", "search for a positive solution at one (alpha, beta)");
    sub_solve->add_option("--alpha", alpha, "p-side parameter")->required();
    sub_solve->add_option("--beta", beta, "q-side parameter")->required();
    CLI::App* sub_curve = app.add_subcommand("curve", "trace the critical curve lambda*(s)");
    CLI::App* sub_map = app.add_subcommand("map", "classify an (alpha, beta) rectangle");
    sub_map->add_flag("--no-numeric", no_numeric, "theory verdicts only");
    for (CLI::App* sub : {sub_eig, sub_constants, sub_solve, sub_curve, sub_map}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        RunConfig cfg;
        if (!config_path.empty()) {
            std::string text;
            try {
                text = read_file(config_path);
            } catch (const std::exception& e) {
                throw ConfigError(e.what());
            }
            cfg = parse_config(text);
        }
        if (seed_opt->count() > 0) {
            cfg.eigen.seed = seed;
            cfg.solver.seed = seed;
        }
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        validate_config(cfg);

        if (sub_eig->parsed()) return cmd_eig(cfg);
        if (sub_constants->parsed()) return cmd_constants(cfg);
        if (sub_solve->parsed()) return cmd_solve(cfg, alpha, beta);
        if (sub_curve->parsed()) return cmd_curve(cfg);
        if (sub_map->parsed()) return cmd_map(cfg, jobs, no_numeric);
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace dps::cli
