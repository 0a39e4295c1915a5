#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "dps/energy.hpp"
#include "dps/nehari.hpp"

namespace dps {

enum class RegionVerdict {
    ExistsGlobalMin,
    ExistsGroundStatePos,
    ExistsGroundStateNeg,
    ExistsOnCurve,
    NotExists,
    UnknownTheory,
};

inline const char* to_string(RegionVerdict v) {
    switch (v) {
        case RegionVerdict::ExistsGlobalMin: return "ExistsGlobalMin";
        case RegionVerdict::ExistsGroundStatePos: return "ExistsGroundStatePos";
        case RegionVerdict::ExistsGroundStateNeg: return "ExistsGroundStateNeg";
        case RegionVerdict::ExistsOnCurve: return "ExistsOnCurve";
        case RegionVerdict::NotExists: return "NotExists";
        case RegionVerdict::UnknownTheory: return "UnknownTheory";
    }
    return "UnknownTheory";
}

inline bool verdict_claims_existence(RegionVerdict v) {
    return v == RegionVerdict::ExistsGlobalMin || v == RegionVerdict::ExistsGroundStatePos ||
           v == RegionVerdict::ExistsGroundStateNeg || v == RegionVerdict::ExistsOnCurve;
}

struct RegionClass {
    RegionVerdict verdict = RegionVerdict::UnknownTheory;
    std::string source; // which rule fired
};

// Exact case analysis of the parameter plane from the threshold constants and
// the eigenfunction-alignment diagnostic. Cells the theory leaves open come
// back as UnknownTheory.
inline RegionClass classify_theoretical(double alpha, double beta, const SpectrumConstants& c, const LIReport& li) {
    double lp = c.lambda1_ap, lq = c.lambda1_q;
    bool at_corner = alpha == lp && beta == lq;
    if (at_corner) {
        if (li.holds) return {RegionVerdict::NotExists, "resonant-corner-independent"};
        return {RegionVerdict::ExistsOnCurve, "resonant-corner-aligned"};
    }
    if (alpha <= lp && beta <= lq) return {RegionVerdict::NotExists, "below-both-eigenvalues"};
    if (alpha < lp && beta > lq) return {RegionVerdict::ExistsGlobalMin, "negative-global-minimum"};
    if (alpha > lp && beta < lq) return {RegionVerdict::ExistsGroundStatePos, "nehari-positive-branch"};
    // remaining: alpha >= lp, beta >= lq, not the corner
    if (!li.holds) {
        if (alpha > lp && beta > lq) return {RegionVerdict::NotExists, "aligned-eigenfunctions"};
        return {RegionVerdict::UnknownTheory, "aligned-boundary-ray"};
    }
    if (beta == lq) {
        // alpha > lp here
        if (alpha < c.s_tilde_plus) return {RegionVerdict::ExistsGroundStatePos, "nehari-at-resonance"};
        if (c.weight_inf_positive) return {RegionVerdict::NotExists, "resonance-strip-tail"};
        return {RegionVerdict::UnknownTheory, "degenerate-weight-open"};
    }
    if (beta > lq && alpha - beta >= c.s_star_plus) return {RegionVerdict::NotExists, "wedge-beyond-curve"};
    return {RegionVerdict::UnknownTheory, "between-thresholds"};
}

// Picone-type certificate: for a genuine positive solution u and a
// nonnegative test field phi,
//   int (alpha a u^(p-q) + beta) phi^q  <=  int a |grad phi|^q |grad u|^(p-q) + int |grad phi|^q.
// Violation certifies that u is not a positive solution.
struct PiconeReport {
    double lhs = 0.0, rhs = 0.0;
    double lhs_p = 0.0, lhs_q = 0.0; // weighted / unweighted pieces of the left side
    double rhs_p = 0.0, rhs_q = 0.0;
    double margin = 0.0;             // rhs - lhs
    double rel_tol = 0.0;
    bool satisfied = false;
};

inline PiconeReport picone_certificate(const Field& u, const Field& phi, const SpectrumContext& ctx, double alpha,
                                       double beta, double rel_tol = 1e-8) {
    if (!(u.grid == ctx.grid) || !(phi.grid == ctx.grid))
        throw std::invalid_argument("picone_certificate: grid mismatch");
    if (!detail::positive_interior(u))
        throw std::invalid_argument("picone_certificate: u must be positive at interior nodes");
    const Grid& g = ctx.grid;
    double p = ctx.exps.p, q = ctx.exps.q;
    int spc = detail::samples_per_cell(g.dim);
    double vol = g.cell_volume();
    double su[9], sp[9];
    double lhs_p = 0.0, lhs_q = 0.0;
    for (std::size_t c = 0; c < g.cell_count(); ++c) {
        detail::cell_sample_values(g, u.v, c, su);
        detail::cell_sample_values(g, phi.v, c, sp);
        for (int k = 0; k < spc; ++k) {
            double qw = g.dim == 1 ? detail::kSimpson3[k] : detail::kSimpson3[k % 3] * detail::kSimpson3[k / 3];
            double a = ctx.table.at_samples[c * static_cast<std::size_t>(spc) + static_cast<std::size_t>(k)];
            double uu = su[k] > 0.0 ? su[k] : 0.0;
            double ph = sp[k] > 0.0 ? sp[k] : 0.0;
            double phq = detail::pow_abs(ph, q);
            lhs_p += qw * a * std::pow(uu, p - q) * phq;
            lhs_q += qw * phq;
        }
    }
    lhs_p *= vol * alpha;
    lhs_q *= vol * beta;

    CellField gu = gradient(u), gp = gradient(phi);
    double rhs_p = 0.0, rhs_q = 0.0;
    int comps = gu.components;
    for (std::size_t c = 0; c < g.cell_count(); ++c) {
        double nu2 = 0.0, np2 = 0.0;
        for (int d = 0; d < comps; ++d) {
            double xu = gu.v[c * static_cast<std::size_t>(comps) + static_cast<std::size_t>(d)];
            double xp = gp.v[c * static_cast<std::size_t>(comps) + static_cast<std::size_t>(d)];
            nu2 += xu * xu;
            np2 += xp * xp;
        }
        double gun = std::sqrt(nu2), gpn = std::sqrt(np2);
        double gpq = detail::pow_abs(gpn, q);
        rhs_p += ctx.table.at_centers[c] * gpq * std::pow(gun, p - q);
        rhs_q += gpq;
    }
    rhs_p *= vol;
    rhs_q *= vol;

    PiconeReport r;
    r.lhs_p = lhs_p;
    r.lhs_q = lhs_q;
    r.rhs_p = rhs_p;
    r.rhs_q = rhs_q;
    r.lhs = lhs_p + lhs_q;
    r.rhs = rhs_p + rhs_q;
    r.margin = r.rhs - r.lhs;
    r.rel_tol = rel_tol;
    r.satisfied = r.lhs <= r.rhs + rel_tol * (std::fabs(r.lhs) + std::fabs(r.rhs));
    return r;
}

// Numerical existence evidence at one (alpha, beta).
struct Detection {
    int found = 0; // 1 = evidence of a positive solution, 0 = none, -1 = solver trouble
    std::optional<SolveResult> best;
    std::optional<PiconeReport> picone;
    bool manifold_empty = false;
    std::string notes;
};

namespace detail {

inline bool gate_candidate(SolveResult& cand, const SpectrumContext& ctx, double alpha, double beta,
                           std::optional<PiconeReport>& rep, std::string& notes) {
    if (!cand.converged || !cand.nontrivial) return false;
    if (!cand.positive_interior) {
        notes += "candidate rejected: not positive at every interior node; ";
        return false;
    }
    PiconeReport pr = picone_certificate(cand.u, ctx.eig_q.phi, ctx, alpha, beta, 1e-8);
    if (!pr.satisfied) {
        notes += "candidate rejected: comparison certificate violated; ";
        return false;
    }
    rep = pr;
    return true;
}

} // namespace detail

// Run both solvers and accept a candidate only if it converged, is
// nontrivial, positive, and passes the certificate. warm, when given, seeds a
// cheap constrained descent first.
inline Detection detect_existence(const SpectrumContext& ctx, double alpha, double beta, const SolverOpts& opts,
                                  const Field* warm = nullptr) {
    Detection det;
    bool trouble = false;
    auto consider = [&](SolveResult&& cand) {
        std::optional<PiconeReport> rep;
        if (detail::gate_candidate(cand, ctx, alpha, beta, rep, det.notes)) {
            if (!det.best || cand.energy < det.best->energy) {
                det.best = std::move(cand);
                det.picone = rep;
            }
        }
    };

    if (warm && !warm->all_zero()) {
        double h = H_alpha(*warm, ctx, alpha);
        double g = G_beta(*warm, ctx, beta);
        if (h * g < 0.0) {
            auto c = detail::fiber_descent(*warm, ctx, alpha, beta, opts);
            if (c) {
                SolveResult res =
                    detail::finish_solution(std::move(c->u), ctx, alpha, beta, c->iterations, false, true, "warm");
                consider(std::move(res));
                if (det.best) {
                    det.found = 1;
                    return det;
                }
            }
        }
    }

    try {
        consider(minimize_global(ctx, alpha, beta, opts));
    } catch (const SolverError& e) {
        trouble = true;
        det.notes += std::string("free minimization failed: ") + e.what() + "; ";
    }
    try {
        consider(nehari_ground_state(ctx, alpha, beta, opts));
    } catch (const ManifoldEmpty&) {
        det.manifold_empty = true;
        det.notes += "constraint set empty; ";
    } catch (const SolverError& e) {
        trouble = true;
        det.notes += std::string("constrained minimization failed: ") + e.what() + "; ";
    }

    if (det.best) det.found = 1;
    else det.found = trouble ? -1 : 0;
    return det;
}

// One point of the critical curve in the shifted variable s = alpha - beta.
struct CurvePoint {
    double s = 0.0;
    double lambda_star = 0.0;  // certified lower end of the final bracket
    double bracket_width = 0.0;
    std::string certificate;   // "solve" | "truncated" | "theory-floor" | "failed: ..."
    int probes = 0;
    bool failed = false;
};

struct CurveOpts {
    double tol = 0.0;         // 0 -> 1e-3 * (s_tilde_plus - lambda1_q + 1)
    double cap_factor = 1e3;  // upper-bound cap = cap_factor * lambda1_ap
    SolverOpts solver;
};

namespace detail {

inline double curve_tol(const SpectrumContext& ctx, const CurveOpts& opts) {
    if (opts.tol > 0.0) return opts.tol;
    double span = ctx.consts.s_tilde_plus - ctx.consts.lambda1_q;
    if (!std::isfinite(span) || span < 0.0) span = 0.0;
    return 1e-3 * (span + 1.0);
}

struct CurveState {
    CurvePoint point;
    std::optional<Field> evidence; // solution backing lambda_star, when numeric
};

// Bisection along the diagonal (nu + s, nu). Existence along the diagonal is
// downward-closed, so a yes/no bracket makes sense; probes are warm-started
// from the last accepted solution.
inline CurveState lambda_star_state(const SpectrumContext& ctx, double s, const CurveOpts& opts, double seed_lambda,
                                    const std::optional<Field>& seed_evidence, const std::string& seed_cert) {
    double tol = curve_tol(ctx, opts);
    double cap = opts.cap_factor * ctx.consts.lambda1_ap;
    CurveState st;
    st.point.s = s;

    double floor_lam = std::max(ctx.consts.lambda1_q, ctx.consts.lambda1_ap - s);
    double lam_yes = floor_lam;
    std::string cert = "theory-floor";
    std::optional<Field> evidence;
    int probes = 0;

    // A carried-in certified level can only raise the floor.
    if (seed_evidence && seed_lambda > lam_yes) {
        lam_yes = seed_lambda;
        cert = seed_cert;
        evidence = seed_evidence;
    }

    auto probe = [&](double nu) -> bool {
        ++probes;
        Detection det = detect_existence(ctx, nu + s, nu, opts.solver, evidence ? &*evidence : nullptr);
        if (det.found == 1) {
            evidence = det.best->u;
            return true;
        }
        return false;
    };

    double step = std::max(4.0 * tol, 0.0625 * (ctx.consts.s_tilde_plus - ctx.consts.lambda1_q));
    if (!std::isfinite(step) || step <= 0.0) step = std::max(4.0 * tol, 1.0);
    double lam_no = lam_yes + step;
    while (true) {
        if (lam_no > cap) {
            st.point.failed = true;
            st.point.certificate = "failed: no non-existence level found below the bisection cap";
            st.point.lambda_star = lam_yes;
            st.point.bracket_width = std::numeric_limits<double>::infinity();
            st.point.probes = probes;
            st.evidence = evidence;
            return st;
        }
        if (!probe(lam_no)) break;
        lam_yes = lam_no;
        cert = "solve";
        step *= 2.0;
        lam_no = lam_yes + step;
    }
    while (lam_no - lam_yes > tol && probes < 200) {
        double mid = 0.5 * (lam_yes + lam_no);
        if (probe(mid)) {
            lam_yes = mid;
            cert = "solve";
        } else {
            lam_no = mid;
        }
    }
    st.point.lambda_star = lam_yes;
    st.point.bracket_width = lam_no - lam_yes;
    st.point.certificate = cert;
    st.point.probes = probes;
    st.evidence = evidence;
    return st;
}

} // namespace detail

inline CurvePoint lambda_star(const SpectrumContext& ctx, double s, const CurveOpts& opts = {}) {
    detail::CurveState st = detail::lambda_star_state(ctx, s, opts, 0.0, std::nullopt, "");
    if (st.point.failed) throw SolverError("lambda_star: " + st.point.certificate);
    return st.point;
}

struct CurveTrace {
    std::vector<CurvePoint> points;
    bool lambda_monotone = true; // lambda* non-increasing within bracket slack
    bool alpha_monotone = true;  // lambda* + s non-decreasing within bracket slack
    double max_lambda_violation = 0.0;
    double max_alpha_violation = 0.0;
};

// Trace the curve over ascending s. Between consecutive points the certified
// level for the next diagonal is seeded by the monotone carryover
// lambda_k - (s' - s_k); when the previous solution dominates the seeded
// parameters, the capped auxiliary problem re-certifies it as a solution.
inline CurveTrace trace_curve(const SpectrumContext& ctx, const std::vector<double>& s_values, const CurveOpts& opts = {}) {
    CurveTrace trace;
    std::vector<double> ss = s_values;
    std::sort(ss.begin(), ss.end());
    std::optional<Field> carry_evidence;
    double carry_lambda = 0.0, carry_s = 0.0;
    bool have_carry = false;

    for (double s : ss) {
        double seed_lambda = 0.0;
        std::optional<Field> seed_evidence;
        std::string seed_cert;
        if (have_carry && carry_evidence) {
            double floor_next = std::max({ctx.consts.lambda1_q, ctx.consts.lambda1_ap - s,
                                          carry_lambda - (s - carry_s)});
            bool dominated = floor_next <= carry_lambda && floor_next + s <= carry_lambda + carry_s;
            if (dominated && floor_next > std::max(ctx.consts.lambda1_q, ctx.consts.lambda1_ap - s)) {
                try {
                    SolveResult tr = truncated_minimize(floor_next, s, *carry_evidence, ctx, opts.solver);
                    if (tr.converged && tr.nontrivial && tr.positive_interior) {
                        seed_lambda = floor_next;
                        seed_evidence = tr.u;
                        seed_cert = "truncated";
                    }
                } catch (const SolverError&) {
                    // carryover is an optimization; fall back to the plain floor
                }
            }
        }
        detail::CurveState st = detail::lambda_star_state(ctx, s, opts, seed_lambda, seed_evidence, seed_cert);
        if (!st.point.failed && st.evidence) {
            carry_evidence = st.evidence;
            carry_lambda = st.point.lambda_star;
            carry_s = s;
            have_carry = true;
        }
        trace.points.push_back(st.point);
    }

    const CurvePoint* prev = nullptr;
    for (const CurvePoint& pt : trace.points) {
        if (pt.failed) continue;
        if (prev) {
            double slack = prev->bracket_width + pt.bracket_width;
            double dl = pt.lambda_star - prev->lambda_star; // should be <= 0
            double da = (prev->lambda_star + prev->s) - (pt.lambda_star + pt.s); // should be <= 0
            trace.max_lambda_violation = std::max(trace.max_lambda_violation, dl);
            trace.max_alpha_violation = std::max(trace.max_alpha_violation, da);
            if (dl > slack) trace.lambda_monotone = false;
            if (da > slack) trace.alpha_monotone = false;
        }
        prev = &pt;
    }
    return trace;
}

// Classified parameter-plane map.
struct MapCell {
    double alpha = 0.0;
    double beta = 0.0;
    RegionClass theory;
    int numeric_found = -2; // -2 = numeric pass skipped
    double energy = 0.0;    // best accepted energy when numeric_found == 1
    bool manifold_empty = false;
    bool boundary_band = false;
    bool compared = false;
    bool agree = true;
};

struct RegionMap {
    std::vector<double> alpha_values;
    std::vector<double> beta_values;
    std::vector<MapCell> cells; // row-major, beta outer, alpha inner
    SpectrumConstants consts;
    LIReport li;
    int compared = 0;
    int disagreements = 0;
};

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t idx) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (idx + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

} // namespace detail

// Evaluate theory and (optionally) numerics on a rectangular (alpha, beta)
// lattice. Cells within one lattice step of the threshold lines are flagged
// as boundary band and exempted from the agreement count.
inline RegionMap region_map(const SpectrumContext& ctx, double alpha_min, double alpha_max, double beta_min,
                            double beta_max, int resolution, bool numeric, int jobs, const SolverOpts& base_opts) {
    if (resolution < 2) throw std::invalid_argument("region_map: resolution must be at least 2");
    if (!(alpha_min < alpha_max) || !(beta_min < beta_max))
        throw std::invalid_argument("region_map: empty parameter range");
    RegionMap map;
    map.consts = ctx.consts;
    map.li = ctx.li;
    double da = (alpha_max - alpha_min) / (resolution - 1);
    double db = (beta_max - beta_min) / (resolution - 1);
    for (int i = 0; i < resolution; ++i) map.alpha_values.push_back(alpha_min + da * i);
    for (int j = 0; j < resolution; ++j) map.beta_values.push_back(beta_min + db * j);
    map.cells.resize(static_cast<std::size_t>(resolution) * resolution);

    const SpectrumConstants& c = ctx.consts;
    for (int j = 0; j < resolution; ++j) {
        for (int i = 0; i < resolution; ++i) {
            MapCell& cell = map.cells[static_cast<std::size_t>(j) * resolution + i];
            cell.alpha = map.alpha_values[static_cast<std::size_t>(i)];
            cell.beta = map.beta_values[static_cast<std::size_t>(j)];
            cell.theory = classify_theoretical(cell.alpha, cell.beta, c, ctx.li);
            double s = cell.alpha - cell.beta;
            cell.boundary_band = std::fabs(cell.alpha - c.lambda1_ap) <= da ||
                                 std::fabs(cell.beta - c.lambda1_q) <= db ||
                                 (std::isfinite(c.s_tilde_plus) && std::fabs(cell.alpha - c.s_tilde_plus) <= da) ||
                                 (std::isfinite(c.s_star_plus) && std::fabs(s - c.s_star_plus) <= da + db);
        }
    }

    if (numeric) {
        std::atomic<std::size_t> next{0};
        int workers = std::max(1, jobs);
        auto run = [&]() {
            for (;;) {
                std::size_t idx = next.fetch_add(1);
                if (idx >= map.cells.size()) return;
                MapCell& cell = map.cells[idx];
                SolverOpts opts = base_opts;
                opts.seed = detail::mix_seed(base_opts.seed, idx);
                Detection det = detect_existence(ctx, cell.alpha, cell.beta, opts);
                cell.numeric_found = det.found;
                cell.manifold_empty = det.manifold_empty;
                if (det.found == 1) cell.energy = det.best->energy;
            }
        };
        if (workers == 1) {
            run();
        } else {
            std::vector<std::thread> pool;
            for (int w = 0; w < workers; ++w) pool.emplace_back(run);
            for (std::thread& t : pool) t.join();
        }
        for (MapCell& cell : map.cells) {
            bool theorem_cell = cell.theory.verdict != RegionVerdict::UnknownTheory;
            if (!theorem_cell || cell.boundary_band || cell.numeric_found == -2) continue;
            cell.compared = true;
            bool expect_exists = verdict_claims_existence(cell.theory.verdict);
            cell.agree = cell.numeric_found == (expect_exists ? 1 : 0);
            ++map.compared;
            if (!cell.agree) ++map.disagreements;
        }
    }
    return map;
}

} // namespace dps
