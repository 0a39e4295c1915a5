#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dps/eigen.hpp"
#include "dps/errors.hpp"
#include "dps/grid.hpp"
#include "dps/orlicz.hpp"

namespace dps {

struct SolverOpts {
    std::uint64_t seed = 1;
    int restarts = 3;
    long max_iters = 500000;
    double descent_tol = 1e-10;   // relative energy decrease between accepted steps
    double residual_tol = 2e-4;   // relative stationarity required to accept a solution
    double armijo_c = 1e-4;
    double backtrack = 0.5;
    double initial_step = 1.0;
    double exist_rel = 1e-6;      // nontriviality floor relative to |phi_q|_theta
    double sup_guard = 1e8;       // sup-norm divergence guard
};

// Everything the (alpha,beta)-solvers need, computed once per configuration.
struct SpectrumContext {
    Grid grid;
    Exponents exps;
    WeightSpec weight;
    WeightTable table;
    EigenResult eig_pa; // weighted, r = p
    EigenResult eig_q;  // unweighted, r = q
    SpectrumConstants consts;
    LIReport li;
    double phi_q_theta = 0.0; // Luxemburg norm of phi_q
    SolverOpts solver;
};

inline SpectrumContext prepare_context(const Grid& grid, const Exponents& exps, const WeightSpec& weight,
                                       const EigenOpts& eig_opts = {}, const SolverOpts& solver = {},
                                       double li_threshold = 1e-3) {
    validate_exponents(exps, grid.dim);
    SpectrumContext ctx{grid, exps, weight, build_weight_table(grid, weight), EigenResult{Field(grid)},
                        EigenResult{Field(grid)}, SpectrumConstants{}, LIReport{}, 0.0, solver};
    ctx.eig_pa = first_eigenpair(weight, exps.p, grid, eig_opts);
    ctx.eig_q = first_eigenpair(WeightSpec{}, exps.q, grid, eig_opts);
    ctx.consts = spectrum_constants_from(ctx.eig_pa, ctx.eig_q, exps, ctx.table);
    ctx.li = li_diagnostic(ctx.eig_pa.phi, ctx.eig_q.phi, li_threshold);
    ctx.phi_q_theta = luxemburg_norm(ctx.eig_q.phi, ctx.table, exps.p, exps.q);
    return ctx;
}

// H_alpha(u) = integral(a|grad u|^p) - alpha integral(a|u|^p)
inline double H_alpha(const Field& u, const SpectrumContext& ctx, double alpha) {
    return grad_power_integral(u, &ctx.table, ctx.exps.p) - alpha * power_integral(u, &ctx.table, ctx.exps.p);
}

// G_beta(u) = integral(|grad u|^q) - beta integral(|u|^q)
inline double G_beta(const Field& u, const SpectrumContext& ctx, double beta) {
    return grad_power_integral(u, nullptr, ctx.exps.q) - beta * power_integral(u, nullptr, ctx.exps.q);
}

inline double energy(const Field& u, const SpectrumContext& ctx, double alpha, double beta) {
    return H_alpha(u, ctx, alpha) / ctx.exps.p + G_beta(u, ctx, beta) / ctx.exps.q;
}

// Exact nodal derivative of the quadrature sums behind energy().
inline Field energy_gradient(const Field& u, const SpectrumContext& ctx, double alpha, double beta) {
    std::vector<double> acc(u.grid.node_count(), 0.0);
    double p = ctx.exps.p, q = ctx.exps.q;
    add_grad_power_integral_grad(u, &ctx.table, p, 1.0 / p, acc);
    add_power_integral_grad(u, &ctx.table, p, -alpha / p, acc);
    add_grad_power_integral_grad(u, nullptr, q, 1.0 / q, acc);
    add_power_integral_grad(u, nullptr, q, -beta / q, acc);
    Field g(u.grid, std::move(acc));
    return g;
}

struct SolveResult {
    Field u;
    double energy = 0.0;
    double grad_norm = 0.0; // relative stationarity residual
    bool nontrivial = false;
    bool positive_interior = false;
    bool on_nehari = false;
    long iterations = 0;
    bool converged = false;
    std::string note;
};

namespace detail {

// Relative stationarity: |op - rhs| / (|op| + |rhs|), where op collects the
// differential-operator part of the energy gradient and rhs the reaction part.
inline double energy_residual(const Field& u, const SpectrumContext& ctx, double alpha, double beta) {
    std::size_t n = u.grid.node_count();
    std::vector<double> op(n, 0.0), rhs(n, 0.0);
    double p = ctx.exps.p, q = ctx.exps.q;
    add_grad_power_integral_grad(u, &ctx.table, p, 1.0 / p, op);
    add_grad_power_integral_grad(u, nullptr, q, 1.0 / q, op);
    add_power_integral_grad(u, &ctx.table, p, alpha / p, rhs);
    add_power_integral_grad(u, nullptr, q, beta / q, rhs);
    double diff2 = 0.0, op2 = 0.0, rhs2 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (u.grid.is_boundary(k)) continue;
        double d = op[k] - rhs[k];
        diff2 += d * d;
        op2 += op[k] * op[k];
        rhs2 += rhs[k] * rhs[k];
    }
    double scale = std::sqrt(op2) + std::sqrt(rhs2);
    if (scale == 0.0) return 0.0;
    return std::sqrt(diff2) / scale;
}

inline bool positive_interior(const Field& u) {
    for (std::size_t k = 0; k < u.grid.node_count(); ++k)
        if (!u.grid.is_boundary(k) && !(u.v[k] > 0.0)) return false;
    return true;
}

struct DescentOutcome {
    Field u;
    double value = 0.0;
    long iterations = 0;
    bool diverged = false;
    bool collapsed = false;
};

// Armijo gradient descent on a C^1 objective over interior nodal values.
// The trial step is the spectral (Barzilai-Borwein) quotient of the last
// accepted move when that is positive, else a doubling warm start; Armijo
// backtracking validates every step. Stops when stop_fn certifies the
// iterate, on sustained relative decrease below tol, line-search stall,
// collapse, or divergence.
template <class ValueFn, class GradFn, class StopFn>
DescentOutcome armijo_descent(Field u, ValueFn&& value_fn, GradFn&& grad_fn, StopFn&& stop_fn, const SolverOpts& opts,
                              long max_iters) {
    const Grid& g = u.grid;
    DescentOutcome out{Field(g)};
    double E = value_fn(u);
    std::vector<double> grad(g.node_count()), prev_grad(g.node_count());
    Field trial(g);
    double step = opts.initial_step;
    double prev_gnorm2 = 0.0;
    bool have_prev = false;
    int stall = 0;
    long it = 0;
    for (; it < max_iters; ++it) {
        grad_fn(u, grad);
        double gnorm2 = 0.0, pg_dot_g = 0.0;
        for (std::size_t k = 0; k < g.node_count(); ++k) {
            if (g.is_boundary(k)) grad[k] = 0.0;
            else {
                gnorm2 += grad[k] * grad[k];
                pg_dot_g += prev_grad[k] * grad[k];
            }
        }
        if (gnorm2 == 0.0) break;
        double t = std::min(step * 2.0, 1e8);
        if (have_prev) {
            // last move was s = -step * prev_grad, so the BB1 quotient
            // <s,s>/<s,y> reduces to step * |pg|^2 / (|pg|^2 - <pg,g>)
            double denom = prev_gnorm2 - pg_dot_g;
            if (denom > 0.0) {
                double bb = step * prev_gnorm2 / denom;
                if (std::isfinite(bb) && bb > 0.0) t = std::min(bb, 1e8);
            }
        }
        bool accepted = false;
        double Et = E;
        while (t > 1e-19) {
            for (std::size_t k = 0; k < g.node_count(); ++k)
                trial.v[k] = u.v[k] - t * grad[k];
            Et = value_fn(trial);
            if (std::isfinite(Et) && Et <= E - opts.armijo_c * t * gnorm2) {
                accepted = true;
                break;
            }
            t *= opts.backtrack;
        }
        if (!accepted) break;
        step = t;
        prev_grad.swap(grad);
        prev_gnorm2 = gnorm2;
        have_prev = true;
        double rel = (E - Et) / std::max(1e-300, std::fabs(Et));
        u.v.swap(trial.v);
        E = Et;
        double sup = u.max_abs();
        if (sup > opts.sup_guard || E < -1e30) {
            out.diverged = true;
            break;
        }
        if (sup < 1e-12) {
            out.collapsed = true;
            break;
        }
        if ((it & 31) == 31 && stop_fn(u)) {
            ++it;
            break;
        }
        if (rel < opts.descent_tol) {
            if (++stall >= 6) { ++it; break; }
        } else {
            stall = 0;
        }
    }
    out.u = std::move(u);
    out.value = E;
    out.iterations = it;
    return out;
}

inline SolveResult finish_solution(Field u, const SpectrumContext& ctx, double alpha, double beta, long iterations,
                                   bool diverged, bool on_nehari, const std::string& note) {
    SolveResult res{Field(u.grid)};
    for (double& x : u.v) x = std::fabs(x);
    u.zero_boundary();
    res.energy = energy(u, ctx, alpha, beta);
    res.grad_norm = energy_residual(u, ctx, alpha, beta);
    double theta = luxemburg_norm(u, ctx.table, ctx.exps.p, ctx.exps.q);
    res.nontrivial = theta > ctx.solver.exist_rel * ctx.phi_q_theta;
    res.positive_interior = positive_interior(u);
    res.on_nehari = on_nehari;
    res.iterations = iterations;
    res.converged = !diverged && res.grad_norm <= ctx.solver.residual_tol;
    res.note = note;
    res.u = std::move(u);
    return res;
}

inline Field random_field(const Grid& g, Rng& rng, double amp, bool positive) {
    Field f(g);
    for (std::size_t k = 0; k < g.node_count(); ++k)
        if (!g.is_boundary(k)) f.v[k] = positive ? amp * (0.1 + 0.9 * rng.uniform()) : amp * (rng.uniform() - 0.5);
    return f;
}

} // namespace detail

// Unconstrained descent of the free energy. Start on the phi_q ray at a
// negative-energy point when one exists, then random restarts; the best
// outcome is |.|-postprocessed and certified by the stationarity residual.
inline SolveResult minimize_global(const SpectrumContext& ctx, double alpha, double beta, const SolverOpts& opts) {
    double p = ctx.exps.p, q = ctx.exps.q;
    auto value_fn = [&](const Field& f) { return energy(f, ctx, alpha, beta); };
    auto grad_fn = [&](const Field& f, std::vector<double>& out) {
        std::fill(out.begin(), out.end(), 0.0);
        add_grad_power_integral_grad(f, &ctx.table, p, 1.0 / p, out);
        add_power_integral_grad(f, &ctx.table, p, -alpha / p, out);
        add_grad_power_integral_grad(f, nullptr, q, 1.0 / q, out);
        add_power_integral_grad(f, nullptr, q, -beta / q, out);
    };

    std::vector<Field> starts;
    double A = H_alpha(ctx.eig_q.phi, ctx, alpha) / p;
    double B = G_beta(ctx.eig_q.phi, ctx, beta) / q;
    // E(t phi_q) = A t^p + B t^q; seed where the ray goes negative.
    if (B < 0.0) {
        double t0 = A > 0.0 ? std::pow(-q * B / (p * A), 1.0 / (p - q)) : 1.0;
        Field f = ctx.eig_q.phi;
        for (double& x : f.v) x *= t0;
        starts.push_back(std::move(f));
    } else if (A < 0.0) {
        double tz = std::pow(-B / A, 1.0 / (p - q));
        Field f = ctx.eig_q.phi;
        for (double& x : f.v) x *= 2.0 * tz;
        starts.push_back(std::move(f));
    }
    detail::Rng rng(opts.seed);
    for (int k = 0; k < std::max(1, opts.restarts); ++k)
        starts.push_back(detail::random_field(ctx.grid, rng, 0.5, false));

    auto stop_fn = [&](const Field& f) { return detail::energy_residual(f, ctx, alpha, beta) <= opts.residual_tol; };
    std::optional<detail::DescentOutcome> best;
    long total_it = 0;
    bool any_diverged = false;
    for (Field& s : starts) {
        detail::DescentOutcome o =
            detail::armijo_descent(std::move(s), value_fn, grad_fn, stop_fn, opts, opts.max_iters);
        total_it += o.iterations;
        if (o.diverged) {
            any_diverged = true;
            continue;
        }
        if (!best || o.value < best->value) best = std::move(o);
    }
    if (!best) {
        // Every start ran off to -infinity: no global minimizer to report.
        SolveResult res{Field(ctx.grid)};
        res.iterations = total_it;
        res.converged = false;
        res.note = "energy unbounded below along every start";
        return res;
    }
    SolveResult res = detail::finish_solution(std::move(best->u), ctx, alpha, beta, total_it, false, false,
                                              any_diverged ? "some starts diverged" : "");
    return res;
}

// Truncated auxiliary functional. T caps the field at w(x); F_r matches
// t^r/r below the cap and continues linearly above, so J is coercive and its
// minimizers live in [0, w] up to clamp iteration.
namespace detail {

inline double trunc_f(double t, double w, double r) {
    double tp = t > 0.0 ? t : 0.0;
    double tw = tp < w ? tp : w;
    double lin = tp > w ? (tp - w) : 0.0;
    return pow_abs(tw, r) / r + pow_abs(w, r - 1.0) * lin;
}

inline double trunc_df(double t, double w, double r) {
    double tp = t > 0.0 ? t : 0.0;
    double tw = tp < w ? tp : w;
    return pow_abs(tw, r - 1.0);
}

inline double truncated_rhs(const Field& u, const Field& w_super, const SpectrumContext& ctx, double nu, double s) {
    const Grid& g = u.grid;
    int spc = samples_per_cell(g.dim);
    double vol = g.cell_volume();
    double su[9], sw[9];
    double acc = 0.0;
    double p = ctx.exps.p, q = ctx.exps.q;
    for (std::size_t c = 0; c < g.cell_count(); ++c) {
        cell_sample_values(g, u.v, c, su);
        cell_sample_values(g, w_super.v, c, sw);
        for (int k = 0; k < spc; ++k) {
            double qw = g.dim == 1 ? kSimpson3[k] : kSimpson3[k % 3] * kSimpson3[k / 3];
            double a = ctx.table.at_samples[c * static_cast<std::size_t>(spc) + static_cast<std::size_t>(k)];
            acc += qw * ((nu + s) * a * trunc_f(su[k], sw[k], p) + nu * trunc_f(su[k], sw[k], q));
        }
    }
    return acc * vol;
}

inline void add_truncated_rhs_grad(const Field& u, const Field& w_super, const SpectrumContext& ctx, double nu,
                                   double s, double scale, std::vector<double>& acc) {
    const Grid& g = u.grid;
    int spc = samples_per_cell(g.dim);
    double vol = g.cell_volume();
    double su[9], sw[9], f[9];
    double p = ctx.exps.p, q = ctx.exps.q;
    for (std::size_t c = 0; c < g.cell_count(); ++c) {
        cell_sample_values(g, u.v, c, su);
        cell_sample_values(g, w_super.v, c, sw);
        for (int k = 0; k < spc; ++k) {
            double qw = g.dim == 1 ? kSimpson3[k] : kSimpson3[k % 3] * kSimpson3[k / 3];
            double a = ctx.table.at_samples[c * static_cast<std::size_t>(spc) + static_cast<std::size_t>(k)];
            f[k] = scale * vol * qw * ((nu + s) * a * trunc_df(su[k], sw[k], p) + nu * trunc_df(su[k], sw[k], q));
        }
        scatter_sample_forces(g, c, f, acc);
    }
}

} // namespace detail

inline double truncated_energy(const Field& u, const Field& w_super, const SpectrumContext& ctx, double nu, double s) {
    double p = ctx.exps.p, q = ctx.exps.q;
    return grad_power_integral(u, &ctx.table, p) / p + grad_power_integral(u, nullptr, q) / q -
           detail::truncated_rhs(u, w_super, ctx, nu, s);
}

// Minimize the truncated functional for (alpha, beta) = (nu + s, nu) below the
// super-solution w_super, clamp into [0, w_super], and iterate to a fixed
// point. The result's residual is measured against the untruncated energy.
inline SolveResult truncated_minimize(double nu, double s, const Field& w_super, const SpectrumContext& ctx,
                                      const SolverOpts& opts) {
    if (!(w_super.grid == ctx.grid)) throw std::invalid_argument("truncated_minimize: grid mismatch");
    double p = ctx.exps.p, q = ctx.exps.q;
    double alpha = nu + s, beta = nu;
    auto value_fn = [&](const Field& f) { return truncated_energy(f, w_super, ctx, nu, s); };
    auto grad_fn = [&](const Field& f, std::vector<double>& out) {
        std::fill(out.begin(), out.end(), 0.0);
        add_grad_power_integral_grad(f, &ctx.table, p, 1.0 / p, out);
        add_grad_power_integral_grad(f, nullptr, q, 1.0 / q, out);
        detail::add_truncated_rhs_grad(f, w_super, ctx, nu, s, -1.0, out);
    };

    double wsup = w_super.max_abs();
    Field start(ctx.grid);
    if (wsup > 0.0) {
        // Largest t with t phi_q <= w_super on the nodes, then the best
        // negative-energy point on that ray segment.
        double t_fit = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < ctx.grid.node_count(); ++k) {
            if (ctx.grid.is_boundary(k)) continue;
            double ph = ctx.eig_q.phi.v[k];
            if (ph > 0.0) t_fit = std::min(t_fit, std::max(0.0, w_super.v[k]) / ph);
        }
        if (!std::isfinite(t_fit)) t_fit = 0.0;
        double A = H_alpha(ctx.eig_q.phi, ctx, alpha) / p;
        double B = G_beta(ctx.eig_q.phi, ctx, beta) / q;
        double t0 = t_fit;
        if (B < 0.0 && A > 0.0) t0 = std::min(t_fit, std::pow(-q * B / (p * A), 1.0 / (p - q)));
        start = ctx.eig_q.phi;
        for (double& x : start.v) x *= t0;
    }

    // once the cap is inactive the truncated critical point solves the free
    // problem, so the free stationarity residual is the right stop signal
    auto stop_fn = [&](const Field& f) { return detail::energy_residual(f, ctx, alpha, beta) <= opts.residual_tol; };
    long total_it = 0;
    Field u = std::move(start);
    for (int round = 0; round < 12; ++round) {
        detail::DescentOutcome o =
            detail::armijo_descent(std::move(u), value_fn, grad_fn, stop_fn, opts, opts.max_iters);
        total_it += o.iterations;
        u = std::move(o.u);
        double overshoot = 0.0;
        for (std::size_t k = 0; k < ctx.grid.node_count(); ++k) {
            double lo = 0.0, hi = std::max(0.0, w_super.v[k]);
            double cl = std::min(std::max(u.v[k], lo), hi);
            overshoot = std::max(overshoot, std::fabs(u.v[k] - cl));
            u.v[k] = cl;
        }
        u.zero_boundary();
        if (overshoot <= 1e-10 * std::max(1.0, wsup)) break;
    }
    SolveResult res = detail::finish_solution(std::move(u), ctx, alpha, beta, total_it, false, false, "truncated");
    return res;
}

} // namespace dps
