#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "dps/energy.hpp"
#include "dps/errors.hpp"

namespace dps {

struct FiberingDiagnostics {
    double t = 0.0;        // scaling that lands t*v on the manifold
    double h = 0.0;        // H_alpha(v)
    double g = 0.0;        // G_beta(v)
    double energy_at_t = 0.0;
    bool negative_branch = false; // true when G < 0 < H (negative-energy branch)
};

// Solve H t^p + G t^q = 0 in t > 0. Requires H and G of opposite signs;
// otherwise the fibering map has no interior critical point.
inline FiberingDiagnostics nehari_project(const Field& v, const SpectrumContext& ctx, double alpha, double beta) {
    double p = ctx.exps.p, q = ctx.exps.q;
    double h = H_alpha(v, ctx, alpha);
    double g = G_beta(v, ctx, beta);
    if (!(h * g < 0.0))
        throw std::domain_error("nehari_project: H and G do not have opposite signs, projection undefined");
    double t = std::exp(std::log(-g / h) / (p - q));
    // one Newton polish on psi(t) = H t^(p-q) + G
    for (int k = 0; k < 2; ++k) {
        double tpq = std::pow(t, p - q);
        double psi = h * tpq + g;
        double dpsi = (p - q) * h * tpq / t;
        if (dpsi != 0.0) t -= psi / dpsi;
    }
    FiberingDiagnostics d;
    d.t = t;
    d.h = h;
    d.g = g;
    d.energy_at_t = std::pow(t, p) * h / p + std::pow(t, q) * g / q;
    d.negative_branch = g < 0.0;
    return d;
}

namespace detail {

struct FiberCandidate {
    Field u;
    double energy;
    long iterations;
};

// Descend f(v) = E(t(v) v) over admissible directions. f is scale-invariant,
// so its gradient t E'(tv) is automatically tangential to the constraint.
inline std::optional<FiberCandidate> fiber_descent(Field v, const SpectrumContext& ctx, double alpha, double beta,
                                                   const SolverOpts& opts) {
    const Grid& grid = ctx.grid;
    double p = ctx.exps.p, q = ctx.exps.q;
    auto project = [&](const Field& f) -> std::optional<FiberingDiagnostics> {
        double h = H_alpha(f, ctx, alpha);
        double g = G_beta(f, ctx, beta);
        if (!(h * g < 0.0)) return std::nullopt;
        FiberingDiagnostics d;
        d.t = std::exp(std::log(-g / h) / (p - q));
        d.h = h;
        d.g = g;
        d.energy_at_t = std::pow(d.t, p) * h / p + std::pow(d.t, q) * g / q;
        d.negative_branch = g < 0.0;
        return d;
    };

    auto renorm = [&](Field& f) {
        double nrm = luxemburg_norm(f, ctx.table, p, q);
        if (nrm > 0.0)
            for (double& x : f.v) x /= nrm;
    };
    renorm(v);
    auto d0 = project(v);
    if (!d0) return std::nullopt;
    double fv = d0->energy_at_t;
    double t_here = d0->t;

    std::vector<double> grad(grid.node_count()), prev_grad(grid.node_count());
    Field scaled(grid), trial(grid);
    double step = opts.initial_step;
    double prev_gnorm2 = 0.0;
    bool have_prev = false;
    int stall = 0;
    long it = 0;
    for (; it < opts.max_iters; ++it) {
        // grad f(v) = t E'(t v)
        for (std::size_t k = 0; k < grid.node_count(); ++k) scaled.v[k] = t_here * v.v[k];
        std::fill(grad.begin(), grad.end(), 0.0);
        add_grad_power_integral_grad(scaled, &ctx.table, p, t_here / p, grad);
        add_power_integral_grad(scaled, &ctx.table, p, -alpha * t_here / p, grad);
        add_grad_power_integral_grad(scaled, nullptr, q, t_here / q, grad);
        add_power_integral_grad(scaled, nullptr, q, -beta * t_here / q, grad);
        double gnorm2 = 0.0, pg_dot_g = 0.0;
        for (std::size_t k = 0; k < grid.node_count(); ++k) {
            if (grid.is_boundary(k)) grad[k] = 0.0;
            else {
                gnorm2 += grad[k] * grad[k];
                pg_dot_g += prev_grad[k] * grad[k];
            }
        }
        if (gnorm2 == 0.0) break;
        double t = std::min(step * 2.0, 1e8);
        if (have_prev) {
            // spectral trial step from the last accepted move s = -step * prev_grad
            double denom = prev_gnorm2 - pg_dot_g;
            if (denom > 0.0) {
                double bb = step * prev_gnorm2 / denom;
                if (std::isfinite(bb) && bb > 0.0) t = std::min(bb, 1e8);
            }
        }
        bool accepted = false;
        double ft = fv, t_next = t_here;
        while (t > 1e-19) {
            for (std::size_t k = 0; k < grid.node_count(); ++k) trial.v[k] = v.v[k] - t * grad[k];
            auto dt = project(trial);
            if (dt && std::isfinite(dt->energy_at_t) && dt->energy_at_t <= fv - opts.armijo_c * t * gnorm2) {
                accepted = true;
                ft = dt->energy_at_t;
                t_next = dt->t;
                break;
            }
            t *= opts.backtrack;
        }
        if (!accepted) break;
        step = t;
        prev_grad.swap(grad);
        prev_gnorm2 = gnorm2;
        have_prev = true;
        double rel = (fv - ft) / std::max(1e-300, std::fabs(ft));
        v.v.swap(trial.v);
        fv = ft;
        t_here = t_next;
        if (t_here > 1e8 || t_here < 1e-8) break; // degenerating toward the cone boundary
        if ((it & 63) == 0) {
            renorm(v);
            have_prev = false; // rescaling invalidates the secant pair
            auto dr = project(v);
            if (!dr) break;
            t_here = dr->t;
            // the ground state is an unconstrained critical point, so full
            // stationarity of the scaled iterate is the honest stop signal
            for (std::size_t k = 0; k < grid.node_count(); ++k) scaled.v[k] = t_here * v.v[k];
            if (energy_residual(scaled, ctx, alpha, beta) <= opts.residual_tol) {
                ++it;
                break;
            }
        }
        if (rel < opts.descent_tol) {
            if (++stall >= 6) { ++it; break; }
        } else {
            stall = 0;
        }
    }
    auto df = project(v);
    if (!df) return std::nullopt;
    Field u(grid);
    for (std::size_t k = 0; k < grid.node_count(); ++k) u.v[k] = df->t * v.v[k];
    return FiberCandidate{std::move(u), df->energy_at_t, it};
}

} // namespace detail

// Ground state over the constraint set <E'(u), u> = 0: project seeds onto the
// manifold and descend the fibered energy, keeping the lowest-energy
// stationary candidate. Throws ManifoldEmpty when no seed admits a
// projection (H and G share a sign in every tried direction).
inline SolveResult nehari_ground_state(const SpectrumContext& ctx, double alpha, double beta, const SolverOpts& opts) {
    std::vector<Field> seeds;
    seeds.push_back(ctx.eig_q.phi);
    seeds.push_back(ctx.eig_pa.phi);
    detail::Rng rng(opts.seed ^ 0x9e3779b97f4a7c15ull);
    for (int k = 0; k < std::max(1, opts.restarts); ++k) {
        Field f = k % 2 == 0 ? ctx.eig_q.phi : ctx.eig_pa.phi;
        for (std::size_t i = 0; i < ctx.grid.node_count(); ++i)
            if (!ctx.grid.is_boundary(i)) f.v[i] += 0.3 * (rng.uniform() - 0.5);
        seeds.push_back(std::move(f));
    }

    std::optional<detail::FiberCandidate> best;
    long total_it = 0;
    int admissible = 0;
    for (Field& s : seeds) {
        double h = H_alpha(s, ctx, alpha);
        double g = G_beta(s, ctx, beta);
        if (!(h * g < 0.0)) continue;
        ++admissible;
        auto c = detail::fiber_descent(std::move(s), ctx, alpha, beta, opts);
        if (!c) continue;
        total_it += c->iterations;
        if (!best || c->energy < best->energy) best = std::move(c);
    }
    if (admissible == 0)
        throw ManifoldEmpty("nehari_ground_state: no admissible direction, constraint set is empty");
    if (!best) {
        SolveResult res{Field(ctx.grid)};
        res.iterations = total_it;
        res.on_nehari = true;
        res.note = "all admissible seeds degenerated";
        return res;
    }
    SolveResult res = detail::finish_solution(std::move(best->u), ctx, alpha, beta, total_it, false, true, "");
    // on the constraint set H + G = 0, so E must equal (1/q - 1/p) G
    double ident = (1.0 / ctx.exps.q - 1.0 / ctx.exps.p) * G_beta(res.u, ctx, beta);
    double scale = std::max({std::fabs(res.energy), std::fabs(ident), 1e-12});
    if (std::fabs(res.energy - ident) > 1e-6 * scale) res.note += "manifold energy identity violated";
    return res;
}

} // namespace dps
