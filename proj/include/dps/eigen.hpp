#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "dps/errors.hpp"
#include "dps/grid.hpp"
#include "dps/orlicz.hpp"

namespace dps {

namespace detail {

struct Rng {
    std::mt19937_64 eng;
    explicit Rng(std::uint64_t seed) : eng(seed) {}
    double uniform() { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }
};

// L2 inner product with the same per-cell Simpson rule the modulars use.
inline double inner_l2(const Field& u, const Field& v) {
    const Grid& g = u.grid;
    int spc = samples_per_cell(g.dim);
    double su[9], sv[9];
    double acc = 0.0;
    for (std::size_t c = 0; c < g.cell_count(); ++c) {
        cell_sample_values(g, u.v, c, su);
        cell_sample_values(g, v.v, c, sv);
        for (int k = 0; k < spc; ++k) {
            double qw = g.dim == 1 ? kSimpson3[k] : kSimpson3[k % 3] * kSimpson3[k / 3];
            acc += qw * su[k] * sv[k];
        }
    }
    return acc * g.cell_volume();
}

} // namespace detail

struct EigenOpts {
    double tol = 1e-9;       // relative Rayleigh decrease
    int max_iters = 500000;
    int restarts = 3;
    std::uint64_t seed = 1;
};

struct EigenResult {
    Field phi;
    double lambda = 0.0;
    double residual = 0.0; // last accepted relative decrease of R
    long iterations = 0;
    int restarts_used = 0;
};

// R(v) = integral(a |grad v|^r) / integral(a |v|^r).
inline double rayleigh_quotient(const WeightSpec& w, double r, const Field& v) {
    if (!(r > 1.0)) throw std::invalid_argument("rayleigh: need r > 1");
    WeightTable table = build_weight_table(v.grid, w);
    double den = power_integral(v, &table, r);
    if (den == 0.0) throw std::invalid_argument("rayleigh: undefined for the zero field");
    return grad_power_integral(v, &table, r) / den;
}

namespace detail {

inline double rayleigh_value(const Field& v, const WeightTable& t, double r, double& num, double& den) {
    num = grad_power_integral(v, &t, r);
    den = power_integral(v, &t, r);
    return num / den;
}

inline EigenResult eigen_descent(const WeightTable& table, double r, const EigenOpts& opts, std::uint64_t seed) {
    const Grid& g = table.grid;
    Field v(g);
    Rng rng(seed);
    for (std::size_t k = 0; k < g.node_count(); ++k)
        if (!g.is_boundary(k)) v.v[k] = 0.1 + 0.9 * rng.uniform();
    double m = v.max_abs();
    for (double& x : v.v) x /= m;

    double num, den;
    double R = rayleigh_value(v, table, r, num, den);
    std::vector<double> grad(g.node_count());
    Field trial(g);
    double step = 1.0;
    double last_rel = std::numeric_limits<double>::infinity();
    int stall = 0;
    long it = 0;
    const double c_armijo = 1e-4;

    for (; it < opts.max_iters; ++it) {
        std::fill(grad.begin(), grad.end(), 0.0);
        add_grad_power_integral_grad(v, &table, r, 1.0 / den, grad);
        add_power_integral_grad(v, &table, r, -R / den, grad);
        double gnorm2 = 0.0;
        for (std::size_t k = 0; k < g.node_count(); ++k) {
            if (g.is_boundary(k)) grad[k] = 0.0;
            else gnorm2 += grad[k] * grad[k];
        }
        if (gnorm2 == 0.0) break;

        double t = std::min(step * 2.0, 1e6);
        bool accepted = false;
        double Rt = R, numt = num, dent = den;
        while (t > 1e-20) {
            for (std::size_t k = 0; k < g.node_count(); ++k)
                trial.v[k] = std::fabs(v.v[k] - t * grad[k]);
            trial.zero_boundary();
            double tm = trial.max_abs();
            if (tm > 0.0)
                for (double& x : trial.v) x /= tm;
            Rt = rayleigh_value(trial, table, r, numt, dent);
            if (Rt <= R - c_armijo * t * gnorm2) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;
        step = t;
        last_rel = (R - Rt) / Rt;
        v.v.swap(trial.v);
        R = Rt;
        num = numt;
        den = dent;
        if (last_rel < opts.tol) {
            if (++stall >= 4) { ++it; break; }
        } else {
            stall = 0;
        }
    }

    double mm = v.max_abs();
    if (mm > 0.0)
        for (double& x : v.v) x /= mm;
    EigenResult res{std::move(v), R, std::isfinite(last_rel) ? last_rel : 0.0, it, 1};
    return res;
}

} // namespace detail

// First eigenpair of the weighted r-Laplacian by projected gradient descent
// on the Rayleigh quotient: |.| keeps iterates nonnegative, sup-normalization
// fixes the scale, restarts guard against bad starts.
inline EigenResult first_eigenpair(const WeightSpec& w, double r, const Grid& grid, const EigenOpts& opts = {}) {
    if (!(r > 1.0)) throw std::invalid_argument("eigenpair: need r > 1");
    WeightTable table = build_weight_table(grid, w);
    EigenResult best{Field(grid)};
    bool have = false;
    int runs = std::max(1, opts.restarts);
    for (int k = 0; k < runs; ++k) {
        EigenResult cur = detail::eigen_descent(table, r, opts, opts.seed + static_cast<std::uint64_t>(k));
        if (!have || cur.lambda < best.lambda) {
            best = std::move(cur);
            have = true;
        }
    }
    best.restarts_used = runs;
    return best;
}

constexpr double kSTildeOverflow = 1e12;

struct SpectrumConstants {
    double lambda1_ap = 0.0;
    double lambda1_q = 0.0;
    double s_tilde_minus = 0.0;
    double s_tilde_plus = 0.0;
    double s_star = 0.0;
    double s_star_minus = 0.0;
    double s_star_plus = 0.0;
    bool weight_inf_positive = true;
};

// Threshold constants from the two first eigenpairs. s_tilde_minus uses the
// unweighted q-integrals of phi_p^a, s_tilde_plus the weighted p-integrals of
// phi_q. Values above kSTildeOverflow collapse to the +inf convention.
inline SpectrumConstants spectrum_constants_from(const EigenResult& eig_pa, const EigenResult& eig_q,
                                                 const Exponents& e, const WeightTable& table) {
    SpectrumConstants c;
    c.lambda1_ap = eig_pa.lambda;
    c.lambda1_q = eig_q.lambda;
    double num_m = grad_power_integral(eig_pa.phi, nullptr, e.q);
    double den_m = power_integral(eig_pa.phi, nullptr, e.q);
    double stm = num_m / den_m;
    if (!(stm <= kSTildeOverflow)) {
        c.s_tilde_minus = std::numeric_limits<double>::infinity();
        c.s_star_minus = -std::numeric_limits<double>::infinity();
    } else {
        c.s_tilde_minus = stm;
        c.s_star_minus = c.lambda1_ap - stm;
    }
    double num_p = grad_power_integral(eig_q.phi, &table, e.p);
    double den_p = power_integral(eig_q.phi, &table, e.p);
    c.s_tilde_plus = num_p / den_p;
    c.s_star = c.lambda1_ap - c.lambda1_q;
    c.s_star_plus = c.s_tilde_plus - c.lambda1_q;
    c.weight_inf_positive = table.spec.inf_positive();
    return c;
}

inline SpectrumConstants spectrum_constants(const Exponents& e, const WeightSpec& w, const Grid& grid,
                                            const EigenOpts& opts = {}) {
    validate_exponents(e, grid.dim);
    WeightTable table = build_weight_table(grid, w);
    EigenResult eig_pa = first_eigenpair(w, e.p, grid, opts);
    EigenResult eig_q = first_eigenpair(WeightSpec{}, e.q, grid, opts);
    return spectrum_constants_from(eig_pa, eig_q, e, table);
}

struct LIReport {
    bool holds = false;
    double best_k = 0.0;
    double alignment_residual = 0.0;
    double threshold = 1e-3;
};

// Proportionality diagnostic between the two eigenfunctions: least-squares
// multiple of phi_q closest to phi_pa in L2, relative misfit against the
// threshold. Independence "holds" when the fit is poor.
inline LIReport li_diagnostic(const Field& phi_pa, const Field& phi_q, double threshold = 1e-3) {
    double qq = detail::inner_l2(phi_q, phi_q);
    double pp = detail::inner_l2(phi_pa, phi_pa);
    if (qq == 0.0 || pp == 0.0) throw std::invalid_argument("li_diagnostic: zero eigenfunction");
    double pq = detail::inner_l2(phi_pa, phi_q);
    double k = pq / qq;
    double mis2 = pp - 2.0 * k * pq + k * k * qq;
    double residual = std::sqrt(std::max(0.0, mis2) / pp);
    LIReport rep;
    rep.best_k = k;
    rep.alignment_residual = residual;
    rep.threshold = threshold;
    rep.holds = residual > threshold;
    return rep;
}

} // namespace dps
