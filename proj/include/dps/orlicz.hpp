#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "dps/errors.hpp"
#include "dps/grid.hpp"

namespace dps {

struct Exponents {
    double p = 3.0;
    double q = 2.0;
};

inline void validate_exponents(const Exponents& e, int dim) {
    if (!(1.0 < e.q && e.q < e.p)) throw ConfigError("exponents: need 1 < q < p");
    if (e.q < static_cast<double>(dim)) {
        // Sobolev conjugate guard, only meaningful when q < d.
        double qstar = static_cast<double>(dim) * e.q / (static_cast<double>(dim) - e.q);
        if (!(e.p < qstar)) throw ConfigError("exponents: p must stay below the Sobolev conjugate q* = dq/(d-q)");
    }
}

enum class WeightKind { Constant, Bump, Power };

// The modulating weight a(x). Three families:
//   Constant:  a = value, value > 0
//   Bump:      a = base + amplitude * prod_k 4 t_k (1 - t_k), t_k = x_k / L_k
//   Power:     a = |x - center|^gamma, 0 <= gamma < 1, center interior
struct WeightSpec {
    WeightKind kind = WeightKind::Constant;
    double value = 1.0;
    double base = 0.5;
    double amplitude = 2.0;
    double gamma = 0.5;
    std::array<double, 2> center{0.5, 0.5};

    double evaluate(const std::array<double, 2>& x, int dim) const {
        switch (kind) {
        case WeightKind::Constant:
            return value;
        case WeightKind::Bump: {
            double prod = 1.0;
            for (int a = 0; a < dim; ++a) {
                double t = x[static_cast<std::size_t>(a)];
                prod *= 4.0 * t * (1.0 - t);
            }
            return base + amplitude * prod;
        }
        case WeightKind::Power: {
            double d2 = 0.0;
            for (int a = 0; a < dim; ++a) {
                double d = x[static_cast<std::size_t>(a)] - center[static_cast<std::size_t>(a)];
                d2 += d * d;
            }
            if (gamma == 0.0) return 1.0;
            return std::pow(std::sqrt(d2), gamma);
        }
        }
        return 1.0;
    }

    // Whether inf over the closed domain is strictly positive.
    bool inf_positive() const { return kind != WeightKind::Power || gamma == 0.0; }
};

inline void validate_weight(const WeightSpec& w, const Grid& g) {
    switch (w.kind) {
    case WeightKind::Constant:
        if (!(w.value > 0.0)) throw ConfigError("weight: constant value must be positive");
        break;
    case WeightKind::Bump:
        if (!(w.base > 0.0)) throw ConfigError("weight: bump base must be positive");
        if (w.amplitude < 0.0) throw ConfigError("weight: bump amplitude must be nonnegative");
        break;
    case WeightKind::Power:
        if (!(w.gamma >= 0.0 && w.gamma < 1.0)) throw ConfigError("weight: power exponent must lie in [0,1)");
        for (int a = 0; a < g.dim; ++a) {
            double c = w.center[static_cast<std::size_t>(a)];
            if (!(c > 0.0 && c < g.extent[static_cast<std::size_t>(a)]))
                throw ConfigError("weight: power-law center must be interior");
        }
        break;
    }
}

namespace detail {

inline double pow_abs(double x, double r) {
    double a = std::fabs(x);
    if (r == 2.0) return a * a;
    if (r == 3.0) return a * a * a;
    if (a == 0.0) return 0.0;
    return std::pow(a, r);
}

// |x|^{r-1} sgn(x), the derivative of |x|^r / r.
inline double pow_signed_rm1(double x, double r) {
    if (x == 0.0) return 0.0;
    double a = std::fabs(x);
    double m;
    if (r == 2.0) m = a;
    else if (r == 3.0) m = a * a;
    else m = std::pow(a, r - 1.0);
    return x < 0.0 ? -m : m;
}

// r |g|^{r-2}, the radial factor of d|g|^r/dg for vector g; 0 at g = 0.
inline double radial_rm2(double gnorm, double r) {
    if (gnorm == 0.0) return 0.0;
    if (r == 2.0) return 2.0;
    if (r == 3.0) return 3.0 * gnorm;
    return r * std::pow(gnorm, r - 2.0);
}

inline constexpr double kSimpson3[3] = {1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0};

inline int samples_per_cell(int dim) { return dim == 1 ? 3 : 9; }

// Linear interpolation of nodal values to the Simpson sample points of a cell.
inline void cell_sample_values(const Grid& g, const std::vector<double>& nodal, std::size_t cell, double* s) {
    if (g.dim == 1) {
        double a = nodal[cell], b = nodal[cell + 1];
        s[0] = a;
        s[1] = 0.5 * (a + b);
        s[2] = b;
        return;
    }
    std::size_t nd[4];
    g.cell_nodes(cell, nd);
    double c00 = nodal[nd[0]], c10 = nodal[nd[1]], c01 = nodal[nd[2]], c11 = nodal[nd[3]];
    s[0] = c00;
    s[1] = 0.5 * (c00 + c10);
    s[2] = c10;
    s[3] = 0.5 * (c00 + c01);
    s[4] = 0.25 * (c00 + c10 + c01 + c11);
    s[5] = 0.5 * (c10 + c11);
    s[6] = c01;
    s[7] = 0.5 * (c01 + c11);
    s[8] = c11;
}

// Scatter per-sample forces back to the cell's corner nodes (chain rule of
// cell_sample_values).
inline void scatter_sample_forces(const Grid& g, std::size_t cell, const double* f, std::vector<double>& acc) {
    if (g.dim == 1) {
        acc[cell] += f[0] + 0.5 * f[1];
        acc[cell + 1] += f[2] + 0.5 * f[1];
        return;
    }
    std::size_t nd[4];
    g.cell_nodes(cell, nd);
    acc[nd[0]] += f[0] + 0.5 * (f[1] + f[3]) + 0.25 * f[4];
    acc[nd[1]] += f[2] + 0.5 * (f[1] + f[5]) + 0.25 * f[4];
    acc[nd[2]] += f[6] + 0.5 * (f[3] + f[7]) + 0.25 * f[4];
    acc[nd[3]] += f[8] + 0.5 * (f[5] + f[7]) + 0.25 * f[4];
}

inline std::array<double, 2> sample_pos(const Grid& g, std::size_t cell, int s) {
    if (g.dim == 1) return {(static_cast<double>(cell) + 0.5 * s) * g.h(0), 0.0};
    std::size_t c = g.cells_axis();
    double x = (static_cast<double>(cell % c) + 0.5 * (s % 3)) * g.h(0);
    double y = (static_cast<double>(cell / c) + 0.5 * (s / 3)) * g.h(1);
    return {x, y};
}

} // namespace detail

// Weight sampled once per grid: Simpson sample points and cell centers.
// Immutable; shared read-only by the solvers.
struct WeightTable {
    Grid grid;
    WeightSpec spec;
    std::vector<double> at_samples; // cell-major, samples_per_cell entries per cell
    std::vector<double> at_centers; // one entry per cell
};

inline WeightTable build_weight_table(const Grid& grid, const WeightSpec& spec) {
    validate_weight(spec, grid);
    WeightTable t{grid, spec, {}, {}};
    int spc = detail::samples_per_cell(grid.dim);
    t.at_samples.resize(grid.cell_count() * static_cast<std::size_t>(spc));
    t.at_centers.resize(grid.cell_count());
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
        for (int s = 0; s < spc; ++s) {
            double a = spec.evaluate(detail::sample_pos(grid, c, s), grid.dim);
            if (!(a > 0.0))
                throw ConfigError("weight: vanishes at a quadrature point; move the degeneracy off the lattice");
            t.at_samples[c * static_cast<std::size_t>(spc) + static_cast<std::size_t>(s)] = a;
        }
        double ac = spec.evaluate(grid.cell_center(c), grid.dim);
        if (!(ac > 0.0)) throw ConfigError("weight: vanishes at a cell center; move the degeneracy off the lattice");
        t.at_centers[c] = ac;
    }
    return t;
}

// integral of a(x) |v|^r with the field interpolated linearly per cell and a
// 3-point (1D) / 3x3 (2D) Simpson rule; exact for |linear|^r, r in {2,3}, on
// sign-constant cells. Pass w = nullptr for a == 1.
inline double power_integral(const Field& v, const WeightTable* w, double r) {
    const Grid& g = v.grid;
    int spc = detail::samples_per_cell(g.dim);
    double vol = g.cell_volume();
    double acc = 0.0;
    double s[9];
    for (std::size_t c = 0; c < g.cell_count(); ++c) {
        detail::cell_sample_values(g, v.v, c, s);
        double cell_acc = 0.0;
        for (int k = 0; k < spc; ++k) {
            double qw = g.dim == 1 ? detail::kSimpson3[k] : detail::kSimpson3[k % 3] * detail::kSimpson3[k / 3];
            double a = w ? w->at_samples[c * static_cast<std::size_t>(spc) + static_cast<std::size_t>(k)] : 1.0;
            cell_acc += qw * a * detail::pow_abs(s[k], r);
        }
        acc += cell_acc;
    }
    return acc * vol;
}

// Accumulate scale * d/d(node) of power_integral into acc.
inline void add_power_integral_grad(const Field& v, const WeightTable* w, double r, double scale, std::vector<double>& acc) {
    const Grid& g = v.grid;
    int spc = detail::samples_per_cell(g.dim);
    double vol = g.cell_volume();
    double s[9], f[9];
    for (std::size_t c = 0; c < g.cell_count(); ++c) {
        detail::cell_sample_values(g, v.v, c, s);
        for (int k = 0; k < spc; ++k) {
            double qw = g.dim == 1 ? detail::kSimpson3[k] : detail::kSimpson3[k % 3] * detail::kSimpson3[k / 3];
            double a = w ? w->at_samples[c * static_cast<std::size_t>(spc) + static_cast<std::size_t>(k)] : 1.0;
            f[k] = scale * vol * qw * a * r * detail::pow_signed_rm1(s[k], r);
        }
        detail::scatter_sample_forces(g, c, f, acc);
    }
}

// integral of a(x) |grad v|^r with the weight at cell centers.
inline double grad_power_integral(const Field& v, const WeightTable* w, double r) {
    const Grid& g = v.grid;
    double vol = g.cell_volume();
    double acc = 0.0;
    if (g.dim == 1) {
        double inv_h = 1.0 / g.h(0);
        for (std::size_t c = 0; c < g.cell_count(); ++c) {
            double gr = (v.v[c + 1] - v.v[c]) * inv_h;
            acc += (w ? w->at_centers[c] : 1.0) * detail::pow_abs(gr, r);
        }
    } else {
        double ix = 0.5 / g.h(0), iy = 0.5 / g.h(1);
        std::size_t nd[4];
        for (std::size_t c = 0; c < g.cell_count(); ++c) {
            g.cell_nodes(c, nd);
            double c00 = v.v[nd[0]], c10 = v.v[nd[1]], c01 = v.v[nd[2]], c11 = v.v[nd[3]];
            double gx = (c10 - c00 + c11 - c01) * ix;
            double gy = (c01 - c00 + c11 - c10) * iy;
            acc += (w ? w->at_centers[c] : 1.0) * detail::pow_abs(std::sqrt(gx * gx + gy * gy), r);
        }
    }
    return acc * vol;
}

inline double grad_power_integral(const CellField& gradv, const WeightTable* w, double r) {
    const Grid& g = gradv.grid;
    double acc = 0.0;
    for (std::size_t c = 0; c < g.cell_count(); ++c) {
        const double* gc = gradv.cell(c);
        double gn = g.dim == 1 ? std::fabs(gc[0]) : std::sqrt(gc[0] * gc[0] + gc[1] * gc[1]);
        acc += (w ? w->at_centers[c] : 1.0) * detail::pow_abs(gn, r);
    }
    return acc * g.cell_volume();
}

// Accumulate scale * d/d(node) of grad_power_integral into acc.
inline void add_grad_power_integral_grad(const Field& v, const WeightTable* w, double r, double scale, std::vector<double>& acc) {
    const Grid& g = v.grid;
    double vol = g.cell_volume();
    if (g.dim == 1) {
        double inv_h = 1.0 / g.h(0);
        for (std::size_t c = 0; c < g.cell_count(); ++c) {
            double gr = (v.v[c + 1] - v.v[c]) * inv_h;
            double a = w ? w->at_centers[c] : 1.0;
            double force = scale * vol * a * r * detail::pow_signed_rm1(gr, r) * inv_h;
            acc[c] -= force;
            acc[c + 1] += force;
        }
        return;
    }
    double ix = 0.5 / g.h(0), iy = 0.5 / g.h(1);
    std::size_t nd[4];
    for (std::size_t c = 0; c < g.cell_count(); ++c) {
        g.cell_nodes(c, nd);
        double c00 = v.v[nd[0]], c10 = v.v[nd[1]], c01 = v.v[nd[2]], c11 = v.v[nd[3]];
        double gx = (c10 - c00 + c11 - c01) * ix;
        double gy = (c01 - c00 + c11 - c10) * iy;
        double gn = std::sqrt(gx * gx + gy * gy);
        double a = w ? w->at_centers[c] : 1.0;
        double rad = scale * vol * a * detail::radial_rm2(gn, r);
        double fx = rad * gx * ix, fy = rad * gy * iy;
        acc[nd[0]] += -fx - fy;
        acc[nd[1]] += fx - fy;
        acc[nd[2]] += -fx + fy;
        acc[nd[3]] += fx + fy;
    }
}

// Modulars of the two-phase integrands theta0(x,t) = a t^p and
// theta(x,t) = a t^p + t^q.
inline double modular_theta0(const Field& u, const WeightTable& w, double p) { return power_integral(u, &w, p); }
inline double modular_theta0(const CellField& gradu, const WeightTable& w, double p) { return grad_power_integral(gradu, &w, p); }

inline double modular_theta(const Field& u, const WeightTable& w, double p, double q) {
    return power_integral(u, &w, p) + power_integral(u, nullptr, q);
}
inline double modular_theta(const CellField& gradu, const WeightTable& w, double p, double q) {
    return grad_power_integral(gradu, &w, p) + grad_power_integral(gradu, nullptr, q);
}

namespace detail {

// Luxemburg norm from the two homogeneous parts: solve A k^-p + B k^-q = 1.
inline double luxemburg_from_parts(double A, double B, double p, double q) {
    if (A == 0.0 && B == 0.0) return 0.0;
    double total = A + B;
    double hi = std::pow(std::max(1.0, total), 1.0 / q) + 1.0;
    auto rho = [&](double k) { return A * std::pow(k, -p) + B * std::pow(k, -q); };
    int guard = 0;
    while (rho(hi) >= 1.0) {
        hi *= 2.0;
        if (++guard > 2048) throw SolverError("luxemburg: failed to bracket from above");
    }
    double lo = hi;
    guard = 0;
    while (rho(lo) < 1.0) {
        lo *= 0.5;
        if (++guard > 4096) throw SolverError("luxemburg: failed to bracket from below");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-10 * lo; ++it) {
        double mid = 0.5 * (lo + hi);
        (rho(mid) >= 1.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

inline double luxemburg_norm(const Field& u, const WeightTable& w, double p, double q) {
    if (u.all_zero()) return 0.0;
    return detail::luxemburg_from_parts(power_integral(u, &w, p), power_integral(u, nullptr, q), p, q);
}

inline double luxemburg_norm(const CellField& gradu, const WeightTable& w, double p, double q) {
    return detail::luxemburg_from_parts(grad_power_integral(gradu, &w, p), grad_power_integral(gradu, nullptr, q), p, q);
}

struct ModularReport {
    double rho_theta0 = 0.0;
    double q_part = 0.0;
    double rho_theta = 0.0;
    double luxemburg = 0.0;
};

inline ModularReport modular_report(const Field& u, const WeightTable& w, double p, double q) {
    ModularReport r;
    r.rho_theta0 = power_integral(u, &w, p);
    r.q_part = power_integral(u, nullptr, q);
    r.rho_theta = r.rho_theta0 + r.q_part;
    r.luxemburg = u.all_zero() ? 0.0 : detail::luxemburg_from_parts(r.rho_theta0, r.q_part, p, q);
    return r;
}

struct MuckenhouptReport {
    double constant = 0.0;
    int balls = 0;
    double p = 0.0;
};

// Empirical A_p diagnostic: sup over a nested dyadic family of balls of
// avg(a) * avg(a^{1/(1-p)})^{p-1}. Averages run in long double so the
// constant-weight case collapses to 1.0 exactly after the final rounding.
inline MuckenhouptReport check_muckenhoupt(const WeightSpec& a, double p, const Grid& grid, int sample_balls) {
    validate_weight(a, grid);
    if (!(p > 1.0)) throw ConfigError("muckenhoupt: need p > 1");
    if (sample_balls < 1) throw ConfigError("muckenhoupt: need at least one ball");

    double L = grid.extent[0];
    if (grid.dim == 2) L = std::min(L, grid.extent[1]);
    double inv_exp = 1.0 / (1.0 - p);

    long double best = 0.0L;
    int used = 0;
    for (int level = 1; level <= 9 && used < sample_balls; ++level) {
        double r = L / std::pow(2.0, level + 1);
        double step = r;
        for (double cx = r; cx + r <= grid.extent[0] + 1e-12 && used < sample_balls; cx += step) {
            double cy_lo = grid.dim == 2 ? r : 0.0;
            double cy_hi = grid.dim == 2 ? grid.extent[1] - r + 1e-12 : 0.0;
            for (double cy = cy_lo; cy <= cy_hi && used < sample_balls; cy += (grid.dim == 2 ? step : cy_hi + 1.0)) {
                long double sum_a = 0.0L, sum_inv = 0.0L;
                long long count = 0;
                const int m = 32;
                for (int i = 0; i < m; ++i) {
                    double x = cx - r + (2.0 * r) * (i + 0.5) / m;
                    if (grid.dim == 1) {
                        double av = a.evaluate({x, 0.0}, 1);
                        sum_a += av;
                        sum_inv += std::pow(static_cast<long double>(av), static_cast<long double>(inv_exp));
                        ++count;
                        continue;
                    }
                    for (int j = 0; j < m; ++j) {
                        double y = cy - r + (2.0 * r) * (j + 0.5) / m;
                        double dx = x - cx, dy = y - cy;
                        if (dx * dx + dy * dy > r * r) continue;
                        double av = a.evaluate({x, y}, 2);
                        sum_a += av;
                        sum_inv += std::pow(static_cast<long double>(av), static_cast<long double>(inv_exp));
                        ++count;
                    }
                }
                if (count == 0) continue;
                long double mean_a = sum_a / count;
                long double mean_inv = sum_inv / count;
                long double ball_const = mean_a * std::pow(mean_inv, static_cast<long double>(p - 1.0));
                if (ball_const > best) best = ball_const;
                ++used;
            }
        }
    }
    return MuckenhouptReport{static_cast<double>(best), used, p};
}

} // namespace dps
