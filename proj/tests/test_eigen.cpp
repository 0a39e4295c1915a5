#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cmath>
#include <cstddef>
#include <vector>

#include "dps/dps.hpp"
#include "oracles.hpp"

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

dps::Grid unit_interval(int n) { return dps::build_grid(1, {1.0, 1.0}, n); }

double rel_diff(double a, double b) { return std::fabs(a - b) / std::fabs(b); }

} // namespace

TEST_CASE("linear eigenvalue against the tridiagonal pencil oracle") {
    dps::Grid g = unit_interval(201);
    dps::WeightSpec one;
    double oracle = oracles::pencil_smallest(oracles::assemble_linear_pencil(g, one));

    // the sampled sine diagonalizes the constant-coefficient pencil, so the
    // oracle must match the closed-form symbol of the discretization
    double h = g.h(0);
    double symbol = 6.0 * (1.0 - std::cos(M_PI * h)) / (h * h * (2.0 + std::cos(M_PI * h)));
    CHECK(rel_diff(oracle, symbol) < 1e-9);
    CHECK(oracle == Catch::Approx(9.86980733836559).margin(1e-6));

    auto t0 = std::chrono::steady_clock::now();
    dps::EigenResult res = dps::first_eigenpair(one, 2.0, g);
    double elapsed = seconds_since(t0);
    CHECK(rel_diff(res.lambda, oracle) < 5e-3);
    CHECK(res.lambda >= oracle - 1e-9); // oracle is the exact discrete minimum
    CHECK(res.residual <= 1e-9);
    CHECK(elapsed < 5.0);
}

TEST_CASE("weighted linear eigenvalue against the pencil oracle") {
    dps::Grid g = unit_interval(201);
    dps::WeightSpec bump{dps::WeightKind::Bump, 1.0, 0.5, 2.0, 0.5, {0.5, 0.5}};
    double oracle = oracles::pencil_smallest(oracles::assemble_linear_pencil(g, bump));

    dps::EigenResult res = dps::first_eigenpair(bump, 2.0, g);
    CHECK(rel_diff(res.lambda, oracle) < 5e-3);
    CHECK(res.lambda >= oracle - 1e-9);
}

TEST_CASE("nonlinear eigenvalue against the shooting oracle") {
    double r = 3.0;
    double half_period = oracles::shoot_half_period(r, 1e-4);
    // closed form: pi_3 = 4 pi / (3 sqrt 3)
    double exact = 4.0 * M_PI / (3.0 * std::sqrt(3.0));
    REQUIRE(rel_diff(half_period, exact) < 1e-6);
    double oracle = (r - 1.0) * std::pow(half_period, r);
    REQUIRE(oracle == Catch::Approx(28.28876197600255).margin(1e-4));

    dps::Grid g = unit_interval(201);
    auto t0 = std::chrono::steady_clock::now();
    dps::EigenResult res = dps::first_eigenpair(dps::WeightSpec{}, r, g);
    double elapsed = seconds_since(t0);
    CHECK(rel_diff(res.lambda, oracle) < 1e-2);
    CHECK(elapsed < 30.0);
}

TEST_CASE("rayleigh quotient of the two-cell hat is 12") {
    dps::Grid g = unit_interval(3);
    dps::Field hat(g);
    hat.v[1] = 1.0;
    CHECK(dps::rayleigh_quotient(dps::WeightSpec{}, 2.0, hat) == Catch::Approx(12.0).epsilon(1e-12));
}

TEST_CASE("rayleigh quotient input validation") {
    dps::Grid g = unit_interval(9);
    dps::Field zero(g);
    CHECK_THROWS_AS(dps::rayleigh_quotient(dps::WeightSpec{}, 2.0, zero), std::invalid_argument);
    dps::Field v(g);
    v.v[4] = 1.0;
    CHECK_THROWS_AS(dps::rayleigh_quotient(dps::WeightSpec{}, 1.0, v), std::invalid_argument);
    CHECK_THROWS_AS(dps::first_eigenpair(dps::WeightSpec{}, 0.5, g), std::invalid_argument);
}

TEST_CASE("eigenpair determinism and restart bookkeeping") {
    dps::Grid g = unit_interval(41);
    dps::EigenOpts opts;
    opts.seed = 7;
    dps::EigenResult a = dps::first_eigenpair(dps::WeightSpec{}, 2.0, g, opts);
    dps::EigenResult b = dps::first_eigenpair(dps::WeightSpec{}, 2.0, g, opts);
    CHECK(a.lambda == b.lambda);
    CHECK(a.phi.v == b.phi.v);
    CHECK(a.restarts_used == opts.restarts);

    opts.seed = 1234;
    dps::EigenResult c = dps::first_eigenpair(dps::WeightSpec{}, 2.0, g, opts);
    CHECK(rel_diff(c.lambda, a.lambda) < 1e-6);
}

TEST_CASE("eigenfunction shape invariants") {
    dps::Grid g = unit_interval(101);
    dps::EigenResult res = dps::first_eigenpair(dps::WeightSpec{}, 2.0, g);
    CHECK(res.phi.max_abs() == Catch::Approx(1.0).epsilon(1e-14));
    for (std::size_t k = 0; k < g.node_count(); ++k) {
        if (g.is_boundary(k)) CHECK(res.phi.v[k] == 0.0);
        else CHECK(res.phi.v[k] > 0.0);
    }
    // the sampled sine is the known minimizer shape; sup-normalized match
    double worst = 0.0;
    for (std::size_t k = 0; k < g.node_count(); ++k) {
        double x = g.node_pos(k)[0];
        worst = std::max(worst, std::fabs(res.phi.v[k] - std::sin(M_PI * x)));
    }
    CHECK(worst < 5e-3);
}

TEST_CASE("rayleigh scale invariance in the weight") {
    dps::Grid g = unit_interval(41);
    dps::WeightSpec two{dps::WeightKind::Constant, 2.0, 0.5, 2.0, 0.5, {0.5, 0.5}};
    dps::EigenResult a = dps::first_eigenpair(dps::WeightSpec{}, 3.0, g);
    dps::EigenResult b = dps::first_eigenpair(two, 3.0, g);
    CHECK(rel_diff(a.lambda, b.lambda) < 1e-7);
}

TEST_CASE("square membrane eigenvalue near the continuum value") {
    dps::Grid g = dps::build_grid(2, {1.0, 1.0}, 41);
    dps::EigenOpts opts;
    opts.tol = 1e-8;
    dps::EigenResult res = dps::first_eigenpair(dps::WeightSpec{}, 2.0, g, opts);
    CHECK(rel_diff(res.lambda, 2.0 * M_PI * M_PI) < 0.02);
}

TEST_CASE("threshold constants are ordered and consistent") {
    dps::Grid g = unit_interval(101);
    dps::Exponents e;
    dps::WeightSpec bump{dps::WeightKind::Bump, 1.0, 0.5, 2.0, 0.5, {0.5, 0.5}};
    dps::SpectrumContext ctx = dps::prepare_context(g, e, bump);
    const dps::SpectrumConstants& c = ctx.consts;

    CHECK(c.lambda1_ap > 0.0);
    CHECK(c.lambda1_q > 0.0);
    CHECK(c.s_tilde_plus >= c.lambda1_ap);
    CHECK(c.s_tilde_minus >= c.lambda1_q);
    CHECK(c.s_star_minus <= c.s_star);
    CHECK(c.s_star <= c.s_star_plus);
    CHECK(c.weight_inf_positive);

    REQUIRE(ctx.li.holds);
    CHECK(c.s_tilde_plus - c.lambda1_ap >= ctx.li.threshold);
    CHECK(c.s_tilde_minus - c.lambda1_q >= ctx.li.threshold);

    // the two interval ends follow from the tilde constants by definition
    CHECK(c.s_star_minus == Catch::Approx(c.lambda1_ap - c.s_tilde_minus).margin(1e-12));
    CHECK(c.s_star_plus == Catch::Approx(c.s_tilde_plus - c.lambda1_q).margin(1e-12));
}

TEST_CASE("alignment diagnostic separates shapes") {
    dps::Grid g = unit_interval(41);
    dps::Field sine(g), hat(g);
    for (std::size_t k = 0; k < g.node_count(); ++k) {
        double x = g.node_pos(k)[0];
        sine.v[k] = std::sin(M_PI * x);
        hat.v[k] = x < 0.5 ? 2.0 * x : 2.0 * (1.0 - x);
    }
    sine.zero_boundary();
    hat.zero_boundary();

    dps::LIReport different = dps::li_diagnostic(sine, hat);
    CHECK(different.holds);
    CHECK(different.alignment_residual > different.threshold);

    dps::Field doubled = sine;
    for (double& x : doubled.v) x *= 2.0;
    dps::LIReport aligned = dps::li_diagnostic(doubled, sine);
    CHECK_FALSE(aligned.holds);
    CHECK(aligned.best_k == Catch::Approx(2.0).epsilon(1e-12));
    CHECK(aligned.alignment_residual < 1e-12);
}
