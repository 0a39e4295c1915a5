#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "dps/grid.hpp"

using dps::build_grid;
using dps::CellField;
using dps::Field;
using dps::Grid;

TEST_CASE("grid construction and spacing") {
    Grid g = build_grid(1, {1.0, 1.0}, 3);
    CHECK(g.h(0) == 0.5);
    CHECK(g.node_count() == 3);
    CHECK(g.cell_count() == 2);
    int interior = 0;
    for (std::size_t k = 0; k < g.node_count(); ++k)
        if (!g.is_boundary(k)) ++interior;
    CHECK(interior == 1);

    Grid fine = build_grid(1, {1.0, 1.0}, 201);
    CHECK(fine.h(0) == Catch::Approx(0.005).epsilon(1e-14));

    Grid g2 = build_grid(2, {1.0, 2.0}, 5);
    CHECK(g2.node_count() == 25);
    CHECK(g2.cell_count() == 16);
    CHECK(g2.h(1) == Catch::Approx(0.5));
    CHECK(g2.cell_volume() == Catch::Approx(0.25 * 0.5));
}

TEST_CASE("grid construction rejects bad input") {
    CHECK_THROWS_AS(build_grid(2, {1.0, 1.0}, 2), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(1, {1.0, 1.0}, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(1, {0.0, 1.0}, 5), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(1, {-1.0, 1.0}, 5), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(3, {1.0, 1.0}, 5), std::invalid_argument);
}

TEST_CASE("fields zero their boundary") {
    Grid g = build_grid(1, {1.0, 1.0}, 5);
    std::vector<double> vals(g.node_count(), 1.0);
    Field f(g, std::move(vals));
    CHECK(f.v.front() == 0.0);
    CHECK(f.v.back() == 0.0);
    CHECK(f.v[2] == 1.0);

    Grid g2 = build_grid(2, {1.0, 1.0}, 4);
    std::vector<double> vals2(g2.node_count(), 1.0);
    Field f2(g2, std::move(vals2));
    for (std::size_t k = 0; k < g2.node_count(); ++k)
        if (g2.is_boundary(k)) CHECK(f2.v[k] == 0.0);
}

TEST_CASE("gradient of the zero field vanishes") {
    Grid g = build_grid(2, {1.0, 1.0}, 6);
    Field u(g);
    CellField grad = dps::gradient(u);
    for (double x : grad.v) CHECK(x == 0.0);
}

TEST_CASE("gradient of the midpoint hat") {
    Grid g = build_grid(1, {1.0, 1.0}, 3);
    Field u(g);
    u.v[1] = 1.0;
    CellField grad = dps::gradient(u);
    REQUIRE(grad.v.size() == 2);
    CHECK(grad.v[0] == Catch::Approx(2.0));
    CHECK(grad.v[1] == Catch::Approx(-2.0));
}

TEST_CASE("gradient tracks the analytic derivative of a sine profile") {
    Grid g = build_grid(1, {1.0, 1.0}, 201);
    Field u(g);
    for (std::size_t k = 0; k < g.node_count(); ++k)
        u.v[k] = std::sin(M_PI * g.node_pos(k)[0]);
    u.zero_boundary();
    CellField grad = dps::gradient(u);
    double worst = 0.0;
    for (std::size_t c = 0; c < g.cell_count(); ++c) {
        double xm = g.cell_center(c)[0];
        worst = std::max(worst, std::fabs(grad.v[c] - M_PI * std::cos(M_PI * xm)));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("2d gradient of a separable profile") {
    Grid g = build_grid(2, {1.0, 2.0}, 41);
    Field u(g);
    for (std::size_t k = 0; k < g.node_count(); ++k) {
        auto p = g.node_pos(k);
        u.v[k] = std::sin(M_PI * p[0]) * std::sin(M_PI * p[1] / 2.0);
    }
    u.zero_boundary();
    CellField grad = dps::gradient(u);
    REQUIRE(grad.components == 2);
    double worst = 0.0;
    for (std::size_t c = 0; c < g.cell_count(); ++c) {
        auto m = g.cell_center(c);
        double gx = M_PI * std::cos(M_PI * m[0]) * std::sin(M_PI * m[1] / 2.0);
        double gy = std::sin(M_PI * m[0]) * (M_PI / 2.0) * std::cos(M_PI * m[1] / 2.0);
        worst = std::max(worst, std::fabs(grad.v[2 * c] - gx));
        worst = std::max(worst, std::fabs(grad.v[2 * c + 1] - gy));
    }
    CHECK(worst < 5e-3);
}

TEST_CASE("integration of simple profiles") {
    Grid g = build_grid(1, {1.0, 1.0}, 201);
    std::vector<double> ones(g.node_count(), 1.0);
    CHECK(dps::integrate(g, ones) == Catch::Approx(1.0).epsilon(1e-13));

    std::vector<double> linear(g.node_count());
    for (std::size_t k = 0; k < g.node_count(); ++k) linear[k] = g.node_pos(k)[0];
    CHECK(dps::integrate(g, linear) == Catch::Approx(0.5).epsilon(1e-13));

    std::vector<double> sq(g.node_count());
    for (std::size_t k = 0; k < g.node_count(); ++k) {
        double s = std::sin(M_PI * g.node_pos(k)[0]);
        sq[k] = s * s;
    }
    CHECK(std::fabs(dps::integrate(g, sq) - 0.5) < 1e-4);

    Grid g2 = build_grid(2, {1.0, 2.0}, 11);
    std::vector<double> ones2(g2.node_count(), 1.0);
    CHECK(dps::integrate(g2, ones2) == Catch::Approx(2.0).epsilon(1e-13));
}

TEST_CASE("integrate is linear") {
    Grid g = build_grid(1, {1.0, 1.0}, 33);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> f(g.node_count()), h(g.node_count()), mix(g.node_count());
    for (std::size_t k = 0; k < g.node_count(); ++k) {
        f[k] = dist(rng);
        h[k] = dist(rng);
    }
    double a = 0.37, b = -1.91;
    for (std::size_t k = 0; k < g.node_count(); ++k) mix[k] = a * f[k] + b * h[k];
    double lhs = dps::integrate(g, mix);
    double rhs = a * dps::integrate(g, f) + b * dps::integrate(g, h);
    CHECK(lhs == Catch::Approx(rhs).margin(1e-14));
}

TEST_CASE("gradient is linear and scales exactly") {
    Grid g = build_grid(2, {1.0, 1.0}, 9);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Field u(g), w(g);
    for (std::size_t k = 0; k < g.node_count(); ++k) {
        if (g.is_boundary(k)) continue;
        u.v[k] = dist(rng);
        w.v[k] = dist(rng);
    }
    Field mix(g);
    for (std::size_t k = 0; k < g.node_count(); ++k) mix.v[k] = 2.5 * u.v[k] - 0.75 * w.v[k];
    CellField gm = dps::gradient(mix), gu = dps::gradient(u), gw = dps::gradient(w);
    for (std::size_t i = 0; i < gm.v.size(); ++i)
        CHECK(gm.v[i] == Catch::Approx(2.5 * gu.v[i] - 0.75 * gw.v[i]).margin(1e-13));

    Field doubled(g);
    for (std::size_t k = 0; k < g.node_count(); ++k) doubled.v[k] = 2.0 * u.v[k];
    CellField gd = dps::gradient(doubled);
    for (std::size_t i = 0; i < gd.v.size(); ++i) CHECK(gd.v[i] == 2.0 * gu.v[i]);

    Field tripled(g);
    for (std::size_t k = 0; k < g.node_count(); ++k) tripled.v[k] = 3.0 * u.v[k];
    CellField gt = dps::gradient(tripled);
    for (std::size_t i = 0; i < gt.v.size(); ++i)
        CHECK(gt.v[i] == Catch::Approx(3.0 * gu.v[i]).margin(1e-12));
}

TEST_CASE("cell field integration") {
    Grid g = build_grid(1, {1.0, 1.0}, 5);
    CellField f(g, 1);
    for (double& x : f.v) x = 2.0;
    CHECK(dps::integrate(f) == Catch::Approx(2.0));
    CellField vec(g, 2);
    CHECK_THROWS_AS(dps::integrate(vec), std::invalid_argument);
}
