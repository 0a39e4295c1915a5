#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>
#include <random>

#include "dps/dps.hpp"

namespace {

const dps::SpectrumContext& shared_ctx() {
    static dps::SpectrumContext ctx = [] {
        dps::Grid g = dps::build_grid(1, {1.0, 1.0}, 61);
        dps::WeightSpec bump{dps::WeightKind::Bump, 1.0, 0.5, 2.0, 0.5, {0.5, 0.5}};
        return dps::prepare_context(g, dps::Exponents{}, bump);
    }();
    return ctx;
}

// smooth low-mode perturbation: nodewise noise would blow up the gradient terms
dps::Field noisy(const dps::Field& base, std::mt19937& eng, double amp) {
    std::uniform_real_distribution<double> dist(-amp, amp);
    dps::Field f = base;
    double c[4] = {dist(eng), dist(eng), dist(eng), dist(eng)};
    for (std::size_t k = 0; k < f.grid.node_count(); ++k) {
        if (f.grid.is_boundary(k)) continue;
        double x = f.grid.node_pos(k)[0];
        for (int m = 0; m < 4; ++m) f.v[k] += c[m] * std::sin((m + 1) * M_PI * x);
    }
    return f;
}

double manifold_identity(const dps::Field& u, const dps::SpectrumContext& ctx, double beta) {
    double p = ctx.exps.p, q = ctx.exps.q;
    return (1.0 / q - 1.0 / p) * dps::G_beta(u, ctx, beta);
}

} // namespace

TEST_CASE("fibering projection solves its defining equation") {
    const dps::SpectrumContext& ctx = shared_ctx();
    double lp = ctx.consts.lambda1_ap, lq = ctx.consts.lambda1_q;
    double p = ctx.exps.p, q = ctx.exps.q;
    std::mt19937 eng(2024);

    // one ray per sign branch, 50 admissible directions each
    struct Branch {
        double alpha, beta;
        const dps::Field* base;
        bool negative;
    };
    Branch branches[2] = {{0.5 * lp, 1.5 * lq, &ctx.eig_q.phi, true},
                          {1.5 * lp, 0.5 * lq, &ctx.eig_pa.phi, false}};
    for (const Branch& br : branches) {
        for (int trial = 0; trial < 50; ++trial) {
            dps::Field v = noisy(*br.base, eng, 0.05);
            double h = dps::H_alpha(v, ctx, br.alpha);
            double g = dps::G_beta(v, ctx, br.beta);
            REQUIRE(h * g < 0.0);
            dps::FiberingDiagnostics d = dps::nehari_project(v, ctx, br.alpha, br.beta);
            CHECK(d.t > 0.0);
            CHECK(d.h == h);
            CHECK(d.g == g);
            CHECK(d.negative_branch == br.negative);
            double res = std::pow(d.t, p) * h + std::pow(d.t, q) * g;
            CHECK(std::fabs(res) < 1e-10 * (std::fabs(h) + std::fabs(g)));
            double e = std::pow(d.t, p) * h / p + std::pow(d.t, q) * g / q;
            CHECK(d.energy_at_t == Catch::Approx(e).epsilon(1e-12));
        }
    }
}

TEST_CASE("fibering projection is idempotent") {
    const dps::SpectrumContext& ctx = shared_ctx();
    double lp = ctx.consts.lambda1_ap, lq = ctx.consts.lambda1_q;
    std::mt19937 eng(77);
    double alpha = 1.5 * lp, beta = 0.5 * lq;
    for (int trial = 0; trial < 40; ++trial) {
        dps::Field v = noisy(ctx.eig_pa.phi, eng, 0.05);
        dps::FiberingDiagnostics d = dps::nehari_project(v, ctx, alpha, beta);
        dps::Field u = v;
        for (double& x : u.v) x *= d.t;
        dps::FiberingDiagnostics again = dps::nehari_project(u, ctx, alpha, beta);
        CHECK(std::fabs(again.t - 1.0) < 1e-10);
    }
}

TEST_CASE("fibering projection rejects inadmissible directions") {
    const dps::SpectrumContext& ctx = shared_ctx();
    double lp = ctx.consts.lambda1_ap, lq = ctx.consts.lambda1_q;

    dps::Field zero(ctx.grid);
    CHECK_THROWS_AS(dps::nehari_project(zero, ctx, lp, lq), std::domain_error);

    // both parts positive below both eigenvalues
    CHECK_THROWS_AS(dps::nehari_project(ctx.eig_q.phi, ctx, 0.5 * lp, 0.5 * lq), std::domain_error);

    // both parts negative for a direction past both thresholds
    double h = dps::H_alpha(ctx.eig_q.phi, ctx, 3.0 * lp);
    double g = dps::G_beta(ctx.eig_q.phi, ctx, 1.5 * lq);
    REQUIRE(h < 0.0);
    REQUIRE(g < 0.0);
    CHECK_THROWS_AS(dps::nehari_project(ctx.eig_q.phi, ctx, 3.0 * lp, 1.5 * lq), std::domain_error);
}

TEST_CASE("constrained ground state on the positive branch") {
    const dps::SpectrumContext& ctx = shared_ctx();
    double alpha = ctx.consts.lambda1_ap + 1.0;
    double beta = ctx.consts.lambda1_q - 1.0;
    dps::SolveResult r = dps::nehari_ground_state(ctx, alpha, beta, ctx.solver);
    CHECK(r.converged);
    CHECK(r.nontrivial);
    CHECK(r.positive_interior);
    CHECK(r.on_nehari);
    CHECK(r.energy > 0.0);
    CHECK(r.grad_norm <= ctx.solver.residual_tol);
    CHECK(r.note.empty());
    double ident = manifold_identity(r.u, ctx, beta);
    CHECK(std::fabs(r.energy - ident) <= 1e-8 * std::max(std::fabs(r.energy), std::fabs(ident)));
}

TEST_CASE("constrained ground state on the negative branch matches the free minimizer") {
    const dps::SpectrumContext& ctx = shared_ctx();
    double alpha = 0.5 * ctx.consts.lambda1_ap;
    double beta = 1.5 * ctx.consts.lambda1_q;
    dps::SolveResult neh = dps::nehari_ground_state(ctx, alpha, beta, ctx.solver);
    dps::SolveResult free_min = dps::minimize_global(ctx, alpha, beta, ctx.solver);
    REQUIRE(neh.converged);
    REQUIRE(free_min.converged);
    CHECK(neh.energy < 0.0);
    CHECK(free_min.nontrivial);
    // every nonzero critical point sits on the constraint set, so the two
    // solvers must land on the same ground state
    CHECK(std::fabs(neh.energy - free_min.energy) <= 1e-4 * std::fabs(free_min.energy));
}

TEST_CASE("constrained ground state at the second resonance value") {
    const dps::SpectrumContext& ctx = shared_ctx();
    double alpha = 0.5 * (ctx.consts.lambda1_ap + ctx.consts.s_tilde_plus);
    double beta = ctx.consts.lambda1_q;
    dps::SolveResult r = dps::nehari_ground_state(ctx, alpha, beta, ctx.solver);
    CHECK(r.converged);
    CHECK(r.nontrivial);
    CHECK(r.positive_interior);
    CHECK(r.energy > 0.0);
}

TEST_CASE("no admissible direction below both eigenvalues") {
    const dps::SpectrumContext& ctx = shared_ctx();
    double alpha = 0.5 * ctx.consts.lambda1_ap;
    double beta = 0.5 * ctx.consts.lambda1_q;
    CHECK_THROWS_AS(dps::nehari_ground_state(ctx, alpha, beta, ctx.solver), dps::ManifoldEmpty);
}

TEST_CASE("constrained descent never raises the projected seed energy") {
    const dps::SpectrumContext& ctx = shared_ctx();
    double alpha = ctx.consts.lambda1_ap + 1.0;
    double beta = ctx.consts.lambda1_q - 1.0;
    dps::FiberingDiagnostics seed = dps::nehari_project(ctx.eig_pa.phi, ctx, alpha, beta);
    dps::SolveResult r = dps::nehari_ground_state(ctx, alpha, beta, ctx.solver);
    CHECK(r.energy <= seed.energy_at_t + 1e-9 * std::fabs(seed.energy_at_t));
}

TEST_CASE("constrained ground state is deterministic per seed") {
    const dps::SpectrumContext& ctx = shared_ctx();
    double alpha = ctx.consts.lambda1_ap + 1.0;
    double beta = ctx.consts.lambda1_q - 1.0;
    dps::SolveResult a = dps::nehari_ground_state(ctx, alpha, beta, ctx.solver);
    dps::SolveResult b = dps::nehari_ground_state(ctx, alpha, beta, ctx.solver);
    CHECK(a.energy == b.energy);
    CHECK(a.iterations == b.iterations);
    CHECK(a.u.v == b.u.v);

    dps::SolverOpts other = ctx.solver;
    other.seed = 7;
    dps::SolveResult c = dps::nehari_ground_state(ctx, alpha, beta, other);
    REQUIRE(c.converged);
    CHECK(std::fabs(c.energy - a.energy) <= 1e-4 * std::fabs(a.energy));
}
