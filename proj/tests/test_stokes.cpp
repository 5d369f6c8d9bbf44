#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nsctrl/stokes.hpp"

using namespace nsctrl;

namespace {

Grid make_grid(int n, int nt) {
    return build_grid(n, n, nt, 1.0, RegionSpec::parse("rect 0.3 0.3 0.7 0.7"),
                      RegionSpec::parse("disc 0.5 0.5 0.12"));
}

// relative mismatch of two pairings, guarded against both vanishing
double rel_gap(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / scale;
}

SourceFn sampled(const std::vector<Vec>& samples) {
    return [&samples](int k, Vec& out) { out += samples[k]; };
}

}  // namespace

TEST_CASE("projection is idempotent, contractive and kills gradients") {
    const Grid g = make_grid(16, 8);
    const StokesOperator op(g, g.dt);

    Rng rng(7);
    Vec q(g.nfaces());
    for (int f = 0; f < g.nfaces(); ++f) q[f] = rng.uniform(-1.0, 1.0);

    const Vec p = op.project(q);
    CHECK(max_divergence_rel(g, p) <= 1e-10);
    CHECK(norm_l2(g, p) <= norm_l2(g, q) * (1 + 1e-12));
    const Vec pp = op.project(p);
    CHECK(norm_l2(g, Vec(pp - p)) <= 1e-10 * norm_l2(g, p));

    // a discrete pressure gradient projects to zero
    Vec psi(g.ncells());
    for (int c = 0; c < g.ncells(); ++c) psi[c] = rng.uniform(-1.0, 1.0);
    Vec grad = Vec::Zero(g.nfaces());
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i)
            grad[g.iu(i, j)] = (psi[g.ic(i, j)] - psi[g.ic(i - 1, j)]) / g.hx;
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            grad[g.iv(i, j)] = (psi[g.ic(i, j)] - psi[g.ic(i, j - 1)]) / g.hy;
    CHECK(norm_l2(g, op.project(grad)) <= 1e-10 * norm_l2(g, grad));
}

TEST_CASE("free decay is monotone and exactly solenoidal") {
    const Grid g = make_grid(16, 32);
    const StokesOperator op(g, g.dt);
    Rng rng(1);
    const Vec y0 = random_stream_velocity(g, rng);
    CHECK(norm_l2(g, y0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(max_divergence_rel(g, y0) <= 1e-12);

    const StateTrajectory tr = solve_forward(op, y0);
    CHECK(trajectory_max_div(g, tr) <= 1e-10);
    for (int k = 1; k <= g.nt; ++k)
        CHECK(norm_l2(g, tr.vel[k]) <=
              norm_l2(g, tr.vel[k - 1]) * (1 + 1e-12));
    CHECK(norm_l2(g, tr.vel[g.nt]) < norm_l2(g, tr.vel[0]));
}

TEST_CASE("forced runs stay solenoidal and deterministic") {
    const Grid g = make_grid(16, 32);
    const StokesOperator op(g, g.dt);
    Rng rng(3);
    const std::vector<Vec> f = random_smooth_source(g, rng);
    REQUIRE(static_cast<int>(f.size()) == g.nt + 1);

    const StateTrajectory a =
        solve_forward(op, Vec::Zero(g.nfaces()), sampled(f));
    CHECK(trajectory_max_div(g, a) <= 1e-10);
    CHECK(norm_l2(g, a.vel[g.nt]) > 0.0);

    const StateTrajectory b =
        solve_forward(op, Vec::Zero(g.nfaces()), sampled(f));
    CHECK(norm_l2(g, Vec(a.vel[g.nt] - b.vel[g.nt])) == 0.0);
}

TEST_CASE("forward and backward runs are discretely dual") {
    // <y(T), phiT> - <y(0), phi(0)> = sum_{k<nt} dt <f(t_k), phi(t_k)>
    // with y driven by f and phi undriven (projected endpoints on both
    // sides); the identity holds to rounding because both directions share
    // one factorization of the same symmetric step matrix.
    for (int trial = 0; trial < 3; ++trial) {
        const Grid g = make_grid(16, 32);
        const StokesOperator op(g, g.dt);
        Rng r1(100 + trial), r2(200 + trial), r3(300 + trial);
        const Vec y0 = random_stream_velocity(g, r1);
        const Vec phiT = random_stream_velocity(g, r2);
        const std::vector<Vec> f = random_smooth_source(g, r3);

        const StateTrajectory y = solve_forward(op, y0, sampled(f));
        const StateTrajectory phi = solve_adjoint(op, phiT);
        double lhs = 0;
        for (int k = 0; k < g.nt; ++k)
            lhs += g.dt * dot_l2(g, f[k], phi.vel[k]);
        const double rhs = dot_l2(g, y.vel[g.nt], phi.vel[g.nt]) -
                           dot_l2(g, y.vel[0], phi.vel[0]);
        CHECK(rel_gap(lhs, rhs) <= 1e-10);
    }
    // and once on the reference-size mesh
    {
        const Grid g = make_grid(32, 64);
        const StokesOperator op(g, g.dt);
        Rng r1(11), r2(12), r3(13);
        const Vec y0 = random_stream_velocity(g, r1);
        const Vec phiT = random_stream_velocity(g, r2);
        const std::vector<Vec> f = random_smooth_source(g, r3);
        const StateTrajectory y = solve_forward(op, y0, sampled(f));
        const StateTrajectory phi = solve_adjoint(op, phiT);
        double lhs = 0;
        for (int k = 0; k < g.nt; ++k)
            lhs += g.dt * dot_l2(g, f[k], phi.vel[k]);
        const double rhs = dot_l2(g, y.vel[g.nt], phi.vel[g.nt]) -
                           dot_l2(g, y.vel[0], phi.vel[0]);
        CHECK(rel_gap(lhs, rhs) <= 1e-10);
    }
}

TEST_CASE("backward sources pair with the free forward run") {
    // sum_{k=1..nt} dt <g(t_k), y(t_k)> = <y(0), phi(0)> - <y(T), phiT>
    const Grid g = make_grid(16, 32);
    const StokesOperator op(g, g.dt);
    Rng r1(21), r2(22);
    const Vec y0 = random_stream_velocity(g, r1);
    const std::vector<Vec> gs = random_smooth_source(g, r2);

    const StateTrajectory y = solve_forward(op, y0);
    const StateTrajectory phi =
        solve_adjoint(op, Vec::Zero(g.nfaces()), sampled(gs));
    double lhs = 0;
    for (int k = 1; k <= g.nt; ++k) lhs += g.dt * dot_l2(g, gs[k], y.vel[k]);
    const double rhs = dot_l2(g, y.vel[0], phi.vel[0]) -
                       dot_l2(g, y.vel[g.nt], phi.vel[g.nt]);
    CHECK(rel_gap(lhs, rhs) <= 1e-10);
}

TEST_CASE("manufactured solution converges in space and time") {
    const auto final_error = [](const Grid& g) {
        const StokesOperator op(g, g.dt);
        const SourceFn f = [&g](int k, Vec& out) {
            out += mms_source(g, g.t(k));
        };
        const StateTrajectory tr = solve_forward(op, mms_velocity(g, 0.0), f);
        return norm_l2(g, Vec(tr.vel[g.nt] - mms_velocity(g, g.T)));
    };

    // spatial refinement at a fine fixed time mesh
    const double e8 = final_error(make_grid(8, 256));
    const double e16 = final_error(make_grid(16, 256));
    const double p_space = std::log2(e8 / e16);
    CHECK(p_space > 1.5);
    CHECK(p_space < 2.5);

    // temporal refinement against a time-refined run on the same grid
    const auto final_state = [](const Grid& g) {
        const StokesOperator op(g, g.dt);
        const SourceFn f = [&g](int k, Vec& out) {
            out += mms_source(g, g.t(k));
        };
        return Vec(solve_forward(op, mms_velocity(g, 0.0), f).vel[g.nt]);
    };
    const Grid gref = make_grid(16, 256);
    const Vec ref = final_state(gref);
    const double t8 = norm_l2(gref, Vec(final_state(make_grid(16, 8)) - ref));
    const double t16 =
        norm_l2(gref, Vec(final_state(make_grid(16, 16)) - ref));
    const double t32 =
        norm_l2(gref, Vec(final_state(make_grid(16, 32)) - ref));
    const double p_time = 0.5 * (std::log2(t8 / t16) + std::log2(t16 / t32));
    CHECK(p_time > 0.75);
    CHECK(p_time < 1.25);
}

TEST_CASE("regularity quotient is stable across random sources") {
    const Grid g = make_grid(16, 32);
    const StokesOperator op(g, g.dt);
    double lo = 1e300, hi = 0;
    for (int seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);
        const std::vector<Vec> f = random_smooth_source(g, rng);
        const StateTrajectory u =
            solve_forward(op, Vec::Zero(g.nfaces()), sampled(f));
        const double r = regularity_ratio(g, u, f);
        CHECK(std::isfinite(r));
        CHECK(r > 0.0);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    // the quotient is a discrete maximal-regularity constant: it may move
    // with the source but must stay within a uniform band
    CHECK(hi <= 100.0 * lo);

    // zero source, zero solution: the quotient is defined as zero
    const StateTrajectory z = solve_forward(op, Vec::Zero(g.nfaces()));
    const std::vector<Vec> zf(g.nt + 1, Vec::Zero(g.nfaces()));
    CHECK(regularity_ratio(g, z, zf) == 0.0);
}
