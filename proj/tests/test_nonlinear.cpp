#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "nsctrl/nonlinear.hpp"

using namespace nsctrl;

namespace {

struct Setup {
    Grid g;
    EtaField eta;
    TimeProfile tp;
    WeightSet w;
};

Setup make_setup(int n, int nt, double s = 1e-3) {
    Setup st{build_grid(n, n, nt, 1.0, RegionSpec::parse("rect 0.3 0.3 0.7 0.7"),
                        RegionSpec::parse("disc 0.5 0.5 0.12")),
             {}, {}, {}};
    st.eta = build_eta(st.g);
    st.tp = build_time_profile(nt, 1.0);
    st.w = eval_weights(st.eta, st.tp, WeightParams{s, 1.0, 60.0});
    return st;
}

PicardOptions picard_opts(double cg_tol, int cg_max, double tol,
                          int max_iter) {
    PicardOptions o;
    o.hum.control_index = 2;
    o.hum.eps = 1e-4;
    o.hum.cg_tol = cg_tol;
    o.hum.cg_max_iter = cg_max;
    o.tol = tol;
    o.max_iter = max_iter;
    return o;
}

// closed-form (y . grad) y for the manufactured velocity at time t
Vec exact_convection(const Grid& g, double t) {
    using std::numbers::pi;
    const double e2 = std::exp(-2 * t);
    const auto fx = [&](double x, double y) {
        const double sx = std::sin(pi * x), s2x = std::sin(2 * pi * x);
        const double sy = std::sin(pi * y), s2y = std::sin(2 * pi * y);
        const double c2y = std::cos(2 * pi * y);
        return pi * pi * pi * s2x * sx * sx *
               (s2y * s2y - 2 * sy * sy * c2y) * e2;
    };
    Vec out = Vec::Zero(g.nfaces());
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i)
            out[g.iu(i, j)] = fx(g.xn(i), g.yc(j));
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            out[g.iv(i, j)] = fx(g.yn(j), g.xc(i));  // mirrored component
    return out;
}

}  // namespace

TEST_CASE("the convection form is bilinear to rounding") {
    const Setup st = make_setup(16, 8);
    Rng r1(4), r2(5);
    const Vec a = random_stream_velocity(st.g, r1);
    Vec y(st.g.nfaces());
    for (int f = 0; f < st.g.nfaces(); ++f) y[f] = r2.uniform(-1.0, 1.0);

    const Vec base = convect_bilinear(st.g, a, y);

    // doubling either slot doubles the output bit for bit
    const Vec a2 = convect_bilinear(st.g, Vec(2 * a), y);
    const Vec y2 = convect_bilinear(st.g, a, Vec(2 * y));
    for (int f = 0; f < st.g.nfaces(); ++f) {
        CHECK(a2[f] == 2 * base[f]);
        CHECK(y2[f] == 2 * base[f]);
    }

    // a non-dyadic factor agrees to rounding
    const Vec a3 = convect_bilinear(st.g, Vec(3 * a), y);
    double max_rel = 0;
    for (int f = 0; f < st.g.nfaces(); ++f) {
        const double want = 3 * base[f];
        const double sc =
            std::max({std::abs(want), std::abs(a3[f]), 1e-300});
        max_rel = std::max(max_rel, std::abs(a3[f] - want) / sc);
    }
    CHECK(max_rel <= 1e-14);

    CHECK(norm_l2(st.g, convect(st.g, Vec(Vec::Zero(st.g.nfaces())))) == 0.0);
}

TEST_CASE("discrete convection converges to the closed form") {
    const double t = 0.3;
    const auto error_at = [&](int n) {
        const Grid g = build_grid(n, n, 8, 1.0,
                                  RegionSpec::parse("rect 0.3 0.3 0.7 0.7"),
                                  RegionSpec::parse("disc 0.5 0.5 0.12"));
        const Vec y = mms_velocity(g, t);
        const Vec got = convect(g, y);
        const Vec want = exact_convection(g, t);
        return norm_l2(g, Vec(got - want));
    };
    const double e16 = error_at(16);
    const double e32 = error_at(32);
    const double order = std::log2(e16 / e32);
    CHECK(order > 1.5);
    CHECK(order < 2.5);
}

TEST_CASE("a zero start converges immediately with nothing to do") {
    const Setup st = make_setup(16, 32);
    const StokesOperator op(st.g, st.g.dt);
    const NonlinearResult r = solve_nonlinear(
        op, st.w, Vec::Zero(st.g.nfaces()), picard_opts(1e-8, 50, 1e-10, 6));
    CHECK(r.converged);
    CHECK(!r.diverged);
    REQUIRE(r.history.size() == 1);
    CHECK(r.history[0].residual == 0.0);
    CHECK(r.history[0].terminal_norm == 0.0);
    CHECK(r.history[0].source_norm == 0.0);
    CHECK(r.resim_terminal == 0.0);
}

TEST_CASE("small data contracts onto a controlled fixed point") {
    const Setup st = make_setup(16, 32);
    const StokesOperator op(st.g, st.g.dt);
    Rng rng(6);
    const Vec y0 = Vec(1e-3 * random_stream_velocity(st.g, rng));

    const NonlinearResult r =
        solve_nonlinear(op, st.w, y0, picard_opts(1e-8, 150, 1e-8, 12));
    REQUIRE(r.converged);
    CHECK(!r.diverged);
    REQUIRE(r.history.size() >= 2);

    // the first pass has no frozen source yet
    CHECK(r.history[0].source_norm == 0.0);
    CHECK(r.history[1].source_norm > 0.0);
    for (std::size_t i = 1; i < r.history.size(); ++i)
        CHECK(r.history[i].residual < r.history[i - 1].residual);

    // replaying the control through the nonlinear dynamics lands close to
    // the last linearized terminal state
    CHECK(r.resim_terminal <= 2 * r.last.terminal_norm + 1e-14);
    CHECK(std::isfinite(r.history.back().source_norm));
}

TEST_CASE("violent data is reported as divergent, not as an exception") {
    const Setup st = make_setup(16, 32);
    const StokesOperator op(st.g, st.g.dt);
    Rng rng(7);
    const Vec y0 = Vec(1e8 * random_stream_velocity(st.g, rng));

    const NonlinearResult r =
        solve_nonlinear(op, st.w, y0, picard_opts(1e-6, 30, 1e-10, 6));
    CHECK(r.diverged);
    CHECK(!r.converged);
    CHECK(!r.history.empty());
}

TEST_CASE("the amplitude sweep brackets the blow-up threshold") {
    const Setup st = make_setup(8, 16);
    const StokesOperator op(st.g, st.g.dt);
    Rng rng(8);
    const Vec unit = random_stream_velocity(st.g, rng);
    const PicardOptions o = picard_opts(1e-6, 60, 1e-6, 8);

    const ThresholdEstimate est =
        estimate_delta(op, st.w, unit, {1e-4, 1e4}, o, 3);
    REQUIRE(!est.all_converged);
    REQUIRE(!est.all_diverged);
    CHECK(est.rows.size() == 5);  // two coarse probes, three refinements
    CHECK(est.rows[0].amplitude == 1e-4);
    CHECK(est.rows[0].converged);
    CHECK(est.rows[1].amplitude == 1e4);
    CHECK(!est.rows[1].converged);
    CHECK(est.bracket_lo >= 1e-4);
    CHECK(est.bracket_hi <= 1e4);
    CHECK(est.bracket_lo < est.bracket_hi);
    CHECK(est.monotone);

    // three log-midpoint splits cut the log-gap by exactly eight
    const double gap = std::log(est.bracket_hi / est.bracket_lo);
    const double want = std::log(1e8) / 8;
    CHECK(std::abs(gap - want) <= 1e-10 * want);
}

TEST_CASE("one amplitude that converges leaves the bracket open") {
    const Setup st = make_setup(8, 16);
    const StokesOperator op(st.g, st.g.dt);
    Rng rng(9);
    const Vec unit = random_stream_velocity(st.g, rng);
    const PicardOptions o = picard_opts(1e-6, 60, 1e-6, 8);

    const ThresholdEstimate est = estimate_delta(op, st.w, unit, {1e-6}, o, 3);
    CHECK(est.all_converged);
    CHECK(!est.all_diverged);
    CHECK(est.rows.size() == 1);
    CHECK(est.bracket_lo == 1e-6);
    CHECK(est.bracket_hi == std::numeric_limits<double>::infinity());
}

TEST_CASE("sweep validation rejects malformed amplitude lists") {
    const Setup st = make_setup(8, 16);
    const StokesOperator op(st.g, st.g.dt);
    Rng rng(10);
    const Vec unit = random_stream_velocity(st.g, rng);
    const PicardOptions o = picard_opts(1e-6, 20, 1e-6, 4);

    CHECK_THROWS_AS(estimate_delta(op, st.w, unit, {}, o, 1), config_error);
    CHECK_THROWS_AS(estimate_delta(op, st.w, unit, {0.0}, o, 1),
                    config_error);
    CHECK_THROWS_AS(estimate_delta(op, st.w, unit, {1.0, 0.5}, o, 1),
                    config_error);
}

TEST_CASE("the nonlinear replay is deterministic and guarded") {
    const Setup st = make_setup(16, 32);
    const StokesOperator op(st.g, st.g.dt);
    Rng rng(11);
    const Vec y0 = Vec(1e-2 * random_stream_velocity(st.g, rng));

    ControlField v;
    v.excluded = 2;
    v.v.assign(st.g.nt + 1, Vec::Zero(st.g.nfaces()));
    const StateTrajectory a = simulate_nonlinear(op, y0, v);
    const StateTrajectory b = simulate_nonlinear(op, y0, v);
    for (int k = 0; k <= st.g.nt; ++k)
        CHECK(norm_l2(st.g, Vec(a.vel[k] - b.vel[k])) == 0.0);
    CHECK(trajectory_max_div(st.g, a) <= 1e-10);

    ControlField short_v;
    short_v.v.assign(3, Vec::Zero(st.g.nfaces()));
    CHECK_THROWS_AS(simulate_nonlinear(op, y0, short_v), config_error);
}
