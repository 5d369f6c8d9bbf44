#include "nsctrl/nonlinear.hpp"

#include <cmath>
#include <limits>

namespace nsctrl {

Vec convect_bilinear(const Grid& g, const Vec& adv, const Vec& y) {
    Vec out = Vec::Zero(g.nfaces());
    const double i2hx = 1.0 / (2 * g.hx), i2hy = 1.0 / (2 * g.hy);
    // (a . grad) u at interior vertical faces: the advecting v value is the
    // average of the four surrounding horizontal faces; normal-direction
    // differences use stored neighbours, tangential ones reflect across the
    // walls (ghost value -u)
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) {
            const int f = g.iu(i, j);
            const double au = adv[f];
            const double av = 0.25 * (adv[g.iv(i - 1, j)] + adv[g.iv(i, j)] +
                                      adv[g.iv(i - 1, j + 1)] +
                                      adv[g.iv(i, j + 1)]);
            const double dudx = (y[g.iu(i + 1, j)] - y[g.iu(i - 1, j)]) * i2hx;
            const double dn = j > 0 ? y[g.iu(i, j - 1)] : -y[f];
            const double up = j < g.ny - 1 ? y[g.iu(i, j + 1)] : -y[f];
            const double dudy = (up - dn) * i2hy;
            out[f] = au * dudx + av * dudy;
        }
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const int f = g.iv(i, j);
            const double av = adv[f];
            const double au = 0.25 * (adv[g.iu(i, j - 1)] + adv[g.iu(i, j)] +
                                      adv[g.iu(i + 1, j - 1)] +
                                      adv[g.iu(i + 1, j)]);
            const double dvdy = (y[g.iv(i, j + 1)] - y[g.iv(i, j - 1)]) * i2hy;
            const double lf = i > 0 ? y[g.iv(i - 1, j)] : -y[f];
            const double rt = i < g.nx - 1 ? y[g.iv(i + 1, j)] : -y[f];
            const double dvdx = (rt - lf) * i2hx;
            out[f] = au * dvdx + av * dvdy;
        }
    return out;
}

Vec convect(const Grid& g, const Vec& y) { return convect_bilinear(g, y, y); }

namespace {

// |e^{3/2 s b*} q|_{L2(Q)} over a trajectory-shaped list of levels
double weighted_state_norm(const Grid& g, const WeightSet& w,
                           const std::vector<Vec>& lv, double dt) {
    const int nt = static_cast<int>(lv.size()) - 1;
    double acc = 0;
    for (int k = 0; k <= nt; ++k) {
        const double tw = (k == 0 || k == nt) ? 0.5 : 1.0;
        acc += tw * dt * w.wexp(2 * w.log_rho_y[k]) * dot_l2(g, lv[k], lv[k]);
    }
    return std::sqrt(acc);
}

// |e^{5/2 s b*} (g*)^{-2} f|_{L2(Q)}, left-endpoint like the stepping
double weighted_source_norm(const Grid& g, const WeightSet& w,
                            const std::vector<Vec>& f, double dt) {
    if (f.empty()) return 0;
    double acc = 0;
    const int nt = std::min<int>(g.nt, static_cast<int>(f.size()));
    for (int k = 0; k < nt; ++k)
        acc += dt * w.wexp(2 * w.log_rho_f[k]) * dot_l2(g, f[k], f[k]);
    return std::sqrt(acc);
}

}  // namespace

NonlinearResult solve_nonlinear(const StokesOperator& op, const WeightSet& w,
                                const Vec& y0, const PicardOptions& opt) {
    const Grid& g = op.grid();
    if (opt.max_iter < 1) throw config_error("picard: max_iter must be >= 1");

    NonlinearResult res;

    std::vector<Vec> prev(g.nt + 1, Vec::Zero(g.nfaces()));
    std::vector<Vec> f_samples;  // empty on the first pass: Stokes solve
    double last_res = std::numeric_limits<double>::infinity();
    // The residual is measured in the weighted trajectory norm, whose scale
    // is set by the clamped exponential weights, so the stopping test is
    // relative to the first iterate's residual (the response of y0 in that
    // same norm) rather than to the flat |y0|.
    double scale = 0;
    int increases = 0;

    for (int it = 1; it <= opt.max_iter; ++it) {
        RunResult run = solve_penalized_hum(op, w, y0, f_samples, opt.hum);

        PicardIter rec;
        rec.k = it;
        rec.terminal_norm = run.terminal_norm;
        rec.cg_iterations = run.cg_iterations;
        rec.source_norm = weighted_source_norm(g, w, f_samples, g.dt);
        std::vector<Vec> diff(g.nt + 1);
        for (int k = 0; k <= g.nt; ++k) diff[k] = run.state.vel[k] - prev[k];
        rec.residual = weighted_state_norm(g, w, diff, g.dt);
        res.history.push_back(rec);
        if (it == 1) scale = rec.residual;

        for (int k = 0; k <= g.nt; ++k) prev[k] = run.state.vel[k];
        res.last = std::move(run);

        if (!std::isfinite(rec.residual)) {
            res.diverged = true;
            break;
        }
        if (rec.residual > last_res) {
            if (++increases >= 3) {
                res.diverged = true;
                break;
            }
        } else {
            increases = 0;
        }
        last_res = rec.residual;

        if (rec.residual <= opt.tol * (scale > 0 ? scale : 1.0)) {
            res.converged = true;
            break;
        }
        // freeze the convection of the new iterate as the next source
        f_samples.resize(g.nt + 1);
        for (int k = 0; k <= g.nt; ++k)
            f_samples[k] = -convect(g, prev[k]);
    }

    if (!res.diverged && !res.last.state.vel.empty()) {
        res.resim = simulate_nonlinear(op, y0, res.last.control, false);
        res.resim_terminal = norm_l2(g, res.resim.vel[g.nt]);
    }
    return res;
}

StateTrajectory simulate_nonlinear(const StokesOperator& op, const Vec& y0,
                                   const ControlField& v,
                                   bool store_pressure) {
    const Grid& g = op.grid();
    if (static_cast<int>(v.v.size()) < g.nt)
        throw config_error("nonlinear replay: control needs nt samples");
    StateTrajectory tr;
    tr.dt = op.dt();
    tr.vel.resize(g.nt + 1);
    if (store_pressure) tr.pre.assign(g.nt + 1, Vec::Zero(g.ncells()));
    tr.vel[0] = op.project(y0);
    Vec pre;
    for (int k = 0; k < g.nt; ++k) {
        // same additive order as the linear stepper so a fixed point of the
        // Picard loop replays bit-for-bit
        Vec rhs = tr.vel[k] / op.dt();
        rhs += -convect(g, tr.vel[k]);
        rhs += v.v[k];
        op.step(rhs, tr.vel[k + 1], pre);
        if (store_pressure) tr.pre[k + 1] = pre;
    }
    return tr;
}

ThresholdEstimate estimate_delta(const StokesOperator& op, const WeightSet& w,
                                 const Vec& y0_unit,
                                 const std::vector<double>& amplitudes,
                                 const PicardOptions& opt,
                                 int bisection_steps) {
    if (amplitudes.empty())
        throw config_error("amplitude sweep: need at least one amplitude");
    for (std::size_t i = 0; i < amplitudes.size(); ++i) {
        if (!(amplitudes[i] > 0))
            throw config_error("amplitude sweep: amplitudes must be positive");
        if (i > 0 && amplitudes[i] <= amplitudes[i - 1])
            throw config_error("amplitude sweep: amplitudes must be ascending");
    }

    ThresholdEstimate est;
    auto probe = [&](double a) {
        const Vec y0 = a * y0_unit;
        const NonlinearResult r = solve_nonlinear(op, w, y0, opt);
        SweepRow row;
        row.amplitude = a;
        row.converged = r.converged;
        row.diverged = r.diverged;
        row.iterations = static_cast<int>(r.history.size());
        row.final_residual =
            r.history.empty() ? 0 : r.history.back().residual;
        row.resim_terminal = r.resim_terminal;
        est.rows.push_back(row);
        return r.converged;
    };

    double lo = 0, hi = std::numeric_limits<double>::infinity();
    bool seen_failure = false;
    for (double a : amplitudes) {
        const bool ok = probe(a);
        if (ok) {
            if (seen_failure) est.monotone = false;
            if (a > lo) lo = a;
        } else {
            seen_failure = true;
            if (a < hi) hi = a;
        }
    }
    est.all_converged = !seen_failure;
    est.all_diverged = lo == 0;
    est.bracket_lo = lo;
    est.bracket_hi = hi;
    if (est.all_converged || est.all_diverged) return est;

    // log-midpoint refinement of the (lo, hi) bracket
    for (int step = 0; step < bisection_steps; ++step) {
        const double mid = std::sqrt(est.bracket_lo * est.bracket_hi);
        if (!(mid > est.bracket_lo && mid < est.bracket_hi)) break;
        if (probe(mid))
            est.bracket_lo = mid;
        else
            est.bracket_hi = mid;
    }
    return est;
}

}  // namespace nsctrl
