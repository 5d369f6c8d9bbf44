#include "nsctrl/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace nsctrl {

EtaField build_eta(const Grid& g) {
    using std::numbers::pi;
    if (!g.omega0.contains(0.5, 0.5))
        throw config_error(
            "omega0 must contain the profile critical point (0.5, 0.5); "
            "omega0 = " + g.omega0.describe());

    EtaField e;
    e.nx = g.nx;
    e.ny = g.ny;
    e.node_vals = Vec::Zero(g.nnodes());
    // boundary ring stays exactly zero (sin(pi*1.0) only rounds to ~1e-16)
    for (int j = 1; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i)
            e.node_vals[g.inode(i, j)] =
                std::sin(pi * g.xn(i)) * std::sin(pi * g.yn(j));
    e.sup_norm = e.node_vals.maxCoeff();

    // central-difference gradient magnitude at interior nodes off omega0;
    // it must be bounded away from zero there (the only discrete critical
    // point sits at the center, which omega0 covers)
    double gmin = std::numeric_limits<double>::infinity();
    for (int j = 1; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) {
            if (g.omega0_node[g.inode(i, j)]) continue;
            const double gx = (e.node_vals[g.inode(i + 1, j)] -
                               e.node_vals[g.inode(i - 1, j)]) /
                              (2 * g.hx);
            const double gy = (e.node_vals[g.inode(i, j + 1)] -
                               e.node_vals[g.inode(i, j - 1)]) /
                              (2 * g.hy);
            gmin = std::min(gmin, std::hypot(gx, gy));
        }
    e.min_grad_outside = gmin;
    return e;
}

TimeProfile build_time_profile(int nt, double T, double floor_delta) {
    if (nt < 4) throw config_error("time profile: nt must be >= 4");
    if (!(T > 0)) throw config_error("time profile: T must be positive");
    if (!(floor_delta > 0) || floor_delta >= 0.25)
        throw config_error("time profile: floor_delta must lie in (0, 0.25)");

    TimeProfile tp;
    tp.nt = nt;
    tp.T = T;
    tp.floor_delta = floor_delta;
    tp.ell_max = 0.40625 * T;  // = 13T/32, the blend maximum
    tp.ell.resize(nt + 1);
    tp.ell_tilde.resize(nt + 1);

    const double dt = T / nt;
    // ell = t up to T/4, then a C^2 quintic-type blend
    //   ell(t) = T/4 + (T/4) B(tau),  tau = (t - T/4)/(T/2),
    //   B(tau) = 2 tau^4 - 4 tau^3 + 2 tau
    // (B(0)=0, B'(0)=2, B''(0)=0; B(1/2)=5/8 -> ell(T/2)=13T/32; the fall on
    // [3T/4,T] is the mirror image).  Only the first half is evaluated; the
    // second half is mirrored sample-by-sample so the symmetry is exact.
    for (int k = 0; k <= nt - k; ++k) {
        const double t = k * dt;
        double val;
        if (t <= 0.25 * T) {
            val = t;
        } else {
            const double tau = (t - 0.25 * T) / (0.5 * T);
            const double b = 2 * tau * tau * tau * tau -
                             4 * tau * tau * tau + 2 * tau;
            val = 0.25 * T + 0.25 * T * b;
        }
        tp.ell[k] = val;
        tp.ell[nt - k] = val;
    }
    // first half frozen at the maximum, second half shares ell's samples
    for (int k = 0; k <= nt; ++k)
        tp.ell_tilde[k] = (k * dt <= 0.5 * T) ? tp.ell_max : tp.ell[k];
    return tp;
}

namespace {

// space-dependent log factors:
//   log(e^{2 la M} - e^{la eta}) = 2 la M + log1p(-e^{la (eta - 2M)})
double log_alpha_space(double lambda, double M, double eta) {
    return 2 * lambda * M + std::log1p(-std::exp(lambda * (eta - 2 * M)));
}

}  // namespace

double auto_s(const EtaField& eta, const TimeProfile& tp, double lambda,
              double target) {
    if (!(lambda >= 1)) throw config_error("auto_s: lambda must be >= 1");
    if (!(target > 0)) throw config_error("auto_s: target must be positive");
    const double sa = log_alpha_space(lambda, eta.sup_norm, 0.0);
    double max_la = -std::numeric_limits<double>::infinity();
    for (int k = 0; k <= tp.nt; ++k)
        max_la = std::max(max_la,
                          sa - 8 * std::log(tp.floored(tp.ell[k])));
    return target / std::exp(max_la);
}

WeightSet eval_weights(const EtaField& eta, const TimeProfile& tp,
                       const WeightParams& prm) {
    if (!(prm.s > 0)) throw config_error("weights: s must be positive");
    if (!(prm.lambda >= 1))
        throw config_error("weights: lambda must be >= 1");
    if (!(prm.exp_clamp > 0))
        throw config_error("weights: exp_clamp must be positive");
    if (eta.nx <= 0 || tp.nt <= 0)
        throw config_error("weights: eta/time profile not initialized");

    WeightSet w;
    w.prm = prm;
    w.nx = eta.nx;
    w.ny = eta.ny;
    w.nt = tp.nt;
    w.T = tp.T;

    const int nn = w.nnodes();
    const int nk = tp.nt + 1;
    const double la = prm.lambda, M = eta.sup_norm;

    // separable pieces: every log weight is (space factor) + (time factor)
    Vec space_a(nn), space_x(nn);
    for (int n = 0; n < nn; ++n) {
        space_a[n] = log_alpha_space(la, M, eta.node_vals[n]);
        space_x[n] = la * eta.node_vals[n];
    }
    Vec time_a(nk), time_b(nk);
    for (int k = 0; k < nk; ++k) {
        time_a[k] = -8 * std::log(tp.floored(tp.ell[k]));
        time_b[k] = -8 * std::log(tp.floored(tp.ell_tilde[k]));
    }

    w.log_alpha.resize(nn * nk);
    w.log_xi.resize(nn * nk);
    w.log_beta.resize(nn * nk);
    w.log_gamma.resize(nn * nk);
    for (int k = 0; k < nk; ++k)
        for (int n = 0; n < nn; ++n) {
            const int idx = n + k * nn;
            w.log_alpha[idx] = space_a[n] + time_a[k];
            w.log_xi[idx] = space_x[n] + time_a[k];
            w.log_beta[idx] = space_a[n] + time_b[k];
            w.log_gamma[idx] = space_x[n] + time_b[k];
        }

    // extremals over x: eta = 0 on the boundary ring gives the max of
    // alpha/beta and the min of xi/gamma; eta = M gives the opposite ends.
    // Evaluated through the same space factors so they match node samples
    // bitwise.
    const double sa_star = log_alpha_space(la, M, 0.0);
    const double sa_hat = log_alpha_space(la, M, M);
    w.la_star.resize(nk); w.la_hat.resize(nk);
    w.lxi_star.resize(nk); w.lxi_hat.resize(nk);
    w.lb_star.resize(nk); w.lb_hat.resize(nk);
    w.lg_star.resize(nk); w.lg_hat.resize(nk);
    for (int k = 0; k < nk; ++k) {
        w.la_star[k] = sa_star + time_a[k];
        w.la_hat[k] = sa_hat + time_a[k];
        w.lxi_star[k] = time_a[k];            // la * 0
        w.lxi_hat[k] = la * M + time_a[k];
        w.lb_star[k] = sa_star + time_b[k];
        w.lb_hat[k] = sa_hat + time_b[k];
        w.lg_star[k] = time_b[k];
        w.lg_hat[k] = la * M + time_b[k];
    }

    w.log_rho_v2.resize(nk);
    w.log_rho_y.resize(nk);
    w.log_rho_f.resize(nk);
    for (int k = 0; k < nk; ++k) {
        w.log_rho_v2[k] = -2 * w.sprod(w.lb_hat[k]) - 3 * w.sprod(w.lb_star[k]) +
                          7 * w.lg_hat[k];
        w.log_rho_y[k] = 1.5 * w.sprod(w.lb_star[k]);
        w.log_rho_f[k] = 2.5 * w.sprod(w.lb_star[k]) - 2 * w.lg_star[k];
    }

    // clamp engagement census over e^{-s alpha}: the exponent saturates when
    // s e^{log alpha} >= exp_clamp, i.e. log alpha >= log(clamp) - log(s)
    const double threshold = std::log(prm.exp_clamp) - std::log(prm.s);
    long flushed = 0;
    for (int k = 0; k < nk; ++k)
        for (int n = 0; n < nn; ++n)
            if (space_a[n] + time_a[k] >= threshold) ++flushed;
    w.flush_fraction = double(flushed) / double(nn) / double(nk);
    w.overflush_flag = w.flush_fraction > 0.5;
    return w;
}

}  // namespace nsctrl
