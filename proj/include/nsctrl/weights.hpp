#pragma once

#include <Eigen/Dense>
#include <vector>

#include "nsctrl/grid.hpp"

namespace nsctrl {

using Vec = Eigen::VectorXd;

// Spatial profile eta(x,y) = sin(pi x) sin(pi y) sampled at cell corners.
// Boundary nodes are set to zero explicitly (not via sin(pi*1.0), which is
// only zero up to rounding), eta > 0 at interior nodes, and the sole
// critical point (1/2,1/2) must lie inside omega0.
struct EtaField {
    int nx = 0, ny = 0;
    Vec node_vals;             // (nx+1)*(ny+1)
    double sup_norm = 0;       // max over nodes
    double min_grad_outside = 0;  // min |grad eta| (central diff) off omega0
};

EtaField build_eta(const Grid& g);

// Time shape ell(t): ell = t on [0,T/4], ell = T - t on [3T/4,T], and a C^2
// quintic blend in between with its maximum at T/2 (ell(T/2) = 13T/32).
// ell_tilde freezes the first half at the maximum: ell_tilde = 13T/32 on
// [0,T/2] and ell_tilde = ell (bitwise the same samples) on (T/2,T].
// Raw samples are stored; the weight evaluator floors them at
// floor_delta*T so that endpoint exponents stay finite.
struct TimeProfile {
    int nt = 0;
    double T = 0, floor_delta = 0;
    Vec ell, ell_tilde;
    double ell_max = 0;  // 13T/32

    double floored(double raw) const {
        const double f = floor_delta * T;
        return raw > f ? raw : f;
    }
};

TimeProfile build_time_profile(int nt, double T, double floor_delta = 1e-2);

struct WeightParams {
    double s = 0;
    double lambda = 1.0;
    double exp_clamp = 60.0;
};

// Solves s * max_k alpha*(t_k) = target on the floored time mesh ("auto" s).
double auto_s(const EtaField& eta, const TimeProfile& tp, double lambda,
              double target);

// All weight samples are kept in log space.  Conventions:
//   alpha(x,t) = (e^{2 la M} - e^{la eta}) / ell^8,  xi = e^{la eta} / ell^8
// with M = sup eta; the beta/gamma family is the same with ell_tilde.
// Starred quantities are the extremals over x:
//   alpha* = max alpha (eta = 0), alpha^ = min alpha (eta = M),
//   xi*    = min xi    (eta = 0), xi^    = max xi    (eta = M),
// and likewise beta*, beta^, gamma*, gamma^.
//
// Exponent clamp: products s*alpha are clamped to exp_clamp in magnitude
// before exponentiation, and any combined weight whose log falls below
// -exp_clamp is flushed to an exact zero.
struct WeightSet {
    WeightParams prm;
    int nx = 0, ny = 0, nt = 0;
    double T = 0;

    // log-space samples at nodes x times, flattened node + k*nnodes
    Vec log_alpha, log_xi, log_beta, log_gamma;

    // time-only extremal logs, one entry per time level
    Vec la_star, la_hat, lxi_star, lxi_hat;
    Vec lb_star, lb_hat, lg_star, lg_hat;

    // derived log weights (clamp already applied to the s-products):
    //   log rho_v^2 = -2 s b^ - 3 s b* + 7 log g^    (control weight)
    //   log rho_y   = (3/2) s b*                     (state weight)
    //   log rho_f   = (5/2) s b* - 2 log g*          (source weight)
    Vec log_rho_v2, log_rho_y, log_rho_f;

    bool overflush_flag = false;  // >50% of e^{-s alpha} samples flushed
    double flush_fraction = 0;

    int nnodes() const { return (nx + 1) * (ny + 1); }

    // s * e^{logval} clamped to exp_clamp
    double sprod(double logval) const {
        const double v = prm.s * std::exp(logval);
        return v < prm.exp_clamp ? v : prm.exp_clamp;
    }
    // e^E with flush-to-zero below e^{-exp_clamp}
    double wexp(double e) const {
        return e < -prm.exp_clamp ? 0.0 : std::exp(e);
    }
    double rho_v2(int k) const { return wexp(log_rho_v2[k]); }
};

WeightSet eval_weights(const EtaField& eta, const TimeProfile& tp,
                       const WeightParams& prm);

}  // namespace nsctrl
