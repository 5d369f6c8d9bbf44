#include "nsctrl/controllability.hpp"

#include <cmath>
#include <limits>

namespace nsctrl {

namespace {

// v_j = sign * (rho_v^2(t_k) * traj_j) on the omega face masks, j != the
// excluded component; all other entries stay exact zeros.  Shared by the
// public reconstruction (sign = -1) and the Gramian's trial control
// (sign = +1) so the two are bitwise-negations of each other.
ControlField scaled_masked_control(const Grid& g, const WeightSet& w,
                                   const StateTrajectory& traj,
                                   int control_index, double sign) {
    if (control_index != 1 && control_index != 2)
        throw config_error("component index out of range: " +
                           std::to_string(control_index));
    ControlField cf;
    cf.excluded = control_index;
    const int nt = traj.nt();
    cf.v.assign(nt + 1, Vec::Zero(g.nfaces()));
    for (int k = 0; k <= nt; ++k) {
        const double r2 = w.rho_v2(k);
        const Vec& q = traj.vel[k];
        Vec& out = cf.v[k];
        if (control_index != 1) {
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i <= g.nx; ++i) {
                    const int f = g.iu(i, j);
                    if (g.omega_u[f]) out[f] = sign * (r2 * q[f]);
                }
        }
        if (control_index != 2) {
            for (int j = 0; j <= g.ny; ++j)
                for (int i = 0; i < g.nx; ++i) {
                    const int f = g.iv(i, j);
                    if (g.omega_v[f]) out[f] = sign * (r2 * q[f]);
                }
        }
    }
    return cf;
}

// observed squared norm at one level: the omega-masked L2 of all velocity
// components except the excluded one
double observed_norm2(const Grid& g, const Vec& q, int control_index) {
    double acc = 0;
    if (control_index != 1) acc += comp_norm2_omega(g, q, 1);
    if (control_index != 2) acc += comp_norm2_omega(g, q, 2);
    return acc;
}

}  // namespace

double dual_objective(const StokesOperator& op, const WeightSet& w,
                      const HumOptions& opt, const Vec& y0,
                      const std::vector<Vec>& f_samples, const Vec& phiT) {
    const Grid& g = op.grid();
    const StateTrajectory phi = solve_adjoint(op, phiT);
    double acc = 0;
    for (int k = 0; k < g.nt; ++k)
        acc += 0.5 * g.dt * w.rho_v2(k) *
               observed_norm2(g, phi.vel[k], opt.control_index);
    acc += 0.5 * opt.eps * dot_l2(g, phiT, phiT);
    acc += dot_l2(g, y0, phi.vel[0]);
    if (!f_samples.empty()) {
        if (static_cast<int>(f_samples.size()) < g.nt)
            throw config_error("dual objective: source needs nt samples");
        for (int k = 0; k < g.nt; ++k)
            acc += g.dt * dot_l2(g, f_samples[k], phi.vel[k]);
    }
    return acc;
}

Vec dual_gradient(const StokesOperator& op, const WeightSet& w,
                  const HumOptions& opt, const Vec& y0,
                  const std::vector<Vec>& f_samples, const Vec& phiT) {
    const Grid& g = op.grid();
    const StateTrajectory phi = solve_adjoint(op, phiT);
    const ControlField trial =
        scaled_masked_control(g, w, phi, opt.control_index, +1.0);
    SourceFn f = nullptr;
    if (!f_samples.empty()) {
        if (static_cast<int>(f_samples.size()) < g.nt)
            throw config_error("dual gradient: source needs nt samples");
        f = [&f_samples](int k, Vec& out) { out += f_samples[k]; };
    }
    const StateTrajectory y = solve_forward(op, y0, f, &trial);
    return y.vel[g.nt] + opt.eps * phiT;
}

ControlField reconstruct_control(const Grid& g, const WeightSet& w,
                                 const StateTrajectory& chi,
                                 int control_index) {
    return scaled_masked_control(g, w, chi, control_index, -1.0);
}

RunResult solve_penalized_hum(const StokesOperator& op, const WeightSet& w,
                              const Vec& y0, const std::vector<Vec>& f_samples,
                              const HumOptions& opt) {
    const Grid& g = op.grid();
    if (opt.control_index != 1 && opt.control_index != 2)
        throw config_error("component index out of range: " +
                           std::to_string(opt.control_index));
    if (!(opt.eps > 0)) throw config_error("hum: eps must be positive");
    if (!f_samples.empty() && static_cast<int>(f_samples.size()) < g.nt)
        throw config_error("hum: source needs nt samples");

    SourceFn f = nullptr;
    if (!f_samples.empty())
        f = [&f_samples](int k, Vec& out) { out += f_samples[k]; };

    // Gram operator: phiT -> y_v(T) with the trial control v = rho_v^2 phi
    // on omega; symmetric positive semidefinite on divergence-free data.
    auto gramian = [&](const Vec& phiT) {
        const StateTrajectory phi = solve_adjoint(op, phiT);
        const ControlField trial =
            scaled_masked_control(g, w, phi, opt.control_index, +1.0);
        const StateTrajectory y =
            solve_forward(op, Vec::Zero(g.nfaces()), nullptr, &trial);
        return Vec(y.vel[g.nt]);
    };

    RunResult res;
    // rhs of the optimality system: terminal state of the uncontrolled solve
    const Vec b = solve_forward(op, y0, f, nullptr).vel[g.nt];
    res.rhs_norm = norm_l2(g, b);

    // CG on (Gram + eps I) phiT = -b in the L2 inner product, phi0 = 0.
    // The dual objective J = 1/2 <phi,(Gram+eps)phi> + <b,phi> obeys the
    // exact recurrence J_{k+1} = J_k - (alpha_k/2) <r_k, r_k>.
    Vec phiT = Vec::Zero(g.nfaces());
    Vec r = -b;
    Vec p = r;
    double rr = dot_l2(g, r, r);
    double J = 0;
    const double b2 = res.rhs_norm > 0 ? res.rhs_norm : 1.0;
    res.cg_history.push_back({0, J, std::sqrt(rr) / b2});
    int it = 0;
    while (std::sqrt(rr) / b2 > opt.cg_tol && it < opt.cg_max_iter) {
        const Vec ap = gramian(p) + opt.eps * p;
        const double pap = dot_l2(g, p, ap);
        if (!(pap > 0)) {
            res.stagnated = true;  // loss of positivity at rounding level
            break;
        }
        const double alpha = rr / pap;
        phiT += alpha * p;
        r -= alpha * ap;
        J -= 0.5 * alpha * rr;
        const double rr_new = dot_l2(g, r, r);
        p = r + (rr_new / rr) * p;
        rr = rr_new;
        ++it;
        res.cg_history.push_back({it, J, std::sqrt(rr) / b2});
    }
    res.cg_iterations = it;
    if (std::sqrt(rr) / b2 > opt.cg_tol) res.stagnated = true;

    res.phiT_opt = phiT;
    const StateTrajectory phi = solve_adjoint(op, phiT);
    // negate the optimal adjoint, then apply the public reconstruction; this
    // equals the trial control +rho_v^2 phi used inside the Gramian
    StateTrajectory chi;
    chi.dt = phi.dt;
    chi.vel.resize(phi.vel.size());
    for (std::size_t k = 0; k < phi.vel.size(); ++k) chi.vel[k] = -phi.vel[k];
    res.control = reconstruct_control(g, w, chi, opt.control_index);

    res.state = solve_forward(op, y0, f, &res.control, true);
    const Vec& yT = res.state.vel[g.nt];
    res.terminal_norm = norm_l2(g, yT);
    res.optimality_residual = norm_l2(g, Vec(yT + opt.eps * phiT));
    res.weighted = weighted_norms(g, w, res.state, res.control);
    return res;
}

std::array<double, 4> weighted_norms(const Grid& g, const WeightSet& w,
                                     const StateTrajectory& y,
                                     const ControlField& v) {
    const int nt = y.nt();
    const double dt = y.dt;
    double acc0 = 0, acc1 = 0, acc2 = 0, max3 = 0;
    for (int k = 0; k <= nt; ++k) {
        const double tw = (k == 0 || k == nt) ? 0.5 : 1.0;
        const Vec& q = y.vel[k];
        const double y2 = dot_l2(g, q, q);
        acc0 += tw * dt * w.wexp(2 * w.log_rho_y[k]) * y2;

        const Vec lq = apply_l(g, q);
        const double h1 = y2 + dot_l2(g, lq, q);
        const double h2 = h1 + dot_l2(g, lq, lq);
        const double lw2 = 2 * (w.log_rho_y[k] - 1.125 * w.lg_star[k]);
        acc2 += tw * dt * w.wexp(lw2) * h2;
        max3 = std::max(max3, w.wexp(0.5 * lw2) * std::sqrt(std::max(h1, 0.0)));
    }
    // control norm with the inverse of the control weight; left-endpoint
    // quadrature to match the dual objective.  Exact zero samples contribute
    // zero even where the weight has flushed (0 * inf would otherwise occur).
    for (int k = 0; k < nt && k < static_cast<int>(v.v.size()); ++k) {
        const double s2 = v.v[k].squaredNorm() * g.hx * g.hy;
        if (s2 == 0) continue;
        acc1 += dt * std::exp(-w.log_rho_v2[k]) * s2;
    }
    return {std::sqrt(acc0), std::sqrt(acc1), std::sqrt(acc2), max3};
}

}  // namespace nsctrl
