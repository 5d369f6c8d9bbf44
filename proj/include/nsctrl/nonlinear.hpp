#pragma once

#include "nsctrl/controllability.hpp"

namespace nsctrl {

// Bilinear convection form B(a, y) = (a . grad) y on the staggered faces:
// centered differences, the cross component averaged from the four
// neighbouring faces, ghost reflection across the tangential walls, zero on
// boundary faces.  convect(y) = B(y, y).
Vec convect_bilinear(const Grid& g, const Vec& adv, const Vec& y);
Vec convect(const Grid& g, const Vec& y);

struct PicardIter {
    int k = 0;
    double residual = 0;        // weighted |y_k - y_{k-1}|, e^{3/2 s b*} in L2(Q)
    double terminal_norm = 0;   // |y_k(T)| of the linearized solve
    double source_norm = 0;     // |e^{5/2 s b*} (g*)^{-2} f_k|_{L2(Q)}
    int cg_iterations = 0;
};

struct NonlinearResult {
    std::vector<PicardIter> history;
    RunResult last;             // final linearized solve
    double resim_terminal = 0;  // |y(T)| of the nonlinear re-simulation
    StateTrajectory resim;
    bool converged = false;
    bool diverged = false;  // three consecutive residual increases (or NaN)
};

struct PicardOptions {
    HumOptions hum;
    double tol = 1e-10;  // stop when residual <= tol * |y0|
    int max_iter = 12;
};

// Picard iteration around the penalized control solve: iterate k freezes the
// convection source f_k = -(y_{k-1} . grad) y_{k-1} sampled at the left step
// endpoints (the same convention the forward stepper uses), solves the
// linear control problem, and repeats.  After convergence the control is
// replayed through the explicit-convection nonlinear dynamics; at the fixed
// point that replay performs the same arithmetic as the last linear solve.
NonlinearResult solve_nonlinear(const StokesOperator& op, const WeightSet& w,
                                const Vec& y0, const PicardOptions& opt);

// Nonlinear forward replay under a frozen control.
StateTrajectory simulate_nonlinear(const StokesOperator& op, const Vec& y0,
                                   const ControlField& v,
                                   bool store_pressure = false);

struct SweepRow {
    double amplitude = 0;
    bool converged = false;
    bool diverged = false;
    int iterations = 0;
    double final_residual = 0;
    double resim_terminal = 0;
};

struct ThresholdEstimate {
    std::vector<SweepRow> rows;       // coarse sweep then bisection refinements
    double bracket_lo = 0;            // largest amplitude that converged
    double bracket_hi = 0;            // smallest amplitude that diverged
    bool all_converged = false;       // open bracket [max tested, inf)
    bool all_diverged = false;        // empty bracket
    bool monotone = true;             // no reconvergence after first divergence
};

// Coarse sweep over the given ascending amplitudes applied to the unit
// field y0_unit, followed by `bisection_steps` log-midpoint refinements of
// the bracket between the largest converged and smallest diverged amplitude.
ThresholdEstimate estimate_delta(const StokesOperator& op, const WeightSet& w,
                                 const Vec& y0_unit,
                                 const std::vector<double>& amplitudes,
                                 const PicardOptions& opt,
                                 int bisection_steps = 3);

}  // namespace nsctrl
