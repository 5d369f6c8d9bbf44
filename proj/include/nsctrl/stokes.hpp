#pragma once

#include <Eigen/Sparse>
#include <functional>
#include <memory>

#include "nsctrl/fields.hpp"

namespace nsctrl {

using SpMat = Eigen::SparseMatrix<double>;

// Additive body-force sampler: fills `out` (pre-zeroed face vector) with the
// source at time level k.  Forward steps consume levels 0..nt-1, backward
// steps levels 1..nt.
using SourceFn = std::function<void(int k, Vec& out)>;

// Per-step observer for streaming runs (level k, velocity faces, pressure).
using StepObserver =
    std::function<void(int k, const Vec& vel, const Vec& pre)>;

// Implicit-Euler Stokes stepper with an exact discrete projection: every
// step solves the symmetric saddle system
//     [ A   G   0 ] [w]   [b]        A = I/dt + L  (interior faces)
//     [ G^T 0   e ] [p] = [0]        G = -D^T, D the cell divergence
//     [ 0  e^T  0 ] [mu]  [0]        e = ones (zero-mean pressure gauge)
// factorized once per (grid, dt) with sparse LU and reused for every step,
// forward and backward.  The one-step velocity map is symmetric, so the
// backward solver is the exact transpose of the forward one and the discrete
// duality identity holds to rounding.
class StokesOperator {
  public:
    StokesOperator(const Grid& g, double dt);

    const Grid& grid() const { return g_; }
    double dt() const { return dt_; }

    // one implicit step: in-place map from rhs = w_old/dt + source (full
    // face vector) to the new velocity and its pressure
    void step(const Vec& rhs_faces, Vec& vel_out, Vec& pre_out) const;

    // L2-orthogonal projection onto the discretely divergence-free subspace
    // (zero normal trace built into the face layout)
    Vec project(const Vec& faces) const;

  private:
    Grid g_;
    double dt_ = 0;
    int n_int_ = 0;  // interior faces
    std::vector<int> int_of_face_, face_of_int_;
    std::unique_ptr<Eigen::SparseLU<SpMat>> lu_step_, lu_proj_;

    SpMat assemble(bool with_laplacian, double diag_shift) const;
};

// y_{k+1} = M (y_k + dt * (f(t_k) + v(t_k)));  y0 is projected on entry.
// Source samples are taken at the left endpoint of each step so that the
// discrete duality pairs f(t_k) with phi(t_k) at the same level.
StateTrajectory solve_forward(const StokesOperator& op, const Vec& y0,
                              const SourceFn& f = nullptr,
                              const ControlField* v = nullptr,
                              bool store_pressure = false);

// Streaming variant (no trajectory storage); observer sees every level
// including k = 0.
void run_forward(const StokesOperator& op, const Vec& y0, const SourceFn& f,
                 const ControlField* v, const StepObserver& obs);

// Backward run phi_k = M (phi_{k+1} + dt * g(t_{k+1})), phi_nt = phiT
// (projected on entry).  With g = 0 this is the exact transpose of the
// forward map.
StateTrajectory solve_adjoint(const StokesOperator& op, const Vec& phiT,
                              const SourceFn& g = nullptr,
                              bool store_pressure = false);

// max over all levels of the relative cell divergence
double trajectory_max_div(const Grid& g, const StateTrajectory& tr);

// (|u|^2_{L2 H2} + |u|^2_{H1 L2}) / |f|^2_{L2(Q)} for a forward solution u
// with y0 = 0 driven by f; 0/0 is defined as 0.  The H2 norm per level is
// the surrogate |u|^2 + <L u, u> + |L u|^2.
double regularity_ratio(const Grid& g, const StateTrajectory& u,
                        const std::vector<Vec>& f_samples);

// Closed-form unsteady reference solution used for convergence checks:
//   psi = sin^2(pi x) sin^2(pi y) e^{-t},  y_e = curl psi,
//   p_e = cos(pi x) cos(pi y) e^{-t},      f_e = y_t - Lap y + grad p.
Vec mms_velocity(const Grid& g, double t);
Vec mms_source(const Grid& g, double t);

}  // namespace nsctrl
