#pragma once

#include <Eigen/Dense>
#include <vector>

#include "nsctrl/grid.hpp"

namespace nsctrl {

using Vec = Eigen::VectorXd;

// One time level of the staggered velocity (flat face vector, u then v).
struct VelocityField {
    Vec q;
};

struct PressureField {
    Vec p;
};

// Discrete trajectory on the uniform time mesh t_k = k*dt, k = 0..nt.
// vel[k] is the full face vector at t_k; pre[k] is the pressure produced by
// the step that ends at t_k (pre[0] is zero for forward runs, pre[nt] for
// backward ones).  pre may be left empty when pressures are not needed.
struct StateTrajectory {
    std::vector<Vec> vel;
    std::vector<Vec> pre;
    double dt = 0;
    int nt() const { return static_cast<int>(vel.size()) - 1; }
};

// Control samples v(t_k), k = 0..nt, one face vector per level.  The
// excluded component (1-based: 1 = u, 2 = v) is identically zero, as is
// everything outside the omega face masks; those entries are never written,
// so the zeros are exact.  The forward solver consumes samples 0..nt-1.
struct ControlField {
    std::vector<Vec> v;
    int excluded = 0;
};

// L2 inner product / norm on face or cell vectors (uniform weight hx*hy).
double dot_l2(const Grid& g, const Vec& a, const Vec& b);
double norm_l2(const Grid& g, const Vec& a);

// Per-cell discrete divergence of a face vector.
Vec divergence(const Grid& g, const Vec& q);

// max_cells |div q| normalized by the natural divergence scale of the field
// (|q|_inf * (1/hx + 1/hy)); returns the absolute max when the field is zero.
double max_divergence_rel(const Grid& g, const Vec& q);

// Positive-definite discrete vector Laplacian L = -Delta_h on faces
// (5-point per component, Dirichlet at faces lying on the boundary, ghost
// reflection across the tangential walls).  <L q, q> is the H1 Dirichlet
// form; |L q|^2 the H2 surrogate used by the weighted norms.
Vec apply_l(const Grid& g, const Vec& q);

// squared L2 norm over the omega face mask of one velocity component
// (component 1 = u, 2 = v)
double comp_norm2_omega(const Grid& g, const Vec& q, int component);

// squared L2 norm of one full component (no mask)
double comp_norm2(const Grid& g, const Vec& q, int component);

// Smooth random fields with a bounded trigonometric spectrum (modes up to
// max(2, nx/4)); all components vanish on the boundary faces.
// Divergence-free initial data is produced from a random stream function
// psi = sum a_mn sin(m pi x) sin(n pi y) via u = d_y psi, v = -d_x psi.
Vec random_stream_velocity(const Grid& g, Rng& rng);

// Face samples of a smooth space-time field: one face vector per time level
// k = 0..nt (not divergence-free).
std::vector<Vec> random_smooth_source(const Grid& g, Rng& rng);

}  // namespace nsctrl
