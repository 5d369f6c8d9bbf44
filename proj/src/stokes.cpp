#include "nsctrl/stokes.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace nsctrl {

StokesOperator::StokesOperator(const Grid& g, double dt) : g_(g), dt_(dt) {
    if (!(dt > 0)) throw config_error("stokes: dt must be positive");

    // interior faces: u with 0 < i < nx, v with 0 < j < ny
    int_of_face_.assign(g_.nfaces(), -1);
    for (int j = 0; j < g_.ny; ++j)
        for (int i = 1; i < g_.nx; ++i) int_of_face_[g_.iu(i, j)] = 0;
    for (int j = 1; j < g_.ny; ++j)
        for (int i = 0; i < g_.nx; ++i) int_of_face_[g_.iv(i, j)] = 0;
    for (int f = 0; f < g_.nfaces(); ++f)
        if (int_of_face_[f] == 0) {
            int_of_face_[f] = n_int_++;
            face_of_int_.push_back(f);
        }

    lu_step_ = std::make_unique<Eigen::SparseLU<SpMat>>();
    lu_step_->compute(assemble(true, 1.0 / dt_));
    if (lu_step_->info() != Eigen::Success)
        throw solver_error("stokes: LU factorization of the step system failed");

    lu_proj_ = std::make_unique<Eigen::SparseLU<SpMat>>();
    lu_proj_->compute(assemble(false, 1.0));
    if (lu_proj_->info() != Eigen::Success)
        throw solver_error(
            "stokes: LU factorization of the projection system failed");
}

SpMat StokesOperator::assemble(bool with_laplacian, double diag_shift) const {
    const int nc = g_.ncells();
    const int N = n_int_ + nc + 1;
    const double ihx2 = 1.0 / (g_.hx * g_.hx), ihy2 = 1.0 / (g_.hy * g_.hy);
    const double ihx = 1.0 / g_.hx, ihy = 1.0 / g_.hy;

    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(9 * n_int_ + 4 * nc + 2 * nc);

    auto add = [&](int r, int c, double v) { trip.emplace_back(r, c, v); };
    // gradient coupling between an interior face row and a cell column,
    // mirrored into the continuity row so the matrix stays symmetric
    auto couple = [&](int a, int cell, double v) {
        add(a, n_int_ + cell, v);
        add(n_int_ + cell, a, v);
    };

    for (int j = 0; j < g_.ny; ++j)
        for (int i = 1; i < g_.nx; ++i) {
            const int a = int_of_face_[g_.iu(i, j)];
            double diag = diag_shift;
            if (with_laplacian) {
                diag += 2 * ihx2 + 2 * ihy2;
                // no-slip ghost reflection across the horizontal walls
                if (j == 0) diag += ihy2;
                if (j == g_.ny - 1) diag += ihy2;
                if (i > 1) add(a, int_of_face_[g_.iu(i - 1, j)], -ihx2);
                if (i < g_.nx - 1) add(a, int_of_face_[g_.iu(i + 1, j)], -ihx2);
                if (j > 0) add(a, int_of_face_[g_.iu(i, j - 1)], -ihy2);
                if (j < g_.ny - 1) add(a, int_of_face_[g_.iu(i, j + 1)], -ihy2);
            }
            add(a, a, diag);
            // G p = MAC pressure gradient (p right minus p left) / hx
            couple(a, g_.ic(i - 1, j), -ihx);
            couple(a, g_.ic(i, j), ihx);
        }
    for (int j = 1; j < g_.ny; ++j)
        for (int i = 0; i < g_.nx; ++i) {
            const int a = int_of_face_[g_.iv(i, j)];
            double diag = diag_shift;
            if (with_laplacian) {
                diag += 2 * ihx2 + 2 * ihy2;
                if (i == 0) diag += ihx2;
                if (i == g_.nx - 1) diag += ihx2;
                if (j > 1) add(a, int_of_face_[g_.iv(i, j - 1)], -ihy2);
                if (j < g_.ny - 1) add(a, int_of_face_[g_.iv(i, j + 1)], -ihy2);
                if (i > 0) add(a, int_of_face_[g_.iv(i - 1, j)], -ihx2);
                if (i < g_.nx - 1) add(a, int_of_face_[g_.iv(i + 1, j)], -ihx2);
            }
            add(a, a, diag);
            couple(a, g_.ic(i, j - 1), -ihy);
            couple(a, g_.ic(i, j), ihy);
        }
    // zero-mean pressure gauge (bordering removes the constant null space)
    for (int c = 0; c < nc; ++c) {
        add(n_int_ + c, N - 1, 1.0);
        add(N - 1, n_int_ + c, 1.0);
    }

    SpMat m(N, N);
    m.setFromTriplets(trip.begin(), trip.end());
    m.makeCompressed();
    return m;
}

void StokesOperator::step(const Vec& rhs_faces, Vec& vel_out,
                          Vec& pre_out) const {
    const int nc = g_.ncells();
    Vec rhs = Vec::Zero(n_int_ + nc + 1);
    for (int a = 0; a < n_int_; ++a) rhs[a] = rhs_faces[face_of_int_[a]];
    const Vec sol = lu_step_->solve(rhs);
    if (lu_step_->info() != Eigen::Success)
        throw solver_error("stokes: step solve failed");
    vel_out = Vec::Zero(g_.nfaces());
    for (int a = 0; a < n_int_; ++a) vel_out[face_of_int_[a]] = sol[a];
    pre_out = sol.segment(n_int_, nc);
}

Vec StokesOperator::project(const Vec& faces) const {
    const int nc = g_.ncells();
    Vec rhs = Vec::Zero(n_int_ + nc + 1);
    for (int a = 0; a < n_int_; ++a) rhs[a] = faces[face_of_int_[a]];
    const Vec sol = lu_proj_->solve(rhs);
    if (lu_proj_->info() != Eigen::Success)
        throw solver_error("stokes: projection solve failed");
    Vec out = Vec::Zero(g_.nfaces());
    for (int a = 0; a < n_int_; ++a) out[face_of_int_[a]] = sol[a];
    return out;
}

namespace {

// rhs for one implicit step from state w consuming source level k
Vec step_rhs(const StokesOperator& op, const Vec& w, const SourceFn& f, int k,
             const ControlField* v) {
    Vec rhs = w / op.dt();
    if (f) {
        Vec src = Vec::Zero(w.size());
        f(k, src);
        rhs += src;
    }
    if (v) rhs += v->v[k];
    return rhs;
}

}  // namespace

StateTrajectory solve_forward(const StokesOperator& op, const Vec& y0,
                              const SourceFn& f, const ControlField* v,
                              bool store_pressure) {
    const Grid& g = op.grid();
    StateTrajectory tr;
    tr.dt = op.dt();
    tr.vel.resize(g.nt + 1);
    if (store_pressure) tr.pre.assign(g.nt + 1, Vec::Zero(g.ncells()));
    tr.vel[0] = op.project(y0);
    Vec pre;
    for (int k = 0; k < g.nt; ++k) {
        op.step(step_rhs(op, tr.vel[k], f, k, v), tr.vel[k + 1], pre);
        if (store_pressure) tr.pre[k + 1] = pre;
    }
    return tr;
}

void run_forward(const StokesOperator& op, const Vec& y0, const SourceFn& f,
                 const ControlField* v, const StepObserver& obs) {
    const Grid& g = op.grid();
    Vec w = op.project(y0), pre = Vec::Zero(g.ncells());
    if (obs) obs(0, w, pre);
    Vec wn;
    for (int k = 0; k < g.nt; ++k) {
        op.step(step_rhs(op, w, f, k, v), wn, pre);
        w.swap(wn);
        if (obs) obs(k + 1, w, pre);
    }
}

StateTrajectory solve_adjoint(const StokesOperator& op, const Vec& phiT,
                              const SourceFn& gsrc, bool store_pressure) {
    const Grid& g = op.grid();
    StateTrajectory tr;
    tr.dt = op.dt();
    tr.vel.resize(g.nt + 1);
    if (store_pressure) tr.pre.assign(g.nt + 1, Vec::Zero(g.ncells()));
    tr.vel[g.nt] = op.project(phiT);
    Vec pre;
    for (int k = g.nt - 1; k >= 0; --k) {
        op.step(step_rhs(op, tr.vel[k + 1], gsrc, k + 1, nullptr), tr.vel[k],
                pre);
        if (store_pressure) tr.pre[k] = pre;
    }
    return tr;
}

double trajectory_max_div(const Grid& g, const StateTrajectory& tr) {
    double m = 0;
    for (const Vec& q : tr.vel) m = std::max(m, max_divergence_rel(g, q));
    return m;
}

double regularity_ratio(const Grid& g, const StateTrajectory& u,
                        const std::vector<Vec>& f_samples) {
    const int nt = u.nt();
    const double dt = u.dt;
    // L2-in-time H2 surrogate (trapezoid) plus the discrete time derivative
    double num = 0;
    for (int k = 0; k <= nt; ++k) {
        const Vec lu = apply_l(g, u.vel[k]);
        const double h2 = dot_l2(g, u.vel[k], u.vel[k]) +
                          dot_l2(g, lu, u.vel[k]) + dot_l2(g, lu, lu);
        num += (k == 0 || k == nt ? 0.5 : 1.0) * dt * h2;
    }
    for (int k = 0; k < nt; ++k) {
        const Vec du = (u.vel[k + 1] - u.vel[k]) / dt;
        num += dt * dot_l2(g, du, du);
    }
    double den = 0;
    const int nf = std::min<int>(nt, static_cast<int>(f_samples.size()));
    for (int k = 0; k < nf; ++k) den += dt * dot_l2(g, f_samples[k], f_samples[k]);
    if (den == 0) return 0;
    return num / den;
}

Vec mms_velocity(const Grid& g, double t) {
    using std::numbers::pi;
    const double et = std::exp(-t);
    Vec q = Vec::Zero(g.nfaces());
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) {
            const double x = g.xu(i), y = g.yu(j);
            const double sx = std::sin(pi * x);
            q[g.iu(i, j)] = pi * sx * sx * std::sin(2 * pi * y) * et;
        }
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double x = g.xv(i), y = g.yv(j);
            const double sy = std::sin(pi * y);
            q[g.iv(i, j)] = -pi * std::sin(2 * pi * x) * sy * sy * et;
        }
    return q;
}

Vec mms_source(const Grid& g, double t) {
    using std::numbers::pi;
    const double et = std::exp(-t);
    const double pi3 = pi * pi * pi;
    Vec q = Vec::Zero(g.nfaces());
    // f = y_t - Lap y + grad p for the stream-function reference field
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) {
            const double x = g.xu(i), y = g.yu(j);
            const double sx = std::sin(pi * x);
            const double ue = pi * sx * sx * std::sin(2 * pi * y);
            const double lap =
                2 * pi3 * (2 * std::cos(2 * pi * x) - 1) * std::sin(2 * pi * y);
            const double px = -pi * std::sin(pi * x) * std::cos(pi * y);
            q[g.iu(i, j)] = (-ue - lap + px) * et;
        }
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double x = g.xv(i), y = g.yv(j);
            const double sy = std::sin(pi * y);
            const double ve = -pi * std::sin(2 * pi * x) * sy * sy;
            const double lap = -2 * pi3 * (2 * std::cos(2 * pi * y) - 1) *
                               std::sin(2 * pi * x);
            const double py = -pi * std::cos(pi * x) * std::sin(pi * y);
            q[g.iv(i, j)] = (-ve - lap + py) * et;
        }
    return q;
}

}  // namespace nsctrl
