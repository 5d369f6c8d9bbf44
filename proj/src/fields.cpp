#include "nsctrl/fields.hpp"

#include <cmath>
#include <numbers>

namespace nsctrl {

double dot_l2(const Grid& g, const Vec& a, const Vec& b) {
    return g.hx * g.hy * a.dot(b);
}

double norm_l2(const Grid& g, const Vec& a) {
    return std::sqrt(dot_l2(g, a, a));
}

Vec divergence(const Grid& g, const Vec& q) {
    Vec d(g.ncells());
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            d[g.ic(i, j)] = (q[g.iu(i + 1, j)] - q[g.iu(i, j)]) / g.hx +
                            (q[g.iv(i, j + 1)] - q[g.iv(i, j)]) / g.hy;
    return d;
}

double max_divergence_rel(const Grid& g, const Vec& q) {
    const double dmax = divergence(g, q).cwiseAbs().maxCoeff();
    const double qmax = q.cwiseAbs().maxCoeff();
    if (qmax == 0) return dmax;
    return dmax / (qmax * (1.0 / g.hx + 1.0 / g.hy));
}

Vec apply_l(const Grid& g, const Vec& q) {
    Vec out = Vec::Zero(g.nfaces());
    const double ihx2 = 1.0 / (g.hx * g.hx), ihy2 = 1.0 / (g.hy * g.hy);
    // u component: interior vertical faces i = 1..nx-1.  Neighbors in x are
    // stored faces (boundary ones pinned to zero); across the horizontal
    // walls the ghost value is the no-slip reflection -u.
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) {
            const double c = q[g.iu(i, j)];
            const double lx =
                (q[g.iu(i - 1, j)] - 2 * c + q[g.iu(i + 1, j)]) * ihx2;
            const double dn = j > 0 ? q[g.iu(i, j - 1)] : -c;
            const double up = j < g.ny - 1 ? q[g.iu(i, j + 1)] : -c;
            const double ly = (dn - 2 * c + up) * ihy2;
            out[g.iu(i, j)] = -(lx + ly);
        }
    // v component: interior horizontal faces j = 1..ny-1, mirrored roles.
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double c = q[g.iv(i, j)];
            const double ly =
                (q[g.iv(i, j - 1)] - 2 * c + q[g.iv(i, j + 1)]) * ihy2;
            const double lf = i > 0 ? q[g.iv(i - 1, j)] : -c;
            const double rt = i < g.nx - 1 ? q[g.iv(i + 1, j)] : -c;
            const double lx = (lf - 2 * c + rt) * ihx2;
            out[g.iv(i, j)] = -(lx + ly);
        }
    return out;
}

namespace {

double masked_comp_norm2(const Grid& g, const Vec& q, int component,
                         bool masked) {
    double acc = 0;
    if (component == 1) {
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i <= g.nx; ++i) {
                const int f = g.iu(i, j);
                if (!masked || g.omega_u[f]) acc += q[f] * q[f];
            }
    } else if (component == 2) {
        for (int j = 0; j <= g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const int f = g.iv(i, j);
                if (!masked || g.omega_v[f]) acc += q[f] * q[f];
            }
    } else {
        throw config_error("component index out of range: " +
                           std::to_string(component));
    }
    return g.hx * g.hy * acc;
}

}  // namespace

double comp_norm2_omega(const Grid& g, const Vec& q, int component) {
    return masked_comp_norm2(g, q, component, true);
}

double comp_norm2(const Grid& g, const Vec& q, int component) {
    return masked_comp_norm2(g, q, component, false);
}

Vec random_stream_velocity(const Grid& g, Rng& rng) {
    using std::numbers::pi;
    const int mmax = std::max(2, g.nx / 4);
    // Stream function on the nodes; boundary ring forced to exact zero so
    // the discrete curl below telescopes to an exactly divergence-free field
    // with exactly vanishing normal boundary faces.
    Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(g.nx + 1, g.ny + 1);
    for (int m = 1; m <= mmax; ++m)
        for (int n = 1; n <= mmax; ++n) {
            const double a = rng.gaussian() / double(m * m + n * n);
            for (int j = 1; j < g.ny; ++j)
                for (int i = 1; i < g.nx; ++i)
                    psi(i, j) += a * std::sin(m * pi * g.xn(i)) *
                                 std::sin(n * pi * g.yn(j));
        }
    Vec q = Vec::Zero(g.nfaces());
    // u = d_y psi, v = -d_x psi as exact node differences (MAC curl)
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i)
            q[g.iu(i, j)] = (psi(i, j + 1) - psi(i, j)) / g.hy;
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            q[g.iv(i, j)] = -(psi(i + 1, j) - psi(i, j)) / g.hx;
    const double nrm = norm_l2(g, q);
    if (nrm > 0) q /= nrm;
    return q;
}

std::vector<Vec> random_smooth_source(const Grid& g, Rng& rng) {
    using std::numbers::pi;
    const int mmax = std::max(2, g.nx / 4);
    // Separable basis, per component:  sum_mn a_mn(t) sin(m pi x) sin(n pi y)
    // with a_mn(t) = b_mn cos(w_mn t + theta_mn); evaluated as small matrix
    // products per time level.
    Eigen::MatrixXd bu(mmax, mmax), bv(mmax, mmax);
    Eigen::MatrixXd wu(mmax, mmax), wv(mmax, mmax);
    Eigen::MatrixXd thu(mmax, mmax), thv(mmax, mmax);
    for (int m = 0; m < mmax; ++m)
        for (int n = 0; n < mmax; ++n) {
            const double decay = double((m + 1) * (m + 1) + (n + 1) * (n + 1));
            bu(m, n) = rng.gaussian() / decay;
            bv(m, n) = rng.gaussian() / decay;
            wu(m, n) = pi / g.T * std::floor(rng.uniform() * 4.0);
            wv(m, n) = pi / g.T * std::floor(rng.uniform() * 4.0);
            thu(m, n) = 2 * pi * rng.uniform();
            thv(m, n) = 2 * pi * rng.uniform();
        }
    // mode values at the staggered sample coordinates of each component
    Eigen::MatrixXd sxu(mmax, g.nx + 1), syu(mmax, g.ny);
    Eigen::MatrixXd sxv(mmax, g.nx), syv(mmax, g.ny + 1);
    for (int m = 0; m < mmax; ++m) {
        for (int i = 0; i <= g.nx; ++i) sxu(m, i) = std::sin((m + 1) * pi * g.xu(i));
        for (int j = 0; j < g.ny; ++j) syu(m, j) = std::sin((m + 1) * pi * g.yu(j));
        for (int i = 0; i < g.nx; ++i) sxv(m, i) = std::sin((m + 1) * pi * g.xv(i));
        for (int j = 0; j <= g.ny; ++j) syv(m, j) = std::sin((m + 1) * pi * g.yv(j));
    }
    std::vector<Vec> out(g.nt + 1);
    for (int k = 0; k <= g.nt; ++k) {
        const double t = g.t(k);
        const Eigen::MatrixXd au =
            bu.array() * (wu.array() * t + thu.array()).cos();
        const Eigen::MatrixXd av =
            bv.array() * (wv.array() * t + thv.array()).cos();
        const Eigen::MatrixXd fu = sxu.transpose() * au * syu;   // (nx+1) x ny
        const Eigen::MatrixXd fv = sxv.transpose() * av * syv;   // nx x (ny+1)
        Vec q = Vec::Zero(g.nfaces());
        for (int j = 0; j < g.ny; ++j)
            for (int i = 1; i < g.nx; ++i) q[g.iu(i, j)] = fu(i, j);
        for (int j = 1; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) q[g.iv(i, j)] = fv(i, j);
        out[k] = std::move(q);
    }
    return out;
}

}  // namespace nsctrl
