#include "nsctrl/grid.hpp"

#include <cmath>
#include <sstream>

namespace nsctrl {

RegionSpec RegionSpec::rect(double x0, double y0, double x1, double y1) {
    RegionSpec r;
    r.shape = Shape::rect;
    r.x0 = x0;
    r.y0 = y0;
    r.x1 = x1;
    r.y1 = y1;
    return r;
}

RegionSpec RegionSpec::disc(double cx, double cy, double rad) {
    RegionSpec r;
    r.shape = Shape::disc;
    r.cx = cx;
    r.cy = cy;
    r.r = rad;
    return r;
}

RegionSpec RegionSpec::parse(const std::string& text) {
    std::istringstream iss(text);
    std::string tag;
    iss >> tag;
    if (tag == "rect") {
        double a, b, c, d;
        if (!(iss >> a >> b >> c >> d))
            throw config_error("region: expected 'rect x0 y0 x1 y1', got '" +
                               text + "'");
        if (!(a < c && b < d))
            throw config_error("region: degenerate rectangle in '" + text +
                               "'");
        return rect(a, b, c, d);
    }
    if (tag == "disc") {
        double a, b, c;
        if (!(iss >> a >> b >> c))
            throw config_error("region: expected 'disc cx cy r', got '" +
                               text + "'");
        if (!(c > 0))
            throw config_error("region: nonpositive radius in '" + text + "'");
        return disc(a, b, c);
    }
    throw config_error("region: unknown shape '" + tag + "' in '" + text +
                       "' (expected rect|disc)");
}

bool RegionSpec::contains(double x, double y) const {
    if (shape == Shape::rect)
        return x > x0 && x < x1 && y > y0 && y < y1;
    const double dx = x - cx, dy = y - cy;
    return dx * dx + dy * dy < r * r;
}

std::string RegionSpec::describe() const {
    std::ostringstream os;
    if (shape == Shape::rect)
        os << "rect (" << x0 << "," << y0 << ")-(" << x1 << "," << y1 << ")";
    else
        os << "disc c=(" << cx << "," << cy << ") r=" << r;
    return os.str();
}

namespace {

void check_region_valid(const RegionSpec& r, const std::string& name) {
    if (r.shape == RegionSpec::Shape::rect) {
        if (!(r.x0 < r.x1 && r.y0 < r.y1))
            throw config_error(name + ": degenerate rectangle " + r.describe());
    } else if (!(r.r > 0)) {
        throw config_error(name + ": nonpositive radius " + r.describe());
    }
}

// strict containment of r inside the open unit square
bool inside_unit_square(const RegionSpec& r) {
    if (r.shape == RegionSpec::Shape::rect)
        return r.x0 > 0 && r.x1 < 1 && r.y0 > 0 && r.y1 < 1;
    return r.cx - r.r > 0 && r.cx + r.r < 1 && r.cy - r.r > 0 &&
           r.cy + r.r < 1;
}

// strict containment of `inner` inside `outer`, by descriptor arithmetic
bool region_inside(const RegionSpec& inner, const RegionSpec& outer) {
    using Shape = RegionSpec::Shape;
    if (outer.shape == Shape::rect) {
        if (inner.shape == Shape::rect)
            return inner.x0 > outer.x0 && inner.x1 < outer.x1 &&
                   inner.y0 > outer.y0 && inner.y1 < outer.y1;
        return inner.cx - inner.r > outer.x0 && inner.cx + inner.r < outer.x1 &&
               inner.cy - inner.r > outer.y0 && inner.cy + inner.r < outer.y1;
    }
    // outer disc: reduce to the farthest point of the inner region
    auto far_corner_ok = [&](double x, double y) {
        const double dx = x - outer.cx, dy = y - outer.cy;
        return std::sqrt(dx * dx + dy * dy) < outer.r;
    };
    if (inner.shape == Shape::rect)
        return far_corner_ok(inner.x0, inner.y0) &&
               far_corner_ok(inner.x0, inner.y1) &&
               far_corner_ok(inner.x1, inner.y0) &&
               far_corner_ok(inner.x1, inner.y1);
    const double dx = inner.cx - outer.cx, dy = inner.cy - outer.cy;
    return std::sqrt(dx * dx + dy * dy) + inner.r < outer.r;
}

}  // namespace

Grid build_grid(int nx, int ny, int nt, double T, const RegionSpec& omega,
                const RegionSpec& omega0) {
    if (nx < 4 || ny < 4 || nt < 4)
        throw config_error("grid: nx, ny, nt must all be >= 4 (got " +
                           std::to_string(nx) + "," + std::to_string(ny) +
                           "," + std::to_string(nt) + ")");
    if (!(T > 0)) throw config_error("grid: T must be positive");
    check_region_valid(omega, "omega");
    check_region_valid(omega0, "omega0");
    if (!inside_unit_square(omega))
        throw config_error("omega must lie strictly inside the unit square: " +
                           omega.describe());
    if (!region_inside(omega0, omega))
        throw config_error("omega0 must lie strictly inside omega: omega0 = " +
                           omega0.describe() + ", omega = " + omega.describe());

    Grid g;
    g.nx = nx;
    g.ny = ny;
    g.nt = nt;
    g.T = T;
    g.hx = 1.0 / nx;
    g.hy = 1.0 / ny;
    g.dt = T / nt;
    g.omega = omega;
    g.omega0 = omega0;

    g.omega_cell.assign(g.ncells(), 0);
    g.omega0_cell.assign(g.ncells(), 0);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double x = g.xc(i), y = g.yc(j);
            g.omega_cell[g.ic(i, j)] = omega.contains(x, y);
            g.omega0_cell[g.ic(i, j)] = omega0.contains(x, y);
        }

    g.omega_u.assign(g.nfaces(), 0);
    g.omega_v.assign(g.nfaces(), 0);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i <= nx; ++i)
            g.omega_u[g.iu(i, j)] = omega.contains(g.xu(i), g.yu(j));
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i < nx; ++i)
            g.omega_v[g.iv(i, j)] = omega.contains(g.xv(i), g.yv(j));

    g.omega0_node.assign(g.nnodes(), 0);
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            g.omega0_node[g.inode(i, j)] = omega0.contains(g.xn(i), g.yn(j));

    // cell-wise double check of the containment chain, plus non-emptiness of
    // the control masks (a control region the mesh cannot see is unusable)
    int n_omega_cells = 0, n_u = 0, n_v = 0;
    for (int c = 0; c < g.ncells(); ++c) {
        n_omega_cells += g.omega_cell[c];
        if (g.omega0_cell[c] && !g.omega_cell[c])
            throw config_error("omega0 cell mask escapes the omega mask");
    }
    for (int f = 0; f < g.nfaces(); ++f) {
        n_u += g.omega_u[f];
        n_v += g.omega_v[f];
    }
    if (n_omega_cells == 0 || n_u == 0 || n_v == 0)
        throw config_error(
            "omega mask is empty on this mesh; refine the grid or enlarge "
            "omega (" + omega.describe() + ")");
    return g;
}

}  // namespace nsctrl
