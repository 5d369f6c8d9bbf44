#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nsctrl/common.hpp"

namespace nsctrl {

// Axis-aligned rectangle or disc inside the unit square.  Used for the
// control region (omega) and the inner region omega0 that must contain the
// interior critical point of the spatial profile eta.
struct RegionSpec {
    enum class Shape { rect, disc };
    Shape shape = Shape::rect;
    // rect: corners (x0,y0)-(x1,y1); disc: center (cx,cy), radius r
    double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
    double cx = 0, cy = 0, r = 0;

    static RegionSpec rect(double x0, double y0, double x1, double y1);
    static RegionSpec disc(double cx, double cy, double r);
    // "rect 0.3 0.3 0.7 0.7" | "disc 0.45 0.45 0.12"
    static RegionSpec parse(const std::string& text);

    bool contains(double x, double y) const;  // open region
    std::string describe() const;
};

// MAC staggering on the unit square Omega = (0,1)^2:
//   u (x-velocity) on vertical faces,   (nx+1) x ny,  at (i*hx, (j+1/2)*hy)
//   v (y-velocity) on horizontal faces,  nx x (ny+1), at ((i+1/2)*hx, j*hy)
//   p at cell centers,                    nx x ny,     at ((i+1/2)*hx, (j+1/2)*hy)
// Velocity vectors are stored flat, u block then v block.  Boundary faces
// (u at i=0,nx; v at j=0,ny) are kept in the arrays and pinned to zero
// (no-slip); the implicit solver only ever touches interior faces.
struct Grid {
    int nx = 0, ny = 0, nt = 0;
    double T = 0, hx = 0, hy = 0, dt = 0;
    RegionSpec omega, omega0;

    // masks: 1 if the sample point lies inside the region
    std::vector<std::uint8_t> omega_cell, omega0_cell;  // nx*ny
    std::vector<std::uint8_t> omega_u, omega_v;         // face masks
    std::vector<std::uint8_t> omega0_node;              // (nx+1)*(ny+1)

    int nu() const { return (nx + 1) * ny; }
    int nv() const { return nx * (ny + 1); }
    int nfaces() const { return nu() + nv(); }
    int ncells() const { return nx * ny; }
    int nnodes() const { return (nx + 1) * (ny + 1); }

    int iu(int i, int j) const { return i + j * (nx + 1); }
    int iv(int i, int j) const { return nu() + i + j * nx; }
    int ic(int i, int j) const { return i + j * nx; }
    int inode(int i, int j) const { return i + j * (nx + 1); }

    double xu(int i) const { return i * hx; }
    double yu(int j) const { return (j + 0.5) * hy; }
    double xv(int i) const { return (i + 0.5) * hx; }
    double yv(int j) const { return j * hy; }
    double xc(int i) const { return (i + 0.5) * hx; }
    double yc(int j) const { return (j + 0.5) * hy; }
    double xn(int i) const { return i * hx; }
    double yn(int j) const { return j * hy; }
    double t(int k) const { return k * dt; }
};

// Validates sizes and the strict containment chain omega0 c omega c Omega
// (descriptor-level arithmetic plus a cell-wise mask check) and builds all
// masks.  Throws config_error on violation.
Grid build_grid(int nx, int ny, int nt, double T, const RegionSpec& omega,
                const RegionSpec& omega0);

}  // namespace nsctrl
