#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <utility>

namespace nchhs {

/// Dense cell array, indexed (ix, iy) with ix contiguous (column-major).
using Array2d = Eigen::ArrayXXd;

enum class BoundaryMode { neumann, periodic };

/// Rectangle extent and resolution. Neumann mode models a bounded domain with
/// no-flux walls; periodic mode is a torus used as a verification device.
struct DomainSpec {
    double lx = 1.0;
    double ly = 1.0;
    int nx = 64;
    int ny = 64;
    BoundaryMode boundary_mode = BoundaryMode::neumann;
};

struct Grid {
    double lx = 1.0, ly = 1.0;
    int nx = 0, ny = 0;
    BoundaryMode mode = BoundaryMode::neumann;
    double hx = 0.0, hy = 0.0;

    static Grid make(const DomainSpec& spec) {
        if (spec.nx < 8 || spec.ny < 8)
            throw std::invalid_argument("grid: nx, ny must be >= 8");
        if (!(spec.lx > 0.0) || !(spec.ly > 0.0))
            throw std::invalid_argument("grid: lx, ly must be positive");
        Grid g;
        g.lx = spec.lx;
        g.ly = spec.ly;
        g.nx = spec.nx;
        g.ny = spec.ny;
        g.mode = spec.boundary_mode;
        g.hx = spec.lx / spec.nx;
        g.hy = spec.ly / spec.ny;
        return g;
    }

    double cell_area() const { return hx * hy; }
    double area() const { return lx * ly; }
    bool periodic() const { return mode == BoundaryMode::periodic; }

    // cell-center coordinates
    double x(int i) const { return (i + 0.5) * hx; }
    double y(int j) const { return (j + 0.5) * hy; }

    bool operator==(const Grid&) const = default;
};

/// Cell-centered sampled scalar function.
struct ScalarField {
    Grid grid;
    Array2d v;

    ScalarField() = default;
    ScalarField(Grid g, Array2d values) : grid(g), v(std::move(values)) {}

    static ScalarField zeros(const Grid& g) { return {g, Array2d::Zero(g.nx, g.ny)}; }
    static ScalarField constant(const Grid& g, double c) {
        return {g, Array2d::Constant(g.nx, g.ny, c)};
    }

    template <class F>
    static ScalarField sample(const Grid& g, F&& f) {
        ScalarField out = zeros(g);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) out.v(i, j) = f(g.x(i), g.y(j));
        return out;
    }

    double operator()(int i, int j) const { return v(i, j); }
    double& operator()(int i, int j) { return v(i, j); }
};

enum class VectorLayout {
    cell_centered, ///< both components sampled at cell centers, shape (nx, ny)
    staggered      ///< face-normal components: x on x-faces (nx+1, ny), y on y-faces (nx, ny+1)
};

/// Two-component vector field; the layout flag records where samples live.
/// Staggered fields carry boundary faces explicitly (periodic producers keep
/// the wrap faces 0 and n equal).
struct VectorField {
    Grid grid;
    VectorLayout layout = VectorLayout::cell_centered;
    Array2d x, y;

    static VectorField zeros_cc(const Grid& g) {
        VectorField f;
        f.grid = g;
        f.layout = VectorLayout::cell_centered;
        f.x = Array2d::Zero(g.nx, g.ny);
        f.y = Array2d::Zero(g.nx, g.ny);
        return f;
    }

    static VectorField zeros_staggered(const Grid& g) {
        VectorField f;
        f.grid = g;
        f.layout = VectorLayout::staggered;
        f.x = Array2d::Zero(g.nx + 1, g.ny);
        f.y = Array2d::Zero(g.nx, g.ny + 1);
        return f;
    }
};

inline void require_same_grid(const Grid& a, const Grid& b, const char* what) {
    if (!(a == b)) throw std::invalid_argument(std::string(what) + ": grid mismatch");
}

} // namespace nchhs
