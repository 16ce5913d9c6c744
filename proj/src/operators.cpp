#include "nchhs/operators.hpp"

#include <cmath>
#include <stdexcept>

namespace nchhs {

namespace {

inline int wrap(int i, int n) { return (i % n + n) % n; }

} // namespace

VectorField gradient(const ScalarField& f) {
    const Grid& g = f.grid;
    VectorField out = VectorField::zeros_cc(g);
    const Array2d& v = f.v;
    const double ix2 = 1.0 / (2.0 * g.hx);
    const double iy2 = 1.0 / (2.0 * g.hy);

    if (g.periodic()) {
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                out.x(i, j) = (v(wrap(i + 1, g.nx), j) - v(wrap(i - 1, g.nx), j)) * ix2;
                out.y(i, j) = (v(i, wrap(j + 1, g.ny)) - v(i, wrap(j - 1, g.ny))) * iy2;
            }
    } else {
        // even reflection: ghost(-1) = cell(0), ghost(n) = cell(n-1)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const double xm = v(i > 0 ? i - 1 : 0, j);
                const double xp = v(i < g.nx - 1 ? i + 1 : g.nx - 1, j);
                const double ym = v(i, j > 0 ? j - 1 : 0);
                const double yp = v(i, j < g.ny - 1 ? j + 1 : g.ny - 1);
                out.x(i, j) = (xp - xm) * ix2;
                out.y(i, j) = (yp - ym) * iy2;
            }
    }
    return out;
}

VectorField face_gradient(const ScalarField& f) {
    const Grid& g = f.grid;
    VectorField out = VectorField::zeros_staggered(g);
    const Array2d& v = f.v;

    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) out.x(i, j) = (v(i, j) - v(i - 1, j)) / g.hx;
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) out.y(i, j) = (v(i, j) - v(i, j - 1)) / g.hy;

    if (g.periodic()) {
        for (int j = 0; j < g.ny; ++j) {
            const double w = (v(0, j) - v(g.nx - 1, j)) / g.hx;
            out.x(0, j) = w;
            out.x(g.nx, j) = w;
        }
        for (int i = 0; i < g.nx; ++i) {
            const double w = (v(i, 0) - v(i, g.ny - 1)) / g.hy;
            out.y(i, 0) = w;
            out.y(i, g.ny) = w;
        }
    }
    // neumann: boundary faces stay zero (even reflection)
    return out;
}

ScalarField divergence(const VectorField& v) {
    const Grid& g = v.grid;
    const VectorField* s = &v;
    VectorField tmp;
    if (v.layout == VectorLayout::cell_centered) {
        tmp = cc_to_staggered(v);
        s = &tmp;
    }
    ScalarField out = ScalarField::zeros(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            out.v(i, j) = (s->x(i + 1, j) - s->x(i, j)) / g.hx +
                          (s->y(i, j + 1) - s->y(i, j)) / g.hy;
    return out;
}

ScalarField laplacian(const ScalarField& f) { return divergence(face_gradient(f)); }

double integrate(const ScalarField& f) { return f.v.sum() * f.grid.cell_area(); }

double inner(const ScalarField& a, const ScalarField& b) {
    require_same_grid(a.grid, b.grid, "inner");
    return (a.v * b.v).sum() * a.grid.cell_area();
}

double l2_norm(const ScalarField& f) { return std::sqrt((f.v * f.v).sum() * f.grid.cell_area()); }

double h1_seminorm(const ScalarField& f) { return l2_norm(gradient(f)); }

double linf_norm(const ScalarField& f) { return f.v.abs().maxCoeff(); }

double l2_norm(const VectorField& v) {
    const Grid& g = v.grid;
    if (v.layout == VectorLayout::cell_centered)
        return std::sqrt(((v.x * v.x) + (v.y * v.y)).sum() * g.cell_area());

    double sx = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            const double w = (i == 0 || i == g.nx) ? 0.5 : 1.0;
            sx += w * v.x(i, j) * v.x(i, j);
        }
    double sy = 0.0;
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double w = (j == 0 || j == g.ny) ? 0.5 : 1.0;
            sy += w * v.y(i, j) * v.y(i, j);
        }
    return std::sqrt((sx + sy) * g.cell_area());
}

double linf_norm(const VectorField& v) {
    return std::max(v.x.abs().maxCoeff(), v.y.abs().maxCoeff());
}

Array2d to_xfaces(const ScalarField& f) {
    const Grid& g = f.grid;
    Array2d out(g.nx + 1, g.ny);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 1; i < g.nx; ++i) out(i, j) = 0.5 * (f.v(i - 1, j) + f.v(i, j));
        if (g.periodic()) {
            const double w = 0.5 * (f.v(g.nx - 1, j) + f.v(0, j));
            out(0, j) = w;
            out(g.nx, j) = w;
        } else {
            out(0, j) = f.v(0, j);
            out(g.nx, j) = f.v(g.nx - 1, j);
        }
    }
    return out;
}

Array2d to_yfaces(const ScalarField& f) {
    const Grid& g = f.grid;
    Array2d out(g.nx, g.ny + 1);
    for (int i = 0; i < g.nx; ++i) {
        for (int j = 1; j < g.ny; ++j) out(i, j) = 0.5 * (f.v(i, j - 1) + f.v(i, j));
        if (g.periodic()) {
            const double w = 0.5 * (f.v(i, g.ny - 1) + f.v(i, 0));
            out(i, 0) = w;
            out(i, g.ny) = w;
        } else {
            out(i, 0) = f.v(i, 0);
            out(i, g.ny) = f.v(i, g.ny - 1);
        }
    }
    return out;
}

VectorField cc_to_staggered(const VectorField& v) {
    if (v.layout != VectorLayout::cell_centered)
        throw std::invalid_argument("cc_to_staggered: input must be cell-centered");
    const Grid& g = v.grid;
    VectorField out = VectorField::zeros_staggered(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) out.x(i, j) = 0.5 * (v.x(i - 1, j) + v.x(i, j));
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) out.y(i, j) = 0.5 * (v.y(i, j - 1) + v.y(i, j));
    if (g.periodic()) {
        for (int j = 0; j < g.ny; ++j) {
            const double w = 0.5 * (v.x(g.nx - 1, j) + v.x(0, j));
            out.x(0, j) = w;
            out.x(g.nx, j) = w;
        }
        for (int i = 0; i < g.nx; ++i) {
            const double w = 0.5 * (v.y(i, g.ny - 1) + v.y(i, 0));
            out.y(i, 0) = w;
            out.y(i, g.ny) = w;
        }
    }
    // neumann: boundary-normal faces zero
    return out;
}

VectorField staggered_to_cc(const VectorField& v) {
    if (v.layout != VectorLayout::staggered)
        throw std::invalid_argument("staggered_to_cc: input must be staggered");
    const Grid& g = v.grid;
    VectorField out = VectorField::zeros_cc(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            out.x(i, j) = 0.5 * (v.x(i, j) + v.x(i + 1, j));
            out.y(i, j) = 0.5 * (v.y(i, j) + v.y(i, j + 1));
        }
    return out;
}

} // namespace nchhs
