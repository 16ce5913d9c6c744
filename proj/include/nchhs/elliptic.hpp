#pragma once

#include "nchhs/grid.hpp"

namespace nchhs {

/// Face-based diffusion coefficients for the conservative variable-coefficient
/// operator div(c grad .). Boundary faces hold zero in neumann mode (no flux);
/// periodic producers keep the wrap faces equal.
struct FaceCoef {
    Array2d cx; // (nx+1, ny)
    Array2d cy; // (nx, ny+1)

    static FaceCoef zeros(const Grid& g) {
        FaceCoef f;
        f.cx = Array2d::Zero(g.nx + 1, g.ny);
        f.cy = Array2d::Zero(g.nx, g.ny + 1);
        return f;
    }

    static FaceCoef ones_interior(const Grid& g) {
        FaceCoef f = zeros(g);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 1; i < g.nx; ++i) f.cx(i, j) = 1.0;
        for (int j = 1; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) f.cy(i, j) = 1.0;
        if (g.periodic()) {
            for (int j = 0; j < g.ny; ++j) f.cx(0, j) = f.cx(g.nx, j) = 1.0;
            for (int i = 0; i < g.nx; ++i) f.cy(i, 0) = f.cy(i, g.ny) = 1.0;
        }
        return f;
    }
};

/// out = -div(c grad in); zero-flux walls in neumann mode, wrap in periodic.
inline void apply_neg_div_coef_grad(const Grid& g, const FaceCoef& c, const Array2d& in,
                                    Array2d& out) {
    const double ihx2 = 1.0 / (g.hx * g.hx), ihy2 = 1.0 / (g.hy * g.hy);
    const int nx = g.nx, ny = g.ny;
    const bool per = g.periodic();
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            const double pc = in(i, j);
            double acc = 0.0;
            if (i + 1 < nx)
                acc += c.cx(i + 1, j) * (in(i + 1, j) - pc) * ihx2;
            else if (per)
                acc += c.cx(nx, j) * (in(0, j) - pc) * ihx2;
            if (i > 0)
                acc -= c.cx(i, j) * (pc - in(i - 1, j)) * ihx2;
            else if (per)
                acc -= c.cx(0, j) * (pc - in(nx - 1, j)) * ihx2;
            if (j + 1 < ny)
                acc += c.cy(i, j + 1) * (in(i, j + 1) - pc) * ihy2;
            else if (per)
                acc += c.cy(i, ny) * (in(i, 0) - pc) * ihy2;
            if (j > 0)
                acc -= c.cy(i, j) * (pc - in(i, j - 1)) * ihy2;
            else if (per)
                acc -= c.cy(i, 0) * (pc - in(i, ny - 1)) * ihy2;
            out(i, j) = -acc;
        }
}

/// Diagonal of -div(c grad .).
inline Array2d neg_div_coef_grad_diag(const Grid& g, const FaceCoef& c) {
    Array2d d(g.nx, g.ny);
    const double ihx2 = 1.0 / (g.hx * g.hx), ihy2 = 1.0 / (g.hy * g.hy);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            d(i, j) = (c.cx(i, j) + c.cx(i + 1, j)) * ihx2 + (c.cy(i, j) + c.cy(i, j + 1)) * ihy2;
    return d;
}

} // namespace nchhs
