#pragma once

#include "nchhs/grid.hpp"

#include <cmath>

namespace nchhs {

struct CgResult {
    int iterations = 0;
    double initial_residual = 0.0;
    double final_residual = 0.0;
    bool converged = false;
};

/// Preconditioned conjugate gradients on cell arrays, matrix-free.
/// `apply(x, out)` applies the SPD (or SPSD) operator; `inv_diag` is the
/// Jacobi preconditioner (pass nullptr for identity). With
/// `project_mean_zero`, iterates and residuals are kept mean-free, which
/// handles the constant null space of pure-Neumann operators.
template <class Apply>
CgResult pcg(const Apply& apply, const Array2d& b, Array2d& x, const Array2d* inv_diag,
             double rel_tol, int max_iter, bool project_mean_zero) {
    const auto n = static_cast<double>(b.size());
    auto project = [&](Array2d& a) {
        if (project_mean_zero) a -= a.sum() / n;
    };

    Array2d r = b, tmp(b.rows(), b.cols());
    if ((x != 0.0).any()) {
        apply(x, tmp);
        r -= tmp;
    }
    project(r);

    CgResult res;
    const double bnorm = std::sqrt((b * b).sum());
    res.initial_residual = std::sqrt((r * r).sum());
    const double target = rel_tol * (bnorm > 0 ? bnorm : 1.0);
    if (res.initial_residual <= target || res.initial_residual == 0.0) {
        res.final_residual = res.initial_residual;
        res.converged = true;
        return res;
    }

    Array2d z = inv_diag ? Array2d(r * (*inv_diag)) : r;
    project(z);
    Array2d p = z;
    double rz = (r * z).sum();

    for (int it = 1; it <= max_iter; ++it) {
        apply(p, tmp);
        project(tmp);
        const double pap = (p * tmp).sum();
        if (!(pap > 0.0)) break; // null-space direction or breakdown
        const double alpha = rz / pap;
        x += alpha * p;
        r -= alpha * tmp;
        project(r);
        res.iterations = it;
        res.final_residual = std::sqrt((r * r).sum());
        if (res.final_residual <= target) {
            res.converged = true;
            break;
        }
        z = inv_diag ? Array2d(r * (*inv_diag)) : r;
        project(z);
        const double rz_new = (r * z).sum();
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    if (project_mean_zero) x -= x.sum() / n;
    return res;
}

} // namespace nchhs
