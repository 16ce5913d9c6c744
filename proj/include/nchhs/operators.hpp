#pragma once

#include "nchhs/grid.hpp"

namespace nchhs {

/// Centered second-order gradient at cell centers. Neumann mode extends by
/// even reflection (zero normal derivative); periodic mode wraps.
VectorField gradient(const ScalarField& f);

/// First-order face-normal differences on the staggered layout. Neumann
/// boundary faces are zero; periodic wrap faces are duplicated at 0 and n.
/// laplacian() is exactly divergence(face_gradient(f)).
VectorField face_gradient(const ScalarField& f);

/// Conservative flux-difference divergence. Staggered inputs are differenced
/// directly (boundary faces taken as given). Cell-centered inputs are first
/// averaged onto faces, with zero boundary-normal faces in neumann mode.
ScalarField divergence(const VectorField& v);

/// 5-point Laplacian realized as divergence(face_gradient(f)); the operator
/// factorization is exact, not approximate.
ScalarField laplacian(const ScalarField& f);

// Midpoint quadrature and the norms consistent with it.
double integrate(const ScalarField& f);
double inner(const ScalarField& a, const ScalarField& b);
double l2_norm(const ScalarField& f);
double h1_seminorm(const ScalarField& f);
double linf_norm(const ScalarField& f);

/// L2 norm of a vector field (face samples carry full cell weight; wrap/zero
/// boundary faces are weighted half so the staggered norm is quadrature
/// consistent with the cell norm).
double l2_norm(const VectorField& v);
double linf_norm(const VectorField& v);

/// Scalar field averaged onto x-faces / y-faces, shape (nx+1, ny) / (nx, ny+1).
/// Boundary faces: even extension in neumann mode; wrap average in periodic.
Array2d to_xfaces(const ScalarField& f);
Array2d to_yfaces(const ScalarField& f);

/// Cell-centered vector field averaged onto face normals. Neumann boundary
/// faces are set to zero (no-flux convention); periodic faces wrap.
VectorField cc_to_staggered(const VectorField& v);

/// Staggered field averaged back to cell centers (both components).
VectorField staggered_to_cc(const VectorField& v);

} // namespace nchhs
