#pragma once

#include "nchhs/grid.hpp"
#include "nchhs/kernel.hpp"
#include "nchhs/laws.hpp"

#include <span>
#include <utility>

namespace nchhs {

struct SolverReport {
    int iterations = 0;
    double initial_residual = 0.0;
    double final_residual = 0.0;
    double compatibility_defect = 0.0;
    double mean_zero_defect = 0.0;
};

/// Variable-coefficient elliptic pressure problem: the flow force defaults to
/// (grad J * phi) phi; tests may override it with an explicit cell-centered
/// field (manufactured solutions).
struct PressureProblem {
    const ScalarField* phi = nullptr;
    const KernelOperator* kernel = nullptr;
    const MaterialParams* laws = nullptr;
    double rel_tol = 1e-10;
    int max_iter = 0; // 0: 20 * (nx + ny)
    const VectorField* forcing_override = nullptr;
    const ScalarField* initial_guess = nullptr; // warm start (time stepping)
};

/// Solve div((1/eta) grad pi) = div(force/eta) with the no-flux-compatible
/// Neumann datum folded in conservatively; pi is normalized to zero mean.
std::pair<ScalarField, SolverReport> solve_pressure(const PressureProblem& pb);

/// u = (1/eta) (force - grad pi) on staggered faces; boundary-normal faces
/// are zero.
VectorField recover_velocity(const ScalarField& pi, const ScalarField& phi,
                             const KernelOperator& kernel, const MaterialParams& laws,
                             const VectorField* forcing_override = nullptr);

/// The assembled symmetric operator -div((1/eta(phi)) grad .) as used by
/// solve_pressure (exposed for property tests).
ScalarField apply_pressure_operator(const ScalarField& q, const ScalarField& phi,
                                    const MaterialParams& laws);

enum class BrinkmanForce {
    korteweg, ///< mu grad phi on faces
    darcy     ///< (grad J * phi) phi face-averaged, matching the Darcy solve
};

struct BrinkmanOptions {
    double nu = 1e-2;
    double tol = 1e-8;     // absolute, on ||div u|| and the momentum residual
    int max_outer = 400;
    double relax = -1.0;   // pressure relaxation; <= 0 selects eta1
    double inner_rel_tol = 1e-11;
    BrinkmanForce force = BrinkmanForce::korteweg;
    const KernelOperator* kernel = nullptr; // required for BrinkmanForce::darcy
};

struct BrinkmanResult {
    VectorField u;  // staggered, no-slip walls
    ScalarField pi; // zero mean
    SolverReport report;
};

/// MAC discretization of -nu Lap(u) + eta_eps(phi) u + grad pi = f, div u = 0,
/// u = 0 on walls. Pressure-Schur (Uzawa) iteration; the divergence defect is
/// lifted through a Neumann Poisson solve so a fixed relaxation of size eta1
/// contracts uniformly in nu.
BrinkmanResult solve_brinkman(const ScalarField& phi, const ScalarField& mu,
                              const MaterialParams& laws, const BrinkmanOptions& opts);

/// Empirical Holder exponent of a field: seeded sampled-pair quotients per
/// trial alpha, gated by the small-scale increment slope and by quotient
/// stability under one coarsening. Returns (alpha_hat, quotient). Heuristic
/// diagnostic only.
std::pair<double, double> holder_exponent(const ScalarField& pi, std::span<const double> alphas,
                                          std::uint64_t seed = 0x9e3779b9u);

} // namespace nchhs
