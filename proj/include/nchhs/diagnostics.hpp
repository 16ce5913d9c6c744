#pragma once

#include "nchhs/kernel.hpp"
#include "nchhs/laws.hpp"
#include "nchhs/sim_state.hpp"

#include <string>
#include <vector>

namespace nchhs {

/// Nonlocal free energy -1/2 (phi, J*phi) + int F_eps(phi).
double free_energy(const ScalarField& phi, const KernelOperator& kernel,
                   const MaterialParams& laws, ClampCounter* counter = nullptr);

/// Same, with J*phi already in hand (hot loops).
double free_energy_with(const ScalarField& phi, const ScalarField& jphi,
                        const MaterialParams& laws, ClampCounter* counter = nullptr);

/// int M_eps(phi).
double entropy_integral(const ScalarField& phi, const MaterialParams& laws,
                        ClampCounter* counter = nullptr);

/// max(linf(phi) - 1, 0).
double bound_violation(const ScalarField& phi);

/// Phi = ||grad B(phi)||^2 - 2 (m(phi)(grad J * phi), lambda(phi) grad phi).
double phi_functional(const ScalarField& phi, const KernelOperator& kernel,
                      const MaterialParams& laws);

/// Same, with grad J * phi already in hand.
double phi_functional_with(const ScalarField& phi, const VectorField& gradj,
                           const MaterialParams& laws);

/// Negative-norm surrogate: ||f||_{V'} = sqrt((f0, N f0)) with f0 the
/// mean-free part and N one zero-mean Neumann Poisson solve (tol 1e-10).
double vprime_norm(const ScalarField& f);

/// (int |u|^4)^(1/4) from face samples averaged to centers.
double u_l4_norm(const VectorField& u);

/// r_n = E(phi_n) - E(phi_0) + sum_{k<=n} dt_k D_k from the recorded series.
std::vector<double> energy_budget(const Trajectory& traj);

/// Signed per-step closure errors d_k (reported, never absorbed).
std::vector<double> defect_series(const Trajectory& traj);

/// Signed per-step defect of the phase energy identity
///   1/2 d/dt ||phi||^2 + 2 ||sqrt(eta) u||^2 + int m F'' |grad phi|^2
///     = int m (grad J * phi) . grad phi + int (-J * phi) u . grad phi,
/// assembled from per-step snapshots (requires keep_snaps with stride 1).
std::vector<double> energeq_defects(const Trajectory& traj, const KernelOperator& kernel,
                                    const MaterialParams& laws);

struct GapSeries {
    std::vector<double> t;
    std::vector<double> phi_l2;
    std::vector<double> u_l2;
    std::vector<double> pi_h1;
    std::vector<double> phi_vprime;
};

/// Per-time distances between two trajectories on the same grid/config
/// differing only in the initial datum. Uses the stored snapshots.
GapSeries stability_gap(const Trajectory& a, const Trajectory& b);

std::string diagnostics_csv_header();
std::string diagnostics_csv_row(const DiagnosticsRecord& r);

} // namespace nchhs
