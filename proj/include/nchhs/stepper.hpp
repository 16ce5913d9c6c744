#pragma once

#include "nchhs/darcy.hpp"
#include "nchhs/diagnostics.hpp"
#include "nchhs/kernel.hpp"
#include "nchhs/laws.hpp"
#include "nchhs/sim_state.hpp"

#include <functional>

namespace nchhs {

enum class SchemeForm { mu_form, b_form };
enum class ConvectionScheme { upwind, centered };

struct StepParams {
    double tau = 1e-4;
    SchemeForm form = SchemeForm::b_form;
    ConvectionScheme convection = ConvectionScheme::upwind;
    double cfl_safety = 0.5;
    double tau_max = 0.0; // cap for cfl_timestep; 0 means tau
};

struct StepReport {
    int cg_iterations = 0;
    int picard_sweeps = 0;
    double diss_mu = 0.0; // ||sqrt(m) grad mu||^2 of the fluxes actually moved
};

/// mu = -J*phi + F_eps'(phi); at eps = 0 the argument is clamped into the safe
/// margin and the clamps (overshoots past |s|=1) are counted.
ScalarField chemical_potential(const ScalarField& phi, const KernelOperator& kernel,
                               const MaterialParams& laws, ClampCounter* counter = nullptr);

/// One step of the regularized flux-split scheme: explicit conservative
/// convection, implicit frozen-coefficient diffusion (m_eps F_eps'' at t_n),
/// explicit upwinded nonlocal flux. Mass is conserved by construction.
void step_mu_form(SimState& state, const StepParams& params, const KernelOperator& kernel,
                  const MaterialParams& laws, StepReport* report = nullptr);

/// One step of the degenerate form: explicit convection, implicit Laplacian of
/// the primitive B via secant-coefficient Picard sweeps, explicit nonlocal flux
/// with degeneracy-respecting donor/room face mobility. Valid at eps = 0.
void step_b_form(SimState& state, const StepParams& params, const KernelOperator& kernel,
                 const MaterialParams& laws, StepReport* report = nullptr);

/// tau = cfl_safety * min(h) / max(face speed, tiny), capped at tau_max.
double cfl_timestep(const VectorField& u, const Grid& grid, const StepParams& params);

struct CoupledConfig {
    StepParams step;
    double t_end = 0.1;
    double darcy_rel_tol = 1e-10;
    int darcy_max_iter = 0;
    double brinkman_nu = 0.0; // 0 selects the Darcy solve
    double brinkman_tol = 1e-8;
    int snapshot_every = 0; // steps between snapshots; 0 disables
    bool keep_snaps = false;
    bool record_phi_functional = true;
    std::function<void(const SimState&)> snapshot_hook;
    long long max_steps = 1000000;
};

/// Full system driver: per step (1) chemical potential, (2) Darcy or Brinkman
/// velocity, (3) CH step in the configured form, (4) diagnostics. Solver
/// failures return a partial trajectory with the reason recorded.
Trajectory run_coupled(const ScalarField& phi0, const KernelOperator& kernel,
                       const MaterialParams& laws, const CoupledConfig& cfg);

} // namespace nchhs
