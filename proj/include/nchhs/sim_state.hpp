#pragma once

#include "nchhs/grid.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace nchhs {

/// Evolving system state. Owned by one thread; steps mutate in place.
struct SimState {
    ScalarField phi;
    VectorField u;  // staggered
    ScalarField pi; // last computed
    ScalarField mu; // last computed
    double t = 0.0;
    long long step_index = 0;
    long long clamp_count = 0; // overshoot clamps observed so far
};

/// Per-step functionals the estimates are phrased in.
struct DiagnosticsRecord {
    long long step = 0;
    double t = 0.0;
    double dt = 0.0; // step that produced this row (0 for the initial row)
    double mass = 0.0;
    double energy = 0.0;
    double entropy = 0.0;
    double diss_mu = 0.0;     // ||sqrt(m_eps) grad mu||^2
    double diss_u = 0.0;      // ||sqrt(eta_eps) u||^2
    double diss_grad_u = 0.0; // nu ||grad u||^2
    double linf_phi = 0.0;
    double u_l4 = 0.0;
    double budget_residual = 0.0;
    double step_defect = 0.0; // signed per-step energy balance closure error
    double phi_functional = 0.0;
    double bound_violation = 0.0;
    long long clamp_count = 0;
    int darcy_iterations = 0;
    int ch_iterations = 0;
    double holder_alpha = std::nan(""); // optional
};

/// Field snapshot kept in memory for trajectory-level diagnostics.
struct StateSnap {
    double t = 0.0;
    long long step = 0;
    ScalarField phi;
    ScalarField pi;
    VectorField u;
};

struct Trajectory {
    std::vector<DiagnosticsRecord> records;
    std::vector<StateSnap> snaps;
    SimState final_state;
    bool completed = false;
    std::string abort_reason;
};

} // namespace nchhs
