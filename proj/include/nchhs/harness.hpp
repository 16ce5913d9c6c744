#pragma once

#include "nchhs/config.hpp"
#include "nchhs/sim_state.hpp"

#include <string>
#include <vector>

namespace nchhs {

struct CliOptions {
    std::string out_override;
    int threads = 1;
    bool quiet = false;
};

enum class SweepAxis { eps, nu, tau, grid };

SweepAxis parse_axis(const std::string& name);

/// Build the configured initial datum on the grid (seeded splitmix64 noise for
/// the spinodal type).
ScalarField build_initial_condition(const SimConfig& cfg, const Grid& grid);

/// Run the coupled system, write trajectory artifacts (diagnostics CSV, field
/// snapshots, summary); partial outputs keep a ".partial" suffix. Returns the
/// process exit code.
int cmd_run(const SimConfig& cfg, const CliOptions& opts);

/// Run the scenario per axis value and emit a convergence table (CSV and a
/// human summary with observed orders).
int cmd_sweep(const SimConfig& cfg, SweepAxis axis, const std::vector<double>& values,
              const CliOptions& opts);

/// Base run plus delta-perturbed runs; writes gap tables and gap/delta ratios.
/// The headline norm is V' when the viscosity contrast vanishes, L2 otherwise.
int cmd_stability(const SimConfig& cfg, const std::vector<double>& deltas,
                  const CliOptions& opts);

/// Offline recomputation of diagnostics for saved field snapshots, including
/// the Holder exponent estimate.
int cmd_diagnose(const std::vector<std::string>& files, const CliOptions& opts);

} // namespace nchhs
