#pragma once

#include "nchhs/grid.hpp"
#include "nchhs/kernel.hpp"
#include "nchhs/laws.hpp"
#include "nchhs/stepper.hpp"

#include <cstdint>
#include <string>

namespace nchhs {

enum class IcType { uniform, spinodal, bubble, file };

struct InitialCondition {
    IcType type = IcType::spinodal;
    double value = 0.0;      // uniform level / spinodal mean
    double amplitude = 0.05; // spinodal noise amplitude
    double center_x = 0.5, center_y = 0.5;
    double radius = 0.25;
    double smoothing = 0.05;
    double phi_in = 0.9, phi_out = -0.9;
    std::string path; // file type
};

struct StepperConfig {
    double tau = 1e-4;
    double t_end = 0.05;
    SchemeForm form = SchemeForm::b_form;
    ConvectionScheme convection = ConvectionScheme::upwind;
    double cfl_safety = 0.5;
    int snapshot_every = 0;
};

struct SolverConfig {
    double rel_tol = 1e-10;
    int max_iter = 0;
    double brinkman_nu = 0.0;
    double brinkman_tol = 1e-8;
};

struct SimConfig {
    DomainSpec domain;
    MaterialParams material;
    KernelSpec kernel;
    StepperConfig stepper;
    SolverConfig solver;
    InitialCondition initial;
    std::string output_dir = "out";
    std::uint64_t seed = 1;
};

/// Parse an INI-style config (sections of key = value lines, '#' comments).
/// Throws ConfigError carrying the complete list of violations, each located
/// by section/key/line.
SimConfig parse_config(const std::string& text);

/// Convenience: read the file and parse.
SimConfig parse_config_file(const std::string& path);

} // namespace nchhs
