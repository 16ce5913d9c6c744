#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace nchhs {

enum class LawMode { reference, custom_hook };

/// User-supplied constitutive functions (all scalar, on [-1,1] resp. (-1,1)).
/// Built via make_custom_params(), which precomputes the primitive/entropy
/// lookup tables for the epsilon in force.
struct CustomLaws {
    std::function<double(double)> eta;
    std::function<double(double)> m;
    std::function<double(double)> F;
    std::function<double(double)> dF;
    std::function<double(double)> d2F;

    // lookup tables, filled by make_custom_params
    std::vector<double> nodes;       // sample abscissae
    std::vector<double> b_vals;      // B at nodes
    std::vector<double> b_slope;     // lambda at nodes (exact Hermite slopes)
    std::vector<double> mprim_vals;  // M' at nodes
    std::vector<double> mprim_slope; // 1/m_eps at nodes
    std::vector<double> ment_vals;   // M at nodes
};

/// Temperatures, viscosities and the regularization parameter. eps = 0 selects
/// the original degenerate/singular laws; eps > 0 the clamped approximations.
struct MaterialParams {
    double theta = 1.0;  // absolute temperature
    double theta0 = 2.0; // critical temperature (documentation only in the nonlocal model)
    double nu1 = 1.0;
    double nu2 = 1.0;
    double eps = 0.0;
    LawMode law_mode = LawMode::reference;
    std::shared_ptr<const CustomLaws> hooks;

    void validate() const; // throws std::invalid_argument on breach
};

/// Assumption constants exposed for tests and solver sanity checks.
/// k1..k4 are growth constants frozen by tools/fit_law_constants for the
/// reference laws at theta = 1 (k3, k4 for the eps >= 0.05 test set).
struct LawConstants {
    double eta1 = 0.0;
    double eta_inf = 0.0;
    double c0 = 0.0;
    double alpha0 = 0.0;
    double k1 = 0.0, k2 = 0.0, k3 = 0.0, k4 = 0.0;
    std::optional<double> lambda_const;
};

LawConstants law_constants(const MaterialParams& p);

// Constitutive functions (eta_eps / m_eps / F_eps family when p.eps > 0).
double viscosity(double s, const MaterialParams& p);
double mobility(double s, const MaterialParams& p);
double potential(double s, const MaterialParams& p);
double potential_d1(double s, const MaterialParams& p);
double potential_d2(double s, const MaterialParams& p);
double lambda_fn(double s, const MaterialParams& p);   // m * F''
double b_primitive(double s, const MaterialParams& p); // B(s) = integral of lambda from 0
double entropy_fn(double s, const MaterialParams& p);  // M with m M'' = 1, M(0)=M'(0)=0

/// Safe evaluation margin for the singular laws at eps = 0: callers clamp
/// arguments into [-1+margin, 1-margin] and count the clamps.
inline constexpr double kSafeMargin = 1e-9;

struct ClampCounter {
    long long count = 0;
    double worst_overshoot = 0.0; // max(|s| - 1, 0) seen
};

/// Clamp into the safe evaluation domain, recording the event.
double clamp_phase(double s, ClampCounter* counter = nullptr);

/// Build custom-hook params: copies the scalar hooks and precomputes the
/// B and M lookup tables (4096 intervals, Gauss quadrature, Hermite slopes).
MaterialParams make_custom_params(const MaterialParams& base, CustomLaws hooks);

} // namespace nchhs
