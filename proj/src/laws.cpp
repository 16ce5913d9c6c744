#include "nchhs/laws.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nchhs {

namespace {

// Growth constants of the approximating potential family, frozen from
// tools/fit_law_constants (brute-force fit over s in [-10,10], reference laws,
// theta = 1; k3/k4 cover the eps >= 0.05 set). The fit reported k2 = 0 and
// k4 = 0.0632; committed with headroom. Tests only; never used by solvers.
constexpr double kFitK1 = 0.25;
constexpr double kFitK2 = 0.05;
constexpr double kFitK3 = 4.00;
constexpr double kFitK4 = 0.07;

inline double clamp_eps_arg(double s, double eps) {
    const double lim = 1.0 - eps;
    return std::min(std::max(s, -lim), lim);
}

inline void check_domain(double s, const MaterialParams& p, bool open, const char* what) {
    if (p.eps > 0.0) return;
    const bool bad = open ? (std::abs(s) >= 1.0) : (std::abs(s) > 1.0);
    if (bad) throw std::domain_error(std::string(what) + ": |s| outside [-1,1] with eps = 0");
}

// ---- reference laws --------------------------------------------------------

inline double ref_eta(double s, const MaterialParams& p) {
    return p.nu1 * (1.0 + s) * 0.5 + p.nu2 * (1.0 - s) * 0.5;
}

inline double ref_m(double s) { return 1.0 - s * s; }

inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

inline double ref_F(double s, double theta) {
    return 0.5 * theta * (xlogx(1.0 + s) + xlogx(1.0 - s));
}

inline double ref_dF(double s, double theta) { return theta * std::atanh(s); }

inline double ref_d2F(double s, double theta) { return theta / (1.0 - s * s); }

// M(s) solving (1-s^2) M'' = 1, M(0) = M'(0) = 0.
inline double ref_M(double s) {
    return s * std::atanh(s) + 0.5 * std::log1p(-s * s);
}

// ---- hook dispatch ---------------------------------------------------------

inline bool use_hooks(const MaterialParams& p) {
    return p.law_mode == LawMode::custom_hook && p.hooks != nullptr;
}

inline double core_eta(double s, const MaterialParams& p) {
    return use_hooks(p) ? p.hooks->eta(s) : ref_eta(s, p);
}
inline double core_m(double s, const MaterialParams& p) {
    return use_hooks(p) ? p.hooks->m(s) : ref_m(s);
}
inline double core_F(double s, const MaterialParams& p) {
    return use_hooks(p) ? p.hooks->F(s) : ref_F(s, p.theta);
}
inline double core_dF(double s, const MaterialParams& p) {
    return use_hooks(p) ? p.hooks->dF(s) : ref_dF(s, p.theta);
}
inline double core_d2F(double s, const MaterialParams& p) {
    return use_hooks(p) ? p.hooks->d2F(s) : ref_d2F(s, p.theta);
}

// ---- cubic-extended Taylor continuation of F beyond +/-(1-eps) -------------

struct EdgeExpansion {
    double a;  // expansion point
    double f, df, d2f;
};

inline EdgeExpansion edge(double sgn, const MaterialParams& p) {
    const double a = sgn * (1.0 - p.eps);
    return {a, core_F(a, p), core_dF(a, p), core_d2F(a, p)};
}

inline double Feps(double s, const MaterialParams& p) {
    const double lim = 1.0 - p.eps;
    if (s > lim) {
        const EdgeExpansion e = edge(+1.0, p);
        const double d = s - e.a;
        return e.f + e.df * d + 0.5 * e.d2f * d * d + d * d * d;
    }
    if (s < -lim) {
        const EdgeExpansion e = edge(-1.0, p);
        const double d = s - e.a; // d <= 0
        return e.f + e.df * d + 0.5 * e.d2f * d * d - d * d * d;
    }
    return core_F(s, p);
}

inline double dFeps(double s, const MaterialParams& p) {
    const double lim = 1.0 - p.eps;
    if (s > lim) {
        const EdgeExpansion e = edge(+1.0, p);
        const double d = s - e.a;
        return e.df + e.d2f * d + 3.0 * d * d;
    }
    if (s < -lim) {
        const EdgeExpansion e = edge(-1.0, p);
        const double d = s - e.a;
        return e.df + e.d2f * d - 3.0 * d * d;
    }
    return core_dF(s, p);
}

inline double d2Feps(double s, const MaterialParams& p) {
    const double lim = 1.0 - p.eps;
    if (s > lim) return edge(+1.0, p).d2f + 6.0 * (s - lim);
    if (s < -lim) return edge(-1.0, p).d2f - 6.0 * (s + lim);
    return core_d2F(s, p);
}

// ---- lookup tables (custom hooks) ------------------------------------------

// Cubic Hermite on a uniform node table with exact slopes.
double hermite_eval(const std::vector<double>& nodes, const std::vector<double>& vals,
                    const std::vector<double>& slopes, double s) {
    const double s0 = nodes.front(), s1 = nodes.back();
    const int n = static_cast<int>(nodes.size()) - 1;
    if (s <= s0) return vals.front() + slopes.front() * (s - s0);
    if (s >= s1) return vals.back() + slopes.back() * (s - s1);
    const double h = (s1 - s0) / n;
    int k = std::min(static_cast<int>((s - s0) / h), n - 1);
    const double t = (s - nodes[k]) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    return h00 * vals[k] + h * h10 * slopes[k] + h01 * vals[k + 1] + h * h11 * slopes[k + 1];
}

// 5-point Gauss-Legendre on [a,b].
template <class F>
double gauss5(F&& f, double a, double b) {
    static const double xs[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                 0.5384693101056831, 0.9061798459386640};
    static const double ws[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                 0.4786286704993665, 0.2369268850561891};
    const double c = 0.5 * (a + b), hd = 0.5 * (b - a);
    double acc = 0.0;
    for (int i = 0; i < 5; ++i) acc += ws[i] * f(c + hd * xs[i]);
    return acc * hd;
}

constexpr int kTableIntervals = 4096;

} // namespace

void MaterialParams::validate() const {
    if (!(theta > 0.0)) throw std::invalid_argument("laws: theta must be positive");
    if (!(theta0 > theta)) throw std::invalid_argument("laws: theta0 > theta required");
    if (!(nu1 > 0.0) || !(nu2 > 0.0)) throw std::invalid_argument("laws: nu1, nu2 must be positive");
    if (!(eps >= 0.0) || !(eps < 1.0)) throw std::invalid_argument("laws: eps in [0,1) required");
    if (law_mode == LawMode::custom_hook && !hooks)
        throw std::invalid_argument("laws: custom_hook mode without hooks");
}

double clamp_phase(double s, ClampCounter* counter) {
    const double lim = 1.0 - kSafeMargin;
    if (s > lim) {
        if (counter && s > 1.0) { // the margin itself is not an overshoot
            ++counter->count;
            counter->worst_overshoot = std::max(counter->worst_overshoot, s - 1.0);
        }
        return lim;
    }
    if (s < -lim) {
        if (counter && s < -1.0) {
            ++counter->count;
            counter->worst_overshoot = std::max(counter->worst_overshoot, -s - 1.0);
        }
        return -lim;
    }
    return s;
}

double viscosity(double s, const MaterialParams& p) {
    check_domain(s, p, /*open=*/false, "viscosity");
    if (p.eps > 0.0) s = clamp_eps_arg(s, p.eps);
    return core_eta(s, p);
}

double mobility(double s, const MaterialParams& p) {
    check_domain(s, p, /*open=*/false, "mobility");
    if (p.eps > 0.0) s = clamp_eps_arg(s, p.eps);
    return core_m(s, p);
}

double potential(double s, const MaterialParams& p) {
    if (p.eps > 0.0) return Feps(s, p);
    check_domain(s, p, /*open=*/false, "potential");
    return core_F(s, p);
}

double potential_d1(double s, const MaterialParams& p) {
    if (p.eps > 0.0) return dFeps(s, p);
    check_domain(s, p, /*open=*/true, "potential_d1");
    return core_dF(s, p);
}

double potential_d2(double s, const MaterialParams& p) {
    if (p.eps > 0.0) return d2Feps(s, p);
    check_domain(s, p, /*open=*/true, "potential_d2");
    return core_d2F(s, p);
}

double lambda_fn(double s, const MaterialParams& p) {
    if (p.eps == 0.0) {
        check_domain(s, p, /*open=*/false, "lambda_fn");
        if (!use_hooks(p)) return p.theta; // m F'' cancels exactly
        // continuous extension at the endpoints
        const double lim = 1.0 - kSafeMargin;
        const double sc = std::min(std::max(s, -lim), lim);
        return core_m(sc, p) * core_d2F(sc, p);
    }
    const double sm = clamp_eps_arg(s, p.eps);
    return core_m(sm, p) * d2Feps(s, p);
}

double b_primitive(double s, const MaterialParams& p) {
    if (use_hooks(p)) {
        const auto& h = *p.hooks;
        return hermite_eval(h.nodes, h.b_vals, h.b_slope, s);
    }
    // reference laws: lambda == theta on the core, linear tail beyond the clamp
    if (p.eps == 0.0) {
        check_domain(s, p, /*open=*/false, "b_primitive");
        return p.theta * s;
    }
    const double lim = 1.0 - p.eps;
    const double m1 = ref_m(lim);
    if (s > lim) {
        const double d = s - lim;
        return p.theta * s + 3.0 * m1 * d * d;
    }
    if (s < -lim) {
        const double d = s + lim;
        return p.theta * s - 3.0 * m1 * d * d;
    }
    return p.theta * s;
}

double entropy_fn(double s, const MaterialParams& p) {
    if (use_hooks(p)) {
        const auto& h = *p.hooks;
        if (p.eps == 0.0) check_domain(s, p, /*open=*/true, "entropy_fn");
        return hermite_eval(h.nodes, h.ment_vals, h.mprim_vals, s);
    }
    if (p.eps == 0.0) {
        check_domain(s, p, /*open=*/true, "entropy_fn");
        return ref_M(s);
    }
    const double lim = 1.0 - p.eps;
    const double a = std::abs(s); // M_eps is even
    if (a <= lim) return ref_M(s);
    const double m1 = ref_m(lim);
    const double d = a - lim;
    return ref_M(lim) + std::atanh(lim) * d + 0.5 * d * d / m1;
}

LawConstants law_constants(const MaterialParams& p) {
    LawConstants c;
    c.k1 = kFitK1;
    c.k2 = kFitK2;
    c.k3 = kFitK3;
    c.k4 = kFitK4;
    if (!use_hooks(p)) {
        c.eta1 = std::min(p.nu1, p.nu2);
        c.eta_inf = std::max(p.nu1, p.nu2);
        c.c0 = p.theta;
        c.alpha0 = p.theta;
        if (p.eps == 0.0) c.lambda_const = p.theta;
        return c;
    }
    // hooks: scan a dense sample of the physical range
    const int n = 4001;
    double eta_min = 1e300, eta_max = -1e300, d2f_min = 1e300, lam_min = 1e300;
    for (int i = 0; i < n; ++i) {
        const double s = -1.0 + 2.0 * i / (n - 1);
        const double se = p.eps > 0.0 ? clamp_eps_arg(s, p.eps)
                                      : std::min(std::max(s, -1.0 + kSafeMargin), 1.0 - kSafeMargin);
        eta_min = std::min(eta_min, core_eta(se, p));
        eta_max = std::max(eta_max, core_eta(se, p));
        d2f_min = std::min(d2f_min, core_d2F(se, p));
        lam_min = std::min(lam_min, core_m(se, p) * core_d2F(se, p));
    }
    c.eta1 = eta_min;
    c.eta_inf = eta_max;
    c.c0 = d2f_min;
    c.alpha0 = lam_min;
    return c;
}

MaterialParams make_custom_params(const MaterialParams& base, CustomLaws hooks) {
    MaterialParams p = base;
    p.law_mode = LawMode::custom_hook;

    auto h = std::make_shared<CustomLaws>(std::move(hooks));
    MaterialParams probe = p;
    probe.hooks = h; // lambda_fn / d2Feps need the hooks while tabulating

    const double eps = p.eps;
    const double span = eps > 0.0 ? 1.25 : 1.0;
    const double mspan = eps > 0.0 ? 1.25 : 1.0 - 1e-6; // avoid the 1/m singularity
    const int n = kTableIntervals;

    h->nodes.resize(n + 1);
    h->b_vals.resize(n + 1);
    h->b_slope.resize(n + 1);
    h->mprim_vals.resize(n + 1);
    h->mprim_slope.resize(n + 1);
    h->ment_vals.resize(n + 1);

    auto lam = [&](double s) { return lambda_fn(std::min(std::max(s, -span), span), probe); };
    auto inv_m = [&](double s) {
        const double se = eps > 0.0 ? clamp_eps_arg(s, eps)
                                    : std::min(std::max(s, -mspan), mspan);
        return 1.0 / std::max(core_m(se, probe), 1e-300);
    };

    for (int i = 0; i <= n; ++i) h->nodes[i] = -span + 2.0 * span * i / n;
    // shift the M' table abscissae slightly inside for the singular case
    if (eps == 0.0)
        for (int i = 0; i <= n; ++i) h->nodes[i] = -mspan + 2.0 * mspan * i / n;

    // cumulative integrals anchored so B(0) = M(0) = M'(0) = 0
    std::vector<double> bcum(n + 1, 0.0), mcum(n + 1, 0.0);
    for (int i = 0; i < n; ++i) {
        bcum[i + 1] = bcum[i] + gauss5(lam, h->nodes[i], h->nodes[i + 1]);
        mcum[i + 1] = mcum[i] + gauss5(inv_m, h->nodes[i], h->nodes[i + 1]);
    }
    // value at s = 0 by interpolation on the cumulative sums
    auto at_zero = [&](const std::vector<double>& cum) {
        const double hstep = (h->nodes.back() - h->nodes.front()) / n;
        const int k = std::min(static_cast<int>((0.0 - h->nodes.front()) / hstep), n - 1);
        const double t = (0.0 - h->nodes[k]) / hstep;
        return (1.0 - t) * cum[k] + t * cum[k + 1];
    };
    const double b0 = at_zero(bcum), m0 = at_zero(mcum);
    for (int i = 0; i <= n; ++i) {
        h->b_vals[i] = bcum[i] - b0;
        h->b_slope[i] = lam(h->nodes[i]);
        h->mprim_vals[i] = mcum[i] - m0;
        h->mprim_slope[i] = inv_m(h->nodes[i]);
    }
    // M = cumulative integral of the M' Hermite interpolant (exact per piece)
    std::vector<double> ment(n + 1, 0.0);
    const double hstep = (h->nodes.back() - h->nodes.front()) / n;
    for (int i = 0; i < n; ++i) {
        const double seg = 0.5 * hstep * (h->mprim_vals[i] + h->mprim_vals[i + 1]) +
                           hstep * hstep / 12.0 * (h->mprim_slope[i] - h->mprim_slope[i + 1]);
        ment[i + 1] = ment[i] + seg;
    }
    // anchor M(0) = 0 using the same interpolation
    double ment0;
    {
        const int k = std::min(static_cast<int>((0.0 - h->nodes.front()) / hstep), n - 1);
        const double t = (0.0 - h->nodes[k]) / hstep;
        ment0 = (1.0 - t) * ment[k] + t * ment[k + 1];
    }
    for (int i = 0; i <= n; ++i) h->ment_vals[i] = ment[i] - ment0;

    p.hooks = h;
    return p;
}

} // namespace nchhs
