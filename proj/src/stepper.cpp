#include "nchhs/stepper.hpp"

#include "nchhs/cg.hpp"
#include "nchhs/elliptic.hpp"
#include "nchhs/errors.hpp"
#include "nchhs/operators.hpp"

#include <algorithm>
#include <cmath>

namespace nchhs {

namespace {

inline double law_arg(double s) { return std::min(std::max(s, -1.0), 1.0); }

// explicit conservative convection: flux u * phi_face on faces
Array2d convect(const ScalarField& phi, const VectorField& u, double tau,
                ConvectionScheme scheme) {
    const Grid& g = phi.grid;
    if (u.layout != VectorLayout::staggered)
        throw std::invalid_argument("convect: velocity must be staggered");
    Array2d fx = Array2d::Zero(g.nx + 1, g.ny), fy = Array2d::Zero(g.nx, g.ny + 1);
    const Array2d& p = phi.v;
    auto pv = [&](int i, int j) {
        if (g.periodic()) {
            i = (i % g.nx + g.nx) % g.nx;
            j = (j % g.ny + g.ny) % g.ny;
        } else {
            i = std::min(std::max(i, 0), g.nx - 1);
            j = std::min(std::max(j, 0), g.ny - 1);
        }
        return p(i, j);
    };
    const int ix0 = g.periodic() ? 0 : 1;
    for (int j = 0; j < g.ny; ++j)
        for (int i = ix0; i < g.nx; ++i) {
            const double uf = u.x(i, j);
            const double pf = scheme == ConvectionScheme::upwind
                                  ? (uf > 0.0 ? pv(i - 1, j) : pv(i, j))
                                  : 0.5 * (pv(i - 1, j) + pv(i, j));
            fx(i, j) = uf * pf;
        }
    const int jy0 = g.periodic() ? 0 : 1;
    for (int j = jy0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double uf = u.y(i, j);
            const double pf = scheme == ConvectionScheme::upwind
                                  ? (uf > 0.0 ? pv(i, j - 1) : pv(i, j))
                                  : 0.5 * (pv(i, j - 1) + pv(i, j));
            fy(i, j) = uf * pf;
        }
    if (g.periodic()) {
        for (int j = 0; j < g.ny; ++j) fx(g.nx, j) = fx(0, j);
        for (int i = 0; i < g.nx; ++i) fy(i, g.ny) = fy(i, 0);
    }
    Array2d out = p;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            out(i, j) -= tau * ((fx(i + 1, j) - fx(i, j)) / g.hx + (fy(i, j + 1) - fy(i, j)) / g.hy);
    return out;
}

// face-normal averages of the cell-centered nonlocal drift; neumann walls get
// zero normal drift so the no-flux boundary condition holds exactly
void face_drift(const VectorField& G, Array2d& gx, Array2d& gy) {
    const VectorField s = cc_to_staggered(G);
    gx = s.x;
    gy = s.y;
}

// nonlocal flux m~ * G on faces; factored donor/room mobility at eps = 0
// reference laws, donor-upwinded m_eps otherwise
void nonlocal_fluxes(const Array2d& p, const Grid& g, const Array2d& gx, const Array2d& gy,
                     const MaterialParams& laws, Array2d& fx, Array2d& fy) {
    const bool factored = laws.eps == 0.0 && laws.law_mode == LawMode::reference;
    fx = Array2d::Zero(g.nx + 1, g.ny);
    fy = Array2d::Zero(g.nx, g.ny + 1);
    auto wrap_i = [&](int i) { return (i % g.nx + g.nx) % g.nx; };
    auto wrap_j = [&](int j) { return (j % g.ny + g.ny) % g.ny; };

    auto mob_face = [&](double drift, double s_left, double s_right) {
        if (factored) {
            const double don = drift > 0.0 ? s_left : s_right;
            const double rec = drift > 0.0 ? s_right : s_left;
            const double avail = std::max(1.0 + don, 0.0);
            const double room = std::max(1.0 - rec, 0.0);
            return avail * room;
        }
        const double don = drift > 0.0 ? s_left : s_right;
        return mobility(law_arg(don), laws);
    };

    const int ix0 = g.periodic() ? 0 : 1;
    for (int j = 0; j < g.ny; ++j)
        for (int i = ix0; i < g.nx; ++i) {
            const double d = gx(i, j);
            const double sl = p(g.periodic() ? wrap_i(i - 1) : i - 1, j), sr = p(i, j);
            fx(i, j) = mob_face(d, sl, sr) * d;
        }
    const int jy0 = g.periodic() ? 0 : 1;
    for (int j = jy0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double d = gy(i, j);
            const double sl = p(i, g.periodic() ? wrap_j(j - 1) : j - 1), sr = p(i, j);
            fy(i, j) = mob_face(d, sl, sr) * d;
        }
    if (g.periodic()) {
        for (int j = 0; j < g.ny; ++j) fx(g.nx, j) = fx(0, j);
        for (int i = 0; i < g.nx; ++i) fy(i, g.ny) = fy(i, 0);
    }
}

// solve (I - tau div(c grad)) phi = rhs; the mean is pinned exactly by solving
// for the mean-free correction, so mass survives the linear solve to roundoff
std::pair<Array2d, int> implicit_diffusion(const Grid& g, const FaceCoef& c, const Array2d& rhs,
                                           double tau) {
    auto applyA = [&](const Array2d& in, Array2d& out) {
        apply_neg_div_coef_grad(g, c, in, out);
        out = in + tau * out;
    };
    Array2d diag = neg_div_coef_grad_diag(g, c);
    Array2d inv_diag = (1.0 + tau * diag).inverse();

    Array2d b2(g.nx, g.ny);
    applyA(rhs, b2);
    b2 = rhs - b2; // = tau * div(c grad rhs), mean-free by telescoping

    Array2d delta = Array2d::Zero(g.nx, g.ny);
    const int maxit = 40 * (g.nx + g.ny);
    const CgResult cg = pcg(applyA, b2, delta, &inv_diag, 1e-11, maxit, /*mean_zero=*/true);
    if (!cg.converged)
        throw SolverError("implicit diffusion solve did not converge (residual " +
                          std::to_string(cg.final_residual) + ")");
    return {Array2d(rhs + delta), cg.iterations};
}

// harmonic mean of cell coefficient values on faces
FaceCoef harm_faces(const Grid& g, const Array2d& cells) {
    FaceCoef f = FaceCoef::zeros(g);
    auto harm = [](double a, double b) { return 2.0 * a * b / (a + b); };
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) f.cx(i, j) = harm(cells(i - 1, j), cells(i, j));
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) f.cy(i, j) = harm(cells(i, j - 1), cells(i, j));
    if (g.periodic()) {
        for (int j = 0; j < g.ny; ++j)
            f.cx(0, j) = f.cx(g.nx, j) = harm(cells(g.nx - 1, j), cells(0, j));
        for (int i = 0; i < g.nx; ++i)
            f.cy(i, 0) = f.cy(i, g.ny) = harm(cells(i, g.ny - 1), cells(i, 0));
    }
    return f;
}

// secant coefficient of the primitive across faces: exact flux differencing
// of B at the converged iterate
FaceCoef secant_faces(const Grid& g, const Array2d& p, const MaterialParams& laws) {
    FaceCoef f = FaceCoef::zeros(g);
    auto secant = [&](double a, double b) {
        const double sa = law_arg(a), sb = law_arg(b);
        if (std::abs(sb - sa) < 1e-12) return lambda_fn(law_arg(0.5 * (sa + sb)), laws);
        return (b_primitive(sb, laws) - b_primitive(sa, laws)) / (sb - sa);
    };
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) f.cx(i, j) = secant(p(i - 1, j), p(i, j));
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) f.cy(i, j) = secant(p(i, j - 1), p(i, j));
    if (g.periodic()) {
        for (int j = 0; j < g.ny; ++j) f.cx(0, j) = f.cx(g.nx, j) = secant(p(g.nx - 1, j), p(0, j));
        for (int i = 0; i < g.nx; ++i) f.cy(i, 0) = f.cy(i, g.ny) = secant(p(i, g.ny - 1), p(i, 0));
    }
    return f;
}

// || sqrt(m) grad mu ||^2 of the fluxes the step actually moved
double flux_dissipation(const Grid& g, const FaceCoef& c, const Array2d& pnew,
                        const Array2d& pold, const MaterialParams& laws, const Array2d& nfx,
                        const Array2d& nfy) {
    auto mface = [&](double a, double b) {
        const double ma = mobility(law_arg(a), laws), mb = mobility(law_arg(b), laws);
        return (ma + mb > 0.0) ? 2.0 * ma * mb / (ma + mb) : 0.0;
    };
    double acc = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) {
            const double fl = c.cx(i, j) * (pnew(i, j) - pnew(i - 1, j)) / g.hx - nfx(i, j);
            const double m = mface(pold(i - 1, j), pold(i, j));
            if (m > 1e-13) acc += fl * fl / m;
        }
    for (int j = 1; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double fl = c.cy(i, j) * (pnew(i, j) - pnew(i, j - 1)) / g.hy - nfy(i, j);
            const double m = mface(pold(i, j - 1), pold(i, j));
            if (m > 1e-13) acc += fl * fl / m;
        }
    if (g.periodic()) {
        for (int j = 0; j < g.ny; ++j) {
            const double fl = c.cx(0, j) * (pnew(0, j) - pnew(g.nx - 1, j)) / g.hx - nfx(0, j);
            const double m = mface(pold(g.nx - 1, j), pold(0, j));
            if (m > 1e-13) acc += fl * fl / m;
        }
        for (int i = 0; i < g.nx; ++i) {
            const double fl = c.cy(i, 0) * (pnew(i, 0) - pnew(i, g.ny - 1)) / g.hy - nfy(i, 0);
            const double m = mface(pold(i, g.ny - 1), pold(i, 0));
            if (m > 1e-13) acc += fl * fl / m;
        }
    }
    return acc * g.cell_area();
}

void step_any(SimState& st, const StepParams& prm, const KernelOperator& kernel,
              const MaterialParams& laws, SchemeForm form, StepReport* report,
              const VectorField* drift_cc) {
    const Grid& g = st.phi.grid;
    const double tau = prm.tau;
    if (!(tau > 0.0)) throw std::invalid_argument("step: tau must be positive");

    // explicit convection
    Array2d pstar = st.u.x.size() > 0 ? convect(st.phi, st.u, tau, prm.convection) : st.phi.v;

    // explicit nonlocal flux with post-convection mobility arguments
    VectorField Gown;
    const VectorField* G = drift_cc;
    if (!G) {
        Gown = kernel.convolve_grad(st.phi);
        G = &Gown;
    }
    Array2d gxf, gyf;
    face_drift(*G, gxf, gyf);
    Array2d nfx, nfy;
    nonlocal_fluxes(pstar, g, gxf, gyf, laws, nfx, nfy);
    Array2d pstar2 = pstar;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            pstar2(i, j) -= tau * ((nfx(i + 1, j) - nfx(i, j)) / g.hx +
                                   (nfy(i, j + 1) - nfy(i, j)) / g.hy);

    // implicit diffusion
    FaceCoef coef;
    int iters = 0, sweeps = 0;
    Array2d pnew;
    if (form == SchemeForm::mu_form) {
        Array2d lam(g.nx, g.ny);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) lam(i, j) = lambda_fn(law_arg(st.phi.v(i, j)), laws);
        coef = harm_faces(g, lam);
        auto [sol, it] = implicit_diffusion(g, coef, pstar2, tau);
        pnew = std::move(sol);
        iters = it;
        sweeps = 1;
    } else {
        const LawConstants lc = law_constants(laws);
        Array2d iterate = pstar2;
        const int max_sweeps = (lc.lambda_const && laws.eps == 0.0) ? 1 : 5;
        double update = 0.0;
        for (sweeps = 1; sweeps <= max_sweeps; ++sweeps) {
            coef = secant_faces(g, iterate, laws);
            auto [sol, it] = implicit_diffusion(g, coef, pstar2, tau);
            iters += it;
            update = (sol - iterate).abs().maxCoeff();
            iterate = std::move(sol);
            if (update <= 1e-10) break;
        }
        sweeps = std::min(sweeps, max_sweeps);
        if (max_sweeps > 1 && update > 1e-10)
            throw SolverError("step_b_form: Picard sweeps did not converge (update " +
                              std::to_string(update) + ")");
        pnew = std::move(iterate);
    }

    if (report) {
        report->cg_iterations = iters;
        report->picard_sweeps = sweeps;
        report->diss_mu = flux_dissipation(g, coef, pnew, st.phi.v, laws, nfx, nfy);
    }

    // post-step bound bookkeeping (flagged, never silent)
    if (form == SchemeForm::b_form) {
        const double lim = 1.0 + 1e-6;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                if (pnew(i, j) > lim) {
                    pnew(i, j) = lim;
                    ++st.clamp_count;
                } else if (pnew(i, j) < -lim) {
                    pnew(i, j) = -lim;
                    ++st.clamp_count;
                }
            }
    }

    st.phi.v = std::move(pnew);
    st.t += tau;
    ++st.step_index;
}

} // namespace

ScalarField chemical_potential(const ScalarField& phi, const KernelOperator& kernel,
                               const MaterialParams& laws, ClampCounter* counter) {
    ScalarField mu = kernel.convolve(phi);
    const Grid& g = phi.grid;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double s = laws.eps > 0.0 ? phi.v(i, j) : clamp_phase(phi.v(i, j), counter);
            mu.v(i, j) = -mu.v(i, j) + potential_d1(s, laws);
        }
    return mu;
}

void step_mu_form(SimState& state, const StepParams& params, const KernelOperator& kernel,
                  const MaterialParams& laws, StepReport* report) {
    step_any(state, params, kernel, laws, SchemeForm::mu_form, report, nullptr);
}

void step_b_form(SimState& state, const StepParams& params, const KernelOperator& kernel,
                 const MaterialParams& laws, StepReport* report) {
    step_any(state, params, kernel, laws, SchemeForm::b_form, report, nullptr);
}

double cfl_timestep(const VectorField& u, const Grid& grid, const StepParams& params) {
    const double cap = params.tau_max > 0.0 ? params.tau_max : params.tau;
    const double speed = std::max(linf_norm(u), 1e-300);
    return std::min(cap, params.cfl_safety * std::min(grid.hx, grid.hy) / speed);
}

namespace {

double velocity_dissipation(const VectorField& u, const ScalarField& phi,
                            const MaterialParams& laws) {
    const Grid& g = phi.grid;
    ScalarField eta = ScalarField::zeros(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) eta.v(i, j) = viscosity(law_arg(phi.v(i, j)), laws);
    const Array2d ex = to_xfaces(eta), ey = to_yfaces(eta);
    double acc = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            const double w = (i == 0 || i == g.nx) ? 0.5 : 1.0;
            acc += w * ex(i, j) * u.x(i, j) * u.x(i, j);
        }
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double w = (j == 0 || j == g.ny) ? 0.5 : 1.0;
            acc += w * ey(i, j) * u.y(i, j) * u.y(i, j);
        }
    return acc * g.cell_area();
}

double grad_velocity_sq(const VectorField& u) {
    const VectorField cc = staggered_to_cc(u);
    ScalarField ux{cc.grid, cc.x}, uy{cc.grid, cc.y};
    const double a = h1_seminorm(ux), b = h1_seminorm(uy);
    return a * a + b * b;
}

} // namespace

Trajectory run_coupled(const ScalarField& phi0, const KernelOperator& kernel,
                       const MaterialParams& laws, const CoupledConfig& cfg) {
    const Grid& g = phi0.grid;
    if (linf_norm(phi0) > 1.0)
        throw std::invalid_argument("run_coupled: initial datum must satisfy |phi0| <= 1");
    if (!(cfg.t_end > 0.0)) throw std::invalid_argument("run_coupled: t_end must be positive");

    Trajectory traj;
    SimState& st = traj.final_state;
    st.phi = phi0;
    st.u = VectorField::zeros_staggered(g);
    st.pi = ScalarField::zeros(g);
    st.mu = ScalarField::zeros(g);

    ClampCounter clamps;
    const double e0 = free_energy(st.phi, kernel, laws, &clamps);
    const double s0 = entropy_integral(st.phi, laws, &clamps);
    if (!std::isfinite(e0) || !std::isfinite(s0))
        throw std::invalid_argument("run_coupled: initial energy/entropy not finite");

    auto make_record = [&](double dt, double diss_mu, double diss_u, double diss_gu,
                           double diss_acc, double e_now, double defect, int darcy_it, int ch_it,
                           const VectorField& gradj) {
        DiagnosticsRecord r;
        r.step = st.step_index;
        r.t = st.t;
        r.dt = dt;
        r.mass = integrate(st.phi);
        r.energy = e_now;
        r.entropy = entropy_integral(st.phi, laws, &clamps);
        r.diss_mu = diss_mu;
        r.diss_u = diss_u;
        r.diss_grad_u = diss_gu;
        r.linf_phi = linf_norm(st.phi);
        r.u_l4 = u_l4_norm(st.u);
        r.budget_residual = e_now - e0 + diss_acc;
        r.step_defect = defect;
        r.phi_functional =
            cfg.record_phi_functional ? phi_functional_with(st.phi, gradj, laws) : 0.0;
        r.bound_violation = bound_violation(st.phi);
        r.clamp_count = st.clamp_count + clamps.count;
        r.darcy_iterations = darcy_it;
        r.ch_iterations = ch_it;
        return r;
    };

    auto snap = [&]() {
        if (cfg.keep_snaps) traj.snaps.push_back({st.t, st.step_index, st.phi, st.pi, st.u});
        if (cfg.snapshot_hook) cfg.snapshot_hook(st);
    };

    // one shared transform per step: J*phi and grad J*phi at the current state
    KernelOperator::ConvPair conv = kernel.convolve_both(st.phi);
    traj.records.push_back(make_record(0, 0, 0, 0, 0, e0, 0, 0, 0, conv.grad));
    if (cfg.snapshot_every > 0) snap();

    double e_prev = e0;
    double diss_acc = 0.0;
    try {
        while (st.t < cfg.t_end - 1e-14 && st.step_index < cfg.max_steps) {
            // chemical potential from the shared convolution
            st.mu = st.phi;
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i) {
                    const double s =
                        laws.eps > 0.0 ? st.phi.v(i, j) : clamp_phase(st.phi.v(i, j), &clamps);
                    st.mu.v(i, j) = -conv.j.v(i, j) + potential_d1(s, laws);
                }

            int darcy_it = 0;
            if (cfg.brinkman_nu > 0.0) {
                BrinkmanOptions bo;
                bo.nu = cfg.brinkman_nu;
                bo.tol = cfg.brinkman_tol;
                BrinkmanResult br = solve_brinkman(st.phi, st.mu, laws, bo);
                st.u = std::move(br.u);
                st.pi = std::move(br.pi);
                darcy_it = br.report.iterations;
            } else {
                VectorField q = conv.grad; // (grad J * phi) phi
                q.x *= st.phi.v;
                q.y *= st.phi.v;
                PressureProblem pb;
                pb.phi = &st.phi;
                pb.kernel = &kernel;
                pb.laws = &laws;
                pb.rel_tol = cfg.darcy_rel_tol;
                pb.max_iter = cfg.darcy_max_iter;
                pb.forcing_override = &q;
                pb.initial_guess = &st.pi; // consecutive solves are close
                auto [pi, rep] = solve_pressure(pb);
                st.pi = std::move(pi);
                st.u = recover_velocity(st.pi, st.phi, kernel, laws, &q);
                darcy_it = rep.iterations;
            }

            StepParams sp = cfg.step;
            double tau = cfg.step.tau;
            {
                StepParams cflp = cfg.step;
                cflp.tau_max = tau;
                tau = std::min(tau, cfl_timestep(st.u, g, cflp));
                const double gmax = std::max(linf_norm(conv.grad), 1e-300);
                tau = std::min(tau, cfg.step.cfl_safety * std::min(g.hx, g.hy) / (8.0 * gmax));
                tau = std::min(tau, cfg.t_end - st.t);
            }
            sp.tau = tau;

            StepReport rep;
            step_any(st, sp, kernel, laws, cfg.step.form, &rep, &conv.grad);

            conv = kernel.convolve_both(st.phi); // diagnostics now, reused next step

            const double diss_u = velocity_dissipation(st.u, st.phi, laws);
            const double diss_gu = cfg.brinkman_nu * grad_velocity_sq(st.u);
            const double dtot = rep.diss_mu + diss_u + diss_gu;
            diss_acc += tau * dtot;
            const double e_now = free_energy_with(st.phi, conv.j, laws, &clamps);
            const double defect = e_now - e_prev + tau * dtot;
            e_prev = e_now;

            traj.records.push_back(make_record(tau, rep.diss_mu, diss_u, diss_gu, diss_acc, e_now,
                                               defect, darcy_it, rep.cg_iterations, conv.grad));
            if (cfg.snapshot_every > 0 && st.step_index % cfg.snapshot_every == 0) snap();
        }
        traj.completed = true;
    } catch (const SolverError& e) {
        traj.completed = false;
        traj.abort_reason = e.what();
    }
    return traj;
}

} // namespace nchhs
