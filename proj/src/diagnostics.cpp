#include "nchhs/diagnostics.hpp"

#include "nchhs/cg.hpp"
#include "nchhs/operators.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace nchhs {

double free_energy_with(const ScalarField& phi, const ScalarField& jphi,
                        const MaterialParams& laws, ClampCounter* counter) {
    double nonlocal = -0.5 * inner(phi, jphi);
    double local = 0.0;
    const Grid& g = phi.grid;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double s = laws.eps > 0.0 ? phi.v(i, j) : clamp_phase(phi.v(i, j), counter);
            local += potential(s, laws);
        }
    return nonlocal + local * g.cell_area();
}

double free_energy(const ScalarField& phi, const KernelOperator& kernel,
                   const MaterialParams& laws, ClampCounter* counter) {
    return free_energy_with(phi, kernel.convolve(phi), laws, counter);
}

double entropy_integral(const ScalarField& phi, const MaterialParams& laws,
                        ClampCounter* counter) {
    const Grid& g = phi.grid;
    double acc = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double s = laws.eps > 0.0 ? phi.v(i, j) : clamp_phase(phi.v(i, j), counter);
            acc += entropy_fn(s, laws);
        }
    return acc * g.cell_area();
}

double bound_violation(const ScalarField& phi) {
    return std::max(linf_norm(phi) - 1.0, 0.0);
}

double phi_functional_with(const ScalarField& phi, const VectorField& gj,
                           const MaterialParams& laws) {
    const Grid& g = phi.grid;
    ScalarField bfield = ScalarField::zeros(g);
    ClampCounter dummy;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            bfield.v(i, j) = b_primitive(clamp_phase(phi.v(i, j), &dummy), laws);
    // the gradient norm lives on faces, the quadrature the schemes dissipate in
    const VectorField gb = face_gradient(bfield);
    const double gb2 = l2_norm(gb) * l2_norm(gb);

    const VectorField gphi = gradient(phi);
    double cross = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double s = clamp_phase(phi.v(i, j), &dummy);
            const double mc = mobility(s, laws) * lambda_fn(s, laws);
            cross += mc * (gj.x(i, j) * gphi.x(i, j) + gj.y(i, j) * gphi.y(i, j));
        }
    return gb2 - 2.0 * cross * g.cell_area();
}

double phi_functional(const ScalarField& phi, const KernelOperator& kernel,
                      const MaterialParams& laws) {
    return phi_functional_with(phi, kernel.convolve_grad(phi), laws);
}

double vprime_norm(const ScalarField& f) {
    const Grid& g = f.grid;
    Array2d rhs = f.v - f.v.sum() / static_cast<double>(f.v.size());

    // unit-coefficient -div(grad .) with zero-flux (or periodic) boundary
    auto apply = [&](const Array2d& in, Array2d& out) {
        const double ihx2 = 1.0 / (g.hx * g.hx), ihy2 = 1.0 / (g.hy * g.hy);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const double pc = in(i, j);
                double acc = 0.0;
                if (i + 1 < g.nx)
                    acc += (in(i + 1, j) - pc) * ihx2;
                else if (g.periodic())
                    acc += (in(0, j) - pc) * ihx2;
                if (i > 0)
                    acc -= (pc - in(i - 1, j)) * ihx2;
                else if (g.periodic())
                    acc -= (pc - in(g.nx - 1, j)) * ihx2;
                if (j + 1 < g.ny)
                    acc += (in(i, j + 1) - pc) * ihy2;
                else if (g.periodic())
                    acc += (in(i, 0) - pc) * ihy2;
                if (j > 0)
                    acc -= (pc - in(i, j - 1)) * ihy2;
                else if (g.periodic())
                    acc -= (pc - in(i, g.ny - 1)) * ihy2;
                out(i, j) = -acc;
            }
    };
    Array2d z = Array2d::Zero(g.nx, g.ny);
    pcg(apply, rhs, z, nullptr, 1e-10, 40 * (g.nx + g.ny), /*mean_zero=*/true);
    const double ip = (rhs * z).sum() * g.cell_area();
    return std::sqrt(std::max(ip, 0.0));
}

double u_l4_norm(const VectorField& u) {
    const VectorField cc = u.layout == VectorLayout::staggered ? staggered_to_cc(u) : u;
    const Array2d mag2 = cc.x * cc.x + cc.y * cc.y;
    return std::pow((mag2 * mag2).sum() * cc.grid.cell_area(), 0.25);
}

std::vector<double> energy_budget(const Trajectory& traj) {
    std::vector<double> out;
    out.reserve(traj.records.size());
    if (traj.records.empty()) return out;
    const double e0 = traj.records.front().energy;
    double diss_acc = 0.0;
    for (const auto& r : traj.records) {
        diss_acc += r.dt * (r.diss_mu + r.diss_u + r.diss_grad_u);
        out.push_back(r.energy - e0 + diss_acc);
    }
    return out;
}

std::vector<double> defect_series(const Trajectory& traj) {
    std::vector<double> out;
    out.reserve(traj.records.size());
    for (const auto& r : traj.records) out.push_back(r.step_defect);
    return out;
}

std::vector<double> energeq_defects(const Trajectory& traj, const KernelOperator& kernel,
                                    const MaterialParams& laws) {
    std::vector<double> out;
    if (traj.snaps.size() < 2) return out;
    out.reserve(traj.snaps.size() - 1);
    ClampCounter clamps;
    for (size_t k = 0; k + 1 < traj.snaps.size(); ++k) {
        const StateSnap& s0 = traj.snaps[k];
        const StateSnap& s1 = traj.snaps[k + 1];
        const Grid& g = s0.phi.grid;
        const double dt = s1.t - s0.t;
        if (!(dt > 0)) continue;
        const ScalarField mid{g, 0.5 * (s0.phi.v + s1.phi.v)};
        const double ddt_half_l2 =
            0.5 * (l2_norm(s1.phi) * l2_norm(s1.phi) - l2_norm(s0.phi) * l2_norm(s0.phi)) / dt;

        ScalarField eta = ScalarField::zeros(g);
        ScalarField lam = ScalarField::zeros(g);
        ScalarField mob = ScalarField::zeros(g);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const double s = clamp_phase(mid.v(i, j), &clamps);
                eta.v(i, j) = viscosity(s, laws);
                lam.v(i, j) = lambda_fn(s, laws); // m F''
                mob.v(i, j) = mobility(s, laws);
            }
        const VectorField ucc = s1.u.layout == VectorLayout::staggered ? staggered_to_cc(s1.u)
                                                                       : s1.u;
        const double eta_u2 = ((ucc.x * ucc.x + ucc.y * ucc.y) * eta.v).sum() * g.cell_area();

        const VectorField gphi = gradient(mid);
        const double diff_term =
            ((gphi.x * gphi.x + gphi.y * gphi.y) * lam.v).sum() * g.cell_area();

        const VectorField gj = kernel.convolve_grad(mid);
        const double rhs_kernel =
            ((gj.x * gphi.x + gj.y * gphi.y) * mob.v).sum() * g.cell_area();

        const ScalarField jphi = kernel.convolve(mid);
        const double rhs_transport =
            (-(jphi.v) * (ucc.x * gphi.x + ucc.y * gphi.y)).sum() * g.cell_area();

        out.push_back(ddt_half_l2 + 2.0 * eta_u2 + diff_term - rhs_kernel - rhs_transport);
    }
    return out;
}

GapSeries stability_gap(const Trajectory& a, const Trajectory& b) {
    GapSeries gs;
    const size_t n = std::min(a.snaps.size(), b.snaps.size());
    for (size_t k = 0; k < n; ++k) {
        const StateSnap& sa = a.snaps[k];
        const StateSnap& sb = b.snaps[k];
        require_same_grid(sa.phi.grid, sb.phi.grid, "stability_gap");
        if (std::abs(sa.t - sb.t) > 1e-12 * (1.0 + std::abs(sa.t)))
            throw std::invalid_argument("stability_gap: snapshot times differ");
        gs.t.push_back(sa.t);
        ScalarField dphi{sa.phi.grid, sb.phi.v - sa.phi.v};
        gs.phi_l2.push_back(l2_norm(dphi));
        VectorField du = sb.u;
        du.x -= sa.u.x;
        du.y -= sa.u.y;
        gs.u_l2.push_back(l2_norm(du));
        ScalarField dpi{sa.pi.grid, sb.pi.v - sa.pi.v};
        gs.pi_h1.push_back(h1_seminorm(dpi));
        gs.phi_vprime.push_back(vprime_norm(dphi));
    }
    return gs;
}

std::string diagnostics_csv_header() {
    return "step,t,dt,mass,energy,entropy,diss_mu,diss_u,diss_grad_u,linf_phi,u_l4,"
           "budget_residual,step_defect,phi_functional,bound_violation,clamp_count,"
           "darcy_iterations,ch_iterations,holder_alpha";
}

std::string diagnostics_csv_row(const DiagnosticsRecord& r) {
    char buf[640];
    char hold[40];
    if (std::isnan(r.holder_alpha))
        hold[0] = '\0';
    else
        std::snprintf(hold, sizeof(hold), "%.17g", r.holder_alpha);
    std::snprintf(buf, sizeof(buf),
                  "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                  "%.17g,%.17g,%.17g,%.17g,%lld,%d,%d,%s",
                  r.step, r.t, r.dt, r.mass, r.energy, r.entropy, r.diss_mu, r.diss_u,
                  r.diss_grad_u, r.linf_phi, r.u_l4, r.budget_residual, r.step_defect,
                  r.phi_functional, r.bound_violation, r.clamp_count, r.darcy_iterations,
                  r.ch_iterations, hold);
    return buf;
}

} // namespace nchhs
