#include "nchhs/harness.hpp"

#include "nchhs/diagnostics.hpp"
#include "nchhs/errors.hpp"
#include "nchhs/field_io.hpp"
#include "nchhs/operators.hpp"
#include "nchhs/prng.hpp"
#include "nchhs/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

namespace fs = std::filesystem;

namespace nchhs {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

CoupledConfig coupled_config(const SimConfig& cfg) {
    CoupledConfig cc;
    cc.step.tau = cfg.stepper.tau;
    cc.step.form = cfg.stepper.form;
    cc.step.convection = cfg.stepper.convection;
    cc.step.cfl_safety = cfg.stepper.cfl_safety;
    cc.t_end = cfg.stepper.t_end;
    cc.darcy_rel_tol = cfg.solver.rel_tol;
    cc.darcy_max_iter = cfg.solver.max_iter;
    cc.brinkman_nu = cfg.solver.brinkman_nu;
    cc.brinkman_tol = cfg.solver.brinkman_tol;
    cc.snapshot_every = cfg.stepper.snapshot_every;
    return cc;
}

void write_csv(const std::string& path, const Trajectory& traj) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path);
    out << diagnostics_csv_header() << "\n";
    for (const auto& r : traj.records) out << diagnostics_csv_row(r) << "\n";
    if (!out) throw IoError("write failed for " + path);
}

void print_record(const DiagnosticsRecord& r, std::ostream& os) {
    os << "step = " << r.step << "\n"
       << "t = " << fmt(r.t) << "\n"
       << "mass = " << fmt(r.mass) << "\n"
       << "energy = " << fmt(r.energy) << "\n"
       << "entropy = " << fmt(r.entropy) << "\n"
       << "diss_mu = " << fmt(r.diss_mu) << "\n"
       << "diss_u = " << fmt(r.diss_u) << "\n"
       << "diss_grad_u = " << fmt(r.diss_grad_u) << "\n"
       << "linf_phi = " << fmt(r.linf_phi) << "\n"
       << "u_l4 = " << fmt(r.u_l4) << "\n"
       << "budget_residual = " << fmt(r.budget_residual) << "\n"
       << "step_defect = " << fmt(r.step_defect) << "\n"
       << "phi_functional = " << fmt(r.phi_functional) << "\n"
       << "bound_violation = " << fmt(r.bound_violation) << "\n"
       << "clamp_count = " << r.clamp_count << "\n";
}

struct Scenario {
    SimConfig cfg;
    Trajectory traj;
    std::string error;
};

// run scenarios in a small worker pool; each scenario owns its state and the
// results are merged in order afterwards
void run_pool(std::vector<Scenario>& scenarios, int threads, bool keep_snaps) {
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const size_t k = next.fetch_add(1);
            if (k >= scenarios.size()) return;
            Scenario& sc = scenarios[k];
            try {
                const Grid grid = Grid::make(sc.cfg.domain);
                const KernelOperator kernel = KernelOperator::build(sc.cfg.kernel, grid);
                const ScalarField phi0 = build_initial_condition(sc.cfg, grid);
                CoupledConfig cc = coupled_config(sc.cfg);
                cc.keep_snaps = keep_snaps;
                if (keep_snaps && cc.snapshot_every <= 0) cc.snapshot_every = 1;
                sc.traj = run_coupled(phi0, kernel, sc.cfg.material, cc);
                if (!sc.traj.completed) sc.error = sc.traj.abort_reason;
            } catch (const std::exception& e) {
                sc.error = e.what();
            }
        }
    };
    const int n = std::max(1, std::min<int>(threads, static_cast<int>(scenarios.size())));
    std::vector<std::thread> pool;
    pool.reserve(n);
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

// restrict a field to a coarser dyadic grid by block averaging
ScalarField restrict_to(const ScalarField& fine, const Grid& coarse) {
    const Grid& gf = fine.grid;
    if (gf.nx % coarse.nx != 0 || gf.ny % coarse.ny != 0)
        throw std::invalid_argument("restrict_to: grids are not nested");
    const int rx = gf.nx / coarse.nx, ry = gf.ny / coarse.ny;
    ScalarField out = ScalarField::zeros(coarse);
    for (int j = 0; j < coarse.ny; ++j)
        for (int i = 0; i < coarse.nx; ++i) {
            double acc = 0.0;
            for (int jj = 0; jj < ry; ++jj)
                for (int ii = 0; ii < rx; ++ii) acc += fine.v(i * rx + ii, j * ry + jj);
            out.v(i, j) = acc / (rx * ry);
        }
    return out;
}

} // namespace

SweepAxis parse_axis(const std::string& name) {
    if (name == "eps") return SweepAxis::eps;
    if (name == "nu") return SweepAxis::nu;
    if (name == "tau") return SweepAxis::tau;
    if (name == "grid") return SweepAxis::grid;
    throw ConfigError("sweep axis must be one of eps|nu|tau|grid, got '" + name + "'");
}

ScalarField build_initial_condition(const SimConfig& cfg, const Grid& grid) {
    const InitialCondition& ic = cfg.initial;
    switch (ic.type) {
        case IcType::uniform:
            return ScalarField::constant(grid, ic.value);
        case IcType::spinodal: {
            ScalarField f = ScalarField::zeros(grid);
            SplitMix64 rng(cfg.seed);
            // row-major fill order (y outer, x inner), part of the format contract
            for (int j = 0; j < grid.ny; ++j)
                for (int i = 0; i < grid.nx; ++i)
                    f.v(i, j) = ic.value + ic.amplitude * rng.next_symmetric();
            return f;
        }
        case IcType::bubble: {
            const double cx = ic.center_x * grid.lx, cy = ic.center_y * grid.ly;
            return ScalarField::sample(grid, [&](double x, double y) {
                const double r = std::hypot(x - cx, y - cy);
                const double w = 0.5 * (1.0 - std::tanh((r - ic.radius) / ic.smoothing));
                return ic.phi_out + (ic.phi_in - ic.phi_out) * w;
            });
        }
        case IcType::file: {
            LoadedField lf = read_field(ic.path, grid.mode);
            if (!(lf.field.grid == grid))
                throw ConfigError("initial condition file grid does not match [domain]");
            return lf.field;
        }
    }
    throw std::logic_error("unreachable");
}

int cmd_run(const SimConfig& cfg_in, const CliOptions& opts) {
    SimConfig cfg = cfg_in;
    if (!opts.out_override.empty()) cfg.output_dir = opts.out_override;
    fs::create_directories(cfg.output_dir);

    const Grid grid = Grid::make(cfg.domain);
    const KernelOperator kernel = KernelOperator::build(cfg.kernel, grid);
    const ScalarField phi0 = build_initial_condition(cfg, grid);

    CoupledConfig cc = coupled_config(cfg);
    cc.snapshot_hook = [&](const SimState& st) {
        char name[64];
        std::snprintf(name, sizeof(name), "snap_phi_%06lld.f64", st.step_index);
        write_field((fs::path(cfg.output_dir) / name).string(), st.phi, st.t);
        std::snprintf(name, sizeof(name), "snap_pi_%06lld.f64", st.step_index);
        write_field((fs::path(cfg.output_dir) / name).string(), st.pi, st.t);
    };

    const Trajectory traj = run_coupled(phi0, kernel, cfg.material, cc);

    const std::string csv = (fs::path(cfg.output_dir) / "diagnostics.csv").string();
    if (!traj.completed) {
        write_csv(csv + ".partial", traj);
        std::cerr << "run aborted: " << traj.abort_reason << "\n";
        return 3;
    }
    write_csv(csv, traj);
    write_field((fs::path(cfg.output_dir) / "phi_final.f64").string(), traj.final_state.phi,
                traj.final_state.t);
    write_pgm((fs::path(cfg.output_dir) / "phi_final.pgm").string(), traj.final_state.phi);

    // flat key = value summary; theta0 plays no role in the dynamics (the
    // kernel carries the demixing), so the local-model well depth it would
    // imply is reported alongside for reference
    {
        std::ofstream sum((fs::path(cfg.output_dir) / "summary.txt").string());
        print_record(traj.records.back(), sum);
        const double mean_phi = traj.records.back().mass / grid.area();
        ClampCounter cc;
        const double w_mean = potential(clamp_phase(mean_phi, &cc), cfg.material) -
                              0.5 * cfg.material.theta0 * mean_phi * mean_phi;
        sum << "theta0 = " << fmt(cfg.material.theta0) << "\n"
            << "local_model_w_at_mean = " << fmt(w_mean) << "\n";
    }
    if (!opts.quiet) print_record(traj.records.back(), std::cout);
    return 0;
}

int cmd_sweep(const SimConfig& cfg, SweepAxis axis, const std::vector<double>& values,
              const CliOptions& opts) {
    if (values.size() < 2) throw ConfigError("sweep needs at least two values");
    const std::string outdir = opts.out_override.empty() ? cfg.output_dir : opts.out_override;
    fs::create_directories(outdir);

    std::vector<Scenario> scenarios(values.size());
    for (size_t k = 0; k < values.size(); ++k) {
        scenarios[k].cfg = cfg;
        switch (axis) {
            case SweepAxis::eps: scenarios[k].cfg.material.eps = values[k]; break;
            case SweepAxis::nu: scenarios[k].cfg.solver.brinkman_nu = values[k]; break;
            case SweepAxis::tau: scenarios[k].cfg.stepper.tau = values[k]; break;
            case SweepAxis::grid: {
                const int n = static_cast<int>(values[k]);
                scenarios[k].cfg.domain.nx = n;
                scenarios[k].cfg.domain.ny = n;
                break;
            }
        }
    }
    run_pool(scenarios, opts.threads, /*keep_snaps=*/false);
    for (size_t k = 0; k < scenarios.size(); ++k)
        if (!scenarios[k].error.empty()) {
            std::cerr << "sweep value " << fmt6(values[k]) << " failed: " << scenarios[k].error
                      << "\n";
            return 3;
        }

    // pairwise differences of the final states (finer restricted when nested)
    std::vector<double> diffs(values.size(), std::nan(""));
    for (size_t k = 1; k < scenarios.size(); ++k) {
        const ScalarField& a = scenarios[k - 1].traj.final_state.phi;
        const ScalarField& b = scenarios[k].traj.final_state.phi;
        ScalarField d = a;
        if (a.grid == b.grid) {
            d.v = b.v - a.v;
        } else if (b.grid.nx >= a.grid.nx) {
            const ScalarField br = restrict_to(b, a.grid);
            d.v = br.v - a.v;
        } else {
            const ScalarField ar = restrict_to(a, b.grid);
            d = b;
            d.v -= ar.v;
        }
        diffs[k] = l2_norm(d);
    }

    const std::string table = (fs::path(outdir) / "sweep.csv").string();
    std::ofstream out(table + ".partial", std::ios::binary);
    out << "axis,value,l2_diff_to_prev,observed_order\n";
    const char* axis_name = axis == SweepAxis::eps   ? "eps"
                            : axis == SweepAxis::nu  ? "nu"
                            : axis == SweepAxis::tau ? "tau"
                                                     : "grid";
    std::vector<double> orders(values.size(), std::nan(""));
    for (size_t k = 2; k < values.size(); ++k) {
        const double ratio = std::abs(std::log(std::abs(values[k] / values[k - 1])));
        if (diffs[k] > 0 && diffs[k - 1] > 0 && ratio > 0)
            orders[k] = std::log(diffs[k - 1] / diffs[k]) / ratio;
    }
    for (size_t k = 0; k < values.size(); ++k) {
        out << axis_name << "," << fmt(values[k]) << ","
            << (std::isnan(diffs[k]) ? "" : fmt(diffs[k])) << ","
            << (std::isnan(orders[k]) ? "" : fmt(orders[k])) << "\n";
    }
    out.close();
    fs::rename(table + ".partial", table);

    if (!opts.quiet) {
        std::cout << "sweep over " << axis_name << ":\n";
        for (size_t k = 0; k < values.size(); ++k) {
            std::cout << "  " << axis_name << " = " << fmt6(values[k]);
            if (!std::isnan(diffs[k])) std::cout << "  |d|_2 = " << fmt6(diffs[k]);
            if (!std::isnan(orders[k])) std::cout << "  order = " << fmt6(orders[k]);
            std::cout << "\n";
        }
    }
    return 0;
}

int cmd_stability(const SimConfig& cfg, const std::vector<double>& deltas,
                  const CliOptions& opts) {
    if (deltas.empty()) throw ConfigError("stability needs at least one delta");
    const std::string outdir = opts.out_override.empty() ? cfg.output_dir : opts.out_override;
    fs::create_directories(outdir);

    const Grid grid = Grid::make(cfg.domain);

    // fixed mean-zero, L2-normalized perturbation shape
    ScalarField gshape = ScalarField::zeros(grid);
    {
        SplitMix64 rng(cfg.seed + 0x517cc1b727220a95ull);
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i) gshape.v(i, j) = rng.next_symmetric();
        gshape.v -= gshape.v.sum() / static_cast<double>(gshape.v.size());
        const double n2 = l2_norm(gshape);
        if (n2 > 0) gshape.v /= n2;
    }

    std::vector<Scenario> scenarios(deltas.size() + 1);
    scenarios[0].cfg = cfg;
    for (size_t k = 0; k < deltas.size(); ++k) scenarios[k + 1].cfg = cfg;

    const KernelOperator kernel = KernelOperator::build(cfg.kernel, grid);
    const ScalarField phi0 = build_initial_condition(cfg, grid);
    CoupledConfig cc = coupled_config(cfg);
    cc.keep_snaps = true;
    if (cc.snapshot_every <= 0) cc.snapshot_every = 1;

    auto run_one = [&](Scenario& sc, double delta) {
        try {
            ScalarField ic = phi0;
            ic.v += delta * gshape.v;
            if (linf_norm(ic) > 1.0)
                throw ConfigError("perturbed initial datum exceeds |phi| = 1");
            sc.traj = run_coupled(ic, kernel, sc.cfg.material, cc);
            if (!sc.traj.completed) sc.error = sc.traj.abort_reason;
        } catch (const std::exception& e) {
            sc.error = e.what();
        }
    };
    run_one(scenarios[0], 0.0);
    {
        std::vector<std::thread> pool;
        const int nthreads = std::max(1, std::min<int>(opts.threads, deltas.size()));
        std::atomic<size_t> next{0};
        for (int t = 0; t < nthreads; ++t)
            pool.emplace_back([&]() {
                for (;;) {
                    const size_t k = next.fetch_add(1);
                    if (k >= deltas.size()) return;
                    run_one(scenarios[k + 1], deltas[k]);
                }
            });
        for (auto& t : pool) t.join();
    }
    for (auto& sc : scenarios)
        if (!sc.error.empty()) {
            std::cerr << "stability run failed: " << sc.error << "\n";
            return 3;
        }

    const bool eta_const = cfg.material.nu1 == cfg.material.nu2;
    if (!opts.quiet)
        std::cout << "stability headline norm: " << (eta_const ? "V'" : "L2")
                  << (eta_const ? " (constant viscosity)" : "") << "\n";

    for (size_t k = 0; k < deltas.size(); ++k) {
        const GapSeries gs = stability_gap(scenarios[0].traj, scenarios[k + 1].traj);
        char name[64];
        std::snprintf(name, sizeof(name), "stability_gap_%zu.csv", k);
        const std::string path = (fs::path(outdir) / name).string();
        std::ofstream out(path + ".partial", std::ios::binary);
        out << "t,phi_l2,u_l2,pi_h1,phi_vprime\n";
        double sup_gap = 0.0;
        for (size_t i = 0; i < gs.t.size(); ++i) {
            out << fmt(gs.t[i]) << "," << fmt(gs.phi_l2[i]) << "," << fmt(gs.u_l2[i]) << ","
                << fmt(gs.pi_h1[i]) << "," << fmt(gs.phi_vprime[i]) << "\n";
            sup_gap = std::max(sup_gap, eta_const ? gs.phi_vprime[i] : gs.phi_l2[i]);
        }
        out.close();
        fs::rename(path + ".partial", path);
        if (!opts.quiet)
            std::cout << "  delta = " << fmt6(deltas[k]) << "  sup_t gap = " << fmt6(sup_gap)
                      << "  gap/delta = " << fmt6(sup_gap / deltas[k]) << "\n";
    }
    return 0;
}

int cmd_diagnose(const std::vector<std::string>& files, const CliOptions& opts) {
    if (files.empty()) throw ConfigError("diagnose needs at least one field file");
    std::vector<double> alphas;
    for (double a = 0.1; a <= 1.0 + 1e-12; a += 0.05) alphas.push_back(a);
    for (const auto& path : files) {
        const LoadedField lf = read_field(path);
        const auto [alpha, quot] = holder_exponent(lf.field, alphas);
        if (!opts.quiet) {
            std::cout << path << ":\n"
                      << "  t = " << fmt6(lf.t) << "\n"
                      << "  mass = " << fmt(integrate(lf.field)) << "\n"
                      << "  l2 = " << fmt(l2_norm(lf.field)) << "\n"
                      << "  linf = " << fmt(linf_norm(lf.field)) << "\n"
                      << "  min = " << fmt(lf.field.v.minCoeff())
                      << "  max = " << fmt(lf.field.v.maxCoeff()) << "\n"
                      << "  holder_alpha = " << fmt6(alpha) << "  quotient = " << fmt6(quot)
                      << "\n";
        }
    }
    return 0;
}

} // namespace nchhs
