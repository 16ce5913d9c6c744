#include "nchhs/config.hpp"
#include "nchhs/errors.hpp"
#include "nchhs/field_io.hpp"
#include "nchhs/harness.hpp"
#include "nchhs/operators.hpp"
#include "nchhs/prng.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace nchhs;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() / ("nchhs_test_" + tag);
    fs::create_directories(p);
    return p;
}

} // namespace

TEST_CASE("config parsing fills defaults from minimal text") {
    const SimConfig cfg = parse_config("");
    CHECK(cfg.domain.nx == 64);
    CHECK(cfg.material.theta0 > cfg.material.theta);
    CHECK(cfg.stepper.t_end > 0);
    CHECK(cfg.seed == 1);
}

TEST_CASE("config parsing reports every violation with location") {
    const std::string text =
        "[material]\n"
        "theta = 1.0\n"
        "theta0 = 0.5\n"   // violates theta0 > theta
        "eps = 1.5\n"      // outside [0,1)
        "[domain]\n"
        "nx = 4\n"         // too coarse
        "bogus_key = 1\n"; // unknown
    try {
        (void)parse_config(text);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const auto& v = e.violations();
        CHECK(v.size() >= 4);
        bool saw_theta = false, saw_eps = false, saw_nx = false, saw_unknown = false;
        for (const auto& viol : v) {
            if (viol.message.find("theta0 > theta") != std::string::npos) saw_theta = true;
            if (viol.key == "eps") saw_eps = true;
            if (viol.message.find(">= 8") != std::string::npos) saw_nx = true;
            if (viol.message == "unknown key" && viol.key == "bogus_key") saw_unknown = true;
        }
        CHECK(saw_theta);
        CHECK(saw_eps);
        CHECK(saw_nx);
        CHECK(saw_unknown);
    }
}

TEST_CASE("config enum and type errors carry line numbers") {
    try {
        (void)parse_config("[kernel]\nfamily = cubic\nstrength = abc\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.violations().size() == 2);
        CHECK(e.violations()[0].line > 0);
    }
}

TEST_CASE("field snapshot round trip is bit exact") {
    DomainSpec spec;
    spec.nx = 16;
    spec.ny = 16;
    const Grid g = Grid::make(spec);
    ScalarField f = ScalarField::zeros(g);
    SplitMix64 rng(123);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) f.v(i, j) = rng.next_symmetric() * 1e3;

    const fs::path dir = temp_dir("io");
    for (auto format : {SnapshotFormat::binary, SnapshotFormat::ascii}) {
        const std::string path =
            (dir / (format == SnapshotFormat::binary ? "f.bin" : "f.txt")).string();
        write_field(path, f, 0.375, format);
        const LoadedField lf = read_field(path);
        CHECK(lf.t == 0.375);
        REQUIRE(lf.field.grid.nx == g.nx);
        CHECK((lf.field.v - f.v).abs().maxCoeff() == 0.0);
    }
    CHECK_THROWS_AS((void)read_field((dir / "missing.bin").string()), IoError);
}

TEST_CASE("pgm export writes a plausible image") {
    DomainSpec spec;
    spec.nx = 32;
    spec.ny = 32;
    const Grid g = Grid::make(spec);
    const ScalarField f = ScalarField::sample(g, [](double x, double y) { return x + y; });
    const fs::path dir = temp_dir("pgm");
    const std::string path = (dir / "f.pgm").string();
    write_pgm(path, f);
    std::ifstream in(path, std::ios::binary);
    std::string magic;
    in >> magic;
    CHECK(magic == "P5");
    CHECK(fs::file_size(path) > 32 * 32);
}

TEST_CASE("initial conditions") {
    SimConfig cfg = parse_config("");
    cfg.domain.nx = 32;
    cfg.domain.ny = 32;
    const Grid g = Grid::make(cfg.domain);

    SUBCASE("spinodal is seeded and reproducible") {
        cfg.initial.type = IcType::spinodal;
        cfg.initial.value = 0.05;
        cfg.initial.amplitude = 0.1;
        cfg.seed = 42;
        const ScalarField a = build_initial_condition(cfg, g);
        const ScalarField b = build_initial_condition(cfg, g);
        CHECK((a.v - b.v).abs().maxCoeff() == 0.0);
        CHECK(linf_norm(a) <= 0.15);
        cfg.seed = 43;
        const ScalarField c = build_initial_condition(cfg, g);
        CHECK((a.v - c.v).abs().maxCoeff() > 0.0);
    }
    SUBCASE("bubble respects the configured levels") {
        cfg.initial.type = IcType::bubble;
        const ScalarField f = build_initial_condition(cfg, g);
        CHECK(linf_norm(f) <= 0.9 + 1e-12);
        CHECK(f.v(16, 16) == doctest::Approx(0.9).epsilon(1e-3));  // inside
        CHECK(f.v(0, 0) == doctest::Approx(-0.9).epsilon(1e-2));   // outside
    }
    SUBCASE("file round trip through the config") {
        const fs::path dir = temp_dir("icfile");
        cfg.initial.type = IcType::spinodal;
        const ScalarField a = build_initial_condition(cfg, g);
        const std::string path = (dir / "ic.f64").string();
        write_field(path, a, 0.0);
        cfg.initial.type = IcType::file;
        cfg.initial.path = path;
        const ScalarField b = build_initial_condition(cfg, g);
        CHECK((a.v - b.v).abs().maxCoeff() == 0.0);
    }
}

TEST_CASE("cmd_run writes the trajectory artifacts deterministically") {
    SimConfig cfg = parse_config(
        "[domain]\nnx = 32\nny = 32\n"
        "[material]\neps = 0.05\n"
        "[stepper]\ntau = 2e-4\nt_end = 1e-3\nform = mu_form\n"
        "[initial]\ntype = spinodal\nvalue = 0.0\namplitude = 0.2\n");
    const fs::path dir1 = temp_dir("run1");
    const fs::path dir2 = temp_dir("run2");

    CliOptions opts;
    opts.quiet = true;
    opts.out_override = dir1.string();
    REQUIRE(cmd_run(cfg, opts) == 0);
    opts.out_override = dir2.string();
    REQUIRE(cmd_run(cfg, opts) == 0);

    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
    };
    const std::string a = slurp(dir1 / "diagnostics.csv");
    const std::string b = slurp(dir2 / "diagnostics.csv");
    REQUIRE(!a.empty());
    CHECK(a == b); // byte-identical outputs for identical config + seed
    CHECK(fs::exists(dir1 / "phi_final.f64"));
    CHECK(fs::exists(dir1 / "phi_final.pgm"));
    CHECK(fs::exists(dir1 / "summary.txt"));
}

TEST_CASE("cmd_sweep over tau reports a first-order-or-better observed order") {
    SimConfig cfg = parse_config(
        "[domain]\nnx = 32\nny = 32\n"
        "[material]\neps = 0.05\n"
        "[kernel]\nstrength = 4.0\nwidth = 0.12\n"
        "[stepper]\nt_end = 4e-3\nform = mu_form\n"
        "[initial]\ntype = bubble\nradius = 0.2\nsmoothing = 0.08\n");
    const fs::path dir = temp_dir("sweep");
    CliOptions opts;
    opts.quiet = true;
    opts.out_override = dir.string();
    opts.threads = 2;
    REQUIRE(cmd_sweep(cfg, SweepAxis::tau, {4e-4, 2e-4, 1e-4}, opts) == 0);
    std::ifstream in(dir / "sweep.csv");
    REQUIRE(in.good());
    std::string line;
    std::getline(in, line); // header
    std::vector<double> orders;
    while (std::getline(in, line)) {
        const auto last = line.rfind(',');
        const std::string tail = line.substr(last + 1);
        if (!tail.empty()) orders.push_back(std::stod(tail));
    }
    REQUIRE(orders.size() == 1); // one order per consecutive pair beyond the first
    CHECK(orders[0] >= 0.9);
}

TEST_CASE("cmd_sweep over the grid restricts nested states for the table") {
    SimConfig cfg = parse_config(
        "[domain]\nnx = 16\nny = 16\n"
        "[material]\neps = 0.05\n"
        "[stepper]\ntau = 5e-4\nt_end = 2e-3\nform = mu_form\n"
        "[initial]\ntype = uniform\nvalue = 0.3\n");
    const fs::path dir = temp_dir("gridsweep");
    CliOptions opts;
    opts.quiet = true;
    opts.out_override = dir.string();
    REQUIRE(cmd_sweep(cfg, SweepAxis::grid, {16, 32}, opts) == 0);
    CHECK(fs::exists(dir / "sweep.csv"));
}

TEST_CASE("cmd_stability writes per-delta gap tables") {
    SimConfig cfg = parse_config(
        "[domain]\nnx = 16\nny = 16\n"
        "[material]\neps = 0.05\n"
        "[stepper]\ntau = 5e-4\nt_end = 2e-3\nform = mu_form\nsnapshot_every = 2\n"
        "[initial]\ntype = spinodal\nvalue = 0.1\namplitude = 0.2\n");
    const fs::path dir = temp_dir("stab");
    CliOptions opts;
    opts.quiet = true;
    opts.out_override = dir.string();
    REQUIRE(cmd_stability(cfg, {1e-3}, opts) == 0);
    std::ifstream in(dir / "stability_gap_0.csv");
    REQUIRE(in.good());
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,phi_l2,u_l2,pi_h1,phi_vprime");
    int rows = 0;
    std::string line;
    while (std::getline(in, line)) ++rows;
    CHECK(rows >= 2);
}

TEST_CASE("cmd_diagnose recomputes diagnostics for saved fields") {
    DomainSpec spec;
    spec.nx = 32;
    spec.ny = 32;
    const Grid g = Grid::make(spec);
    const ScalarField f =
        ScalarField::sample(g, [](double x, double y) { return 0.3 * x + 0.1 * y; });
    const fs::path dir = temp_dir("diag");
    const std::string path = (dir / "pi_snapshot.f64").string();
    write_field(path, f, 1.5);
    CliOptions opts;
    opts.quiet = true;
    CHECK(cmd_diagnose({path}, opts) == 0);
    CHECK_THROWS_AS((void)cmd_diagnose({}, opts), ConfigError);
}

TEST_CASE("solver failure leaves a .partial trajectory and exit code 3") {
    SimConfig cfg = parse_config(
        "[domain]\nnx = 16\nny = 16\n"
        "[material]\neps = 0.05\n"
        "[stepper]\ntau = 5e-4\nt_end = 2e-3\nform = mu_form\n"
        "[solver]\nbrinkman_nu = 1e-2\nbrinkman_tol = 1e-300\n" // unattainable
        "[initial]\ntype = spinodal\nvalue = 0.1\namplitude = 0.2\n");
    const fs::path dir = temp_dir("partial");
    CliOptions opts;
    opts.quiet = true;
    opts.out_override = dir.string();
    CHECK(cmd_run(cfg, opts) == 3);
    CHECK(fs::exists(dir / "diagnostics.csv.partial"));
    CHECK_FALSE(fs::exists(dir / "diagnostics.csv"));
}

TEST_CASE("cli process surface" * doctest::skip(std::getenv("NCHHS_CLI") == nullptr)) {
    const std::string cli = std::getenv("NCHHS_CLI") ? std::getenv("NCHHS_CLI") : "";
    const fs::path dir = temp_dir("cli");

    SUBCASE("config errors exit with code 2") {
        const fs::path cfgpath = dir / "bad.ini";
        std::ofstream(cfgpath) << "[material]\ntheta0 = 0.5\ntheta = 1.0\n";
        const int rc =
            std::system((cli + " run --config " + cfgpath.string() + " 2>/dev/null").c_str());
        CHECK(WEXITSTATUS(rc) == 2);
    }
    SUBCASE("missing field file exits with code 4") {
        const int rc = std::system((cli + " diagnose /nonexistent.f64 2>/dev/null").c_str());
        CHECK(WEXITSTATUS(rc) == 4);
    }
    SUBCASE("a small run exits cleanly") {
        const fs::path cfgpath = dir / "ok.ini";
        std::ofstream(cfgpath) << "[domain]\nnx = 16\nny = 16\n"
                               << "[stepper]\ntau = 5e-4\nt_end = 1e-3\n"
                               << "[initial]\ntype = uniform\nvalue = 0.2\n";
        const int rc = std::system((cli + " --quiet run --config " + cfgpath.string() + " --out " +
                                    (dir / "out").string() + " 2>/dev/null")
                                       .c_str());
        CHECK(WEXITSTATUS(rc) == 0);
        CHECK(fs::exists(dir / "out" / "diagnostics.csv"));
    }
}
