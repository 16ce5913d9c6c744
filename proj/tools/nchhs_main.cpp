#include "nchhs/config.hpp"
#include "nchhs/errors.hpp"
#include "nchhs/harness.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

namespace {

std::vector<double> parse_values(const std::string& csv) {
    std::vector<double> out;
    size_t pos = 0;
    while (pos < csv.size()) {
        size_t next = csv.find(',', pos);
        if (next == std::string::npos) next = csv.size();
        const std::string tok = csv.substr(pos, next - pos);
        if (!tok.empty()) out.push_back(std::stod(tok));
        pos = next + 1;
    }
    return out;
}

int threads_from_env(int cli_threads) {
    if (cli_threads > 0) return cli_threads;
    if (const char* env = std::getenv("NCHHS_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"nchhs - nonlocal Cahn-Hilliard-Hele-Shaw simulator"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand

    std::string config_path, out_dir, axis_name = "tau", values_csv, deltas_csv;
    int threads = 0;
    bool quiet = false;
    std::vector<std::string> files;

    app.add_option("--threads", threads, "worker threads for sweeps (env NCHHS_THREADS)");
    app.add_flag("--quiet", quiet, "suppress normal output");

    auto* run = app.add_subcommand("run", "run one coupled simulation");
    run->add_option("--config", config_path, "config file")->required();
    run->add_option("--out", out_dir, "output directory override");

    auto* sweep = app.add_subcommand("sweep", "run a parameter sweep with a convergence table");
    sweep->add_option("--config", config_path, "config file")->required();
    sweep->add_option("--axis", axis_name, "eps|nu|tau|grid")->required();
    sweep->add_option("--values", values_csv, "comma-separated axis values")->required();
    sweep->add_option("--out", out_dir, "output directory override");

    auto* stab = app.add_subcommand("stability", "base + perturbed runs with gap tables");
    stab->add_option("--config", config_path, "config file")->required();
    stab->add_option("--deltas", deltas_csv, "comma-separated perturbation sizes")->required();
    stab->add_option("--out", out_dir, "output directory override");

    auto* diag = app.add_subcommand("diagnose", "recompute diagnostics for saved fields");
    diag->add_option("files", files, "field snapshot files")->required();

    CLI11_PARSE(app, argc, argv);

    nchhs::CliOptions opts;
    opts.out_override = out_dir;
    opts.threads = threads_from_env(threads);
    opts.quiet = quiet;

    try {
        if (run->parsed()) return nchhs::cmd_run(nchhs::parse_config_file(config_path), opts);
        if (sweep->parsed())
            return nchhs::cmd_sweep(nchhs::parse_config_file(config_path),
                                    nchhs::parse_axis(axis_name), parse_values(values_csv), opts);
        if (stab->parsed())
            return nchhs::cmd_stability(nchhs::parse_config_file(config_path),
                                        parse_values(deltas_csv), opts);
        if (diag->parsed()) return nchhs::cmd_diagnose(files, opts);
    } catch (const nchhs::ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const nchhs::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const nchhs::SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
