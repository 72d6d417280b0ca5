// bsdelab: command-line front end of the experiment runner.
//
//   bsdelab <solve|reflect|picard|verify|counterexample|snell-check>
//           [--config <path>] [--seed <u64>] [--out <dir>] [--workers <n>] [--tol <float>]
//
// Exit codes: 0 all hard assertions pass, 1 assertion failure, 2 configuration error.

#include "bsdelab/errors.hpp"
#include "bsdelab/runner.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw bsdelab::ConfigError("cannot read config file '" + path + "'");
    }
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discrete-filtration laboratory for BSDEs and reflected BSDEs"};
    app.require_subcommand(1, 1);
    app.fallthrough();

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<unsigned> workers;
    std::optional<double> tol;
    app.add_option("--config", config_path, "Experiment configuration (JSON, or a run manifest)");
    app.add_option("--seed", seed, "Random seed (u64)");
    app.add_option("--out", out, "Output directory");
    app.add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--tol", tol, "Relative tolerance of explicit-constant checks")->check(CLI::PositiveNumber);

    std::vector<std::string> suites;
    std::optional<double> size;
    std::optional<double> eps;
    std::optional<double> dt;
    std::optional<std::size_t> paths;

    app.add_subcommand("solve", "Solve plain BSDEs on the configured instance family");
    app.add_subcommand("reflect", "Solve reflected BSDEs and check the Skorokhod condition");
    app.add_subcommand("picard", "Run the Picard iteration and record its contraction");
    auto* verify = app.add_subcommand("verify", "Run verification suites");
    verify->add_option("--suite", suites, "Suite name(s), or 'all'");
    verify->add_option("--size", size, "Instance-count multiplier (1 = full size)")->check(CLI::PositiveNumber);
    auto* ce = app.add_subcommand("counterexample", "Simulate the Brownian epsilon-ladder");
    ce->add_option("--eps", eps, "Ladder threshold")->check(CLI::PositiveNumber);
    ce->add_option("--dt", dt, "Grid step")->check(CLI::PositiveNumber);
    ce->add_option("--paths", paths, "Number of paths")->check(CLI::PositiveNumber);
    app.add_subcommand("snell-check", "Compare reflected solutions with optimal stopping");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    bsdelab::ExperimentConfig config;
    try {
        if (!config_path.empty()) {
            config = bsdelab::ExperimentConfig::parse(read_file(config_path));
        }
        config.experiment = bsdelab::parse_experiment(command);
        if (seed) config.seed = *seed;
        if (out) config.output = *out;
        if (workers) config.workers = *workers;
        if (tol) config.tol = *tol;
        if (!suites.empty()) config.suites = suites;
        if (size) config.suite_size = *size;
        if (eps) config.ce_eps = *eps;
        if (dt) config.ce_dt = *dt;
        if (paths) config.ce_paths = *paths;
        // Re-validate after overrides.
        config = bsdelab::ExperimentConfig::from_json(config.to_json());
    } catch (const bsdelab::Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }

    const bsdelab::RunResult result = bsdelab::run(config);
    if (result.exit_code == 2) {
        for (const auto& f : result.failures) {
            std::cerr << "config error: " << f << '\n';
        }
        return 2;
    }
    try {
        bsdelab::write_artifacts(result, config.output);
    } catch (const bsdelab::Error& e) {
        std::cerr << e.what() << '\n';
        return 2;
    }
    std::cout << result.log;
    for (const auto& f : result.failures) {
        std::cout << "FAIL " << f << '\n';
    }
    std::cout << command << ": " << (result.exit_code == 0 ? "pass" : "fail") << " (" << result.artifacts.size()
              << " artifacts in " << config.output << ")\n";
    return result.exit_code;
}
