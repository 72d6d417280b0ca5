#pragma once

// Experiment orchestration: a versioned JSON configuration, deterministic
// in-memory artifacts, and a manifest carrying the config hash and seed.

#include "bsdelab/bsde.hpp"
#include "bsdelab/families.hpp"
#include "bsdelab/norms.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace bsdelab {

enum class ExperimentKind { solve, reflect, picard, verify, counterexample, snell_check };

ExperimentKind parse_experiment(const std::string& s);
const char* experiment_name(ExperimentKind k) noexcept;

struct ExperimentConfig {
    static constexpr int schema_version = 1;

    ExperimentKind experiment = ExperimentKind::verify;
    TreeSpec tree;
    FamilySpec family;
    std::size_t instances = 4;
    Scheme scheme = Scheme::implicit_step;
    std::vector<NormConfig> norms{NormConfig{2.0, 1.0}};
    std::uint64_t seed = 7;
    std::string output = "bsdelab_out";
    double tol = 1e-9;
    unsigned workers = 1;

    // verify
    std::vector<std::string> suites{"all"};
    double suite_size = 1.0;

    // counterexample
    double ce_eps = 0.05;
    double ce_dt = 1e-5;
    double ce_horizon = 1.0;
    std::size_t ce_paths = 10000;
    std::vector<double> slope_eps{0.2, 0.1, 0.05, 0.025};
    std::size_t slope_paths = 1000;

    // picard (alpha ≤ 0 selects α* of each instance)
    double picard_alpha = 0.0;
    std::size_t picard_max_iter = 1000;
    double picard_tol = 1e-12;

    /// Parses a config object, or the "config" member of a manifest. Missing
    /// fields keep their defaults; wrong types or values raise ConfigError
    /// naming the field.
    static ExperimentConfig from_json(const nlohmann::ordered_json& j);
    static ExperimentConfig parse(const std::string& text);
    nlohmann::ordered_json to_json() const;
    /// Canonical serialization (fixed key order) and its FNV-1a hash.
    std::string canonical() const;
    std::uint64_t hash() const;
};

struct Artifact {
    std::string name;
    std::string content;
};

struct RunResult {
    int exit_code = 0;  ///< 0 pass, 1 assertion failure, 2 configuration error
    std::vector<std::string> failures;
    std::vector<Artifact> artifacts;  ///< manifest.json is last
    std::string log;                  ///< human-readable summary (may contain timings)
};

/// Runs the experiment. Configuration problems give exit code 2 with the
/// diagnostic in `failures`; nothing is written to disk.
RunResult run(const ExperimentConfig& config);

/// Writes every artifact into `dir` (created if needed).
void write_artifacts(const RunResult& result, const std::string& dir);

}  // namespace bsdelab
