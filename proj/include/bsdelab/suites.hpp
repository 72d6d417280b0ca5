#pragma once

// Verification suites. Each suite draws its seeded instances, runs the checks
// and collects hard-assertion failures; reports are kept in instance order so
// that results do not depend on the worker count.

#include "bsdelab/estimate_report.hpp"
#include "bsdelab/families.hpp"
#include "bsdelab/random.hpp"

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace bsdelab {

struct SuiteOptions {
    RandomSeed seed{7, 0};
    /// Multiplies every instance count (1 = full size). Values below 1 give quick runs.
    double size = 1.0;
    unsigned workers = 1;
    /// Relative tolerance of explicit-constant checks.
    double tol = 1e-9;
    std::size_t counterexample_paths = 10000;
    std::size_t slope_paths = 1000;
    double counterexample_dt = 1e-5;
};

struct SuiteResult {
    std::string name;
    std::vector<EstimateReport> reports;
    std::vector<std::string> failures;
    std::vector<std::pair<std::string, double>> summary;
    double seconds = 0.0;

    bool pass() const noexcept { return failures.empty(); }
    /// Records a failure message unless `ok`.
    void expect(bool ok, const std::string& what);
    SuiteResult& note(std::string key, double value);
    double value(const std::string& key) const;
};

/// Names accepted by run_suite, in execution order of "all".
const std::vector<std::string>& suite_names();

/// Runs one suite by name ("all" is not accepted here; see run_suites).
SuiteResult run_suite(const std::string& name, const SuiteOptions& options);

/// Expands "all" and runs every listed suite.
std::vector<SuiteResult> run_suites(const std::vector<std::string>& names, const SuiteOptions& options);

/// Tree shapes used by the suites (d ≤ 2, n ≤ 12, at most two reveals).
std::vector<TreeSpec> shipped_tree_specs();

}  // namespace bsdelab
