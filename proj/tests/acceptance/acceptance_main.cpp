// Acceptance driver: one pass/fail line per acceptance criterion.
//
// Every criterion maps to one or more verification suites run at full size
// with the default seed. A line passes when all of its suites record no
// hard-assertion failure and, where a runtime budget applies, the suites
// finish within it.

#include "bsdelab/kernels.hpp"
#include "bsdelab/suites.hpp"

#include <algorithm>
#include <cstdio>
#include <string>
#include <thread>
#include <vector>

namespace {

using bsdelab::SuiteOptions;
using bsdelab::SuiteResult;

struct Criterion {
    const char* title;
    std::vector<std::string> suites;
    double budget_seconds;  ///< 0: no runtime budget
    std::vector<std::string> keys;  ///< prefixes of the summary values printed on the line
};

// Tolerances and budgets are pinned here and in the suites themselves.
const std::vector<Criterion> criteria = {
    {"tree exactness", {"tree"}, 1.0, {"trees", "worst_defect"}},
    {"representation and measure change", {"representation"}, 10.0,
     {"martingales", "measures", "worst_representation", "worst_defect"}},
    {"optimal-stopping oracle", {"snell"}, 30.0,
     {"shallow_instances", "deep_instances", "worst_enumeration_defect", "worst_dp_defect", "max_stopping_times"}},
    {"Skorokhod complementarity", {"skorokhod"}, 0.0, {"instances", "worst_defect"}},
    {"Picard contraction", {"picard"}, 0.0,
     {"instances", "max_ratio", "worst_limit_vs_direct", "max_iterations", "constant_driver_iterations"}},
    {"explicit-constant inequalities", {"meyer", "lemma21", "remark21", "constants", "ito-p"}, 120.0,
     {"instances", "max_ratio", "discrete_bracket_failures"}},
    {"empirical ratios", {"main1", "main2", "prop32", "prop33"}, 0.0,
     {"max_ratio_p", "decay_order", "seed_stable"}},
    {"closed-form convergence", {"convergence"}, 0.0, {"order_lambda", "constant_deviation"}},
    {"ladder counterexample", {"counterexample"}, 120.0,
     {"paths", "violations", "gap_max", "gap_bound", "mean_tv", "predicted_tv", "tv_relative_error", "tv_slope"}},
    {"truncation Cauchy decay", {"truncation"}, 0.0,
     {"instances", "max_last_over_first", "successive_increments_monotone"}},
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

}  // namespace

int main() {
    SuiteOptions options;
    options.workers = std::max(1u, std::thread::hardware_concurrency());
    std::printf("kernels: %s, workers: %u, seed: %llu\n",
                std::string(bsdelab::kernels::isa_name(bsdelab::kernels::active_isa())).c_str(), options.workers,
                static_cast<unsigned long long>(options.seed.seed));

    int failed = 0;
    for (std::size_t c = 0; c < criteria.size(); ++c) {
        const Criterion& cr = criteria[c];
        std::vector<std::string> failures;
        std::string numbers;
        double seconds = 0.0;
        for (const auto& name : cr.suites) {
            SuiteResult res;
            try {
                res = bsdelab::run_suite(name, options);
            } catch (const std::exception& e) {
                failures.push_back(name + ": " + e.what());
                continue;
            }
            seconds += res.seconds;
            for (const auto& f : res.failures) failures.push_back(name + ": " + f);
            for (const auto& key : cr.keys) {
                for (const auto& [k, v] : res.summary) {
                    if (k.rfind(key, 0) == 0) numbers += " " + (cr.suites.size() > 1 ? name + "." : std::string()) + k + "=" + fmt(v);
                }
            }
        }
        const bool over_budget = cr.budget_seconds > 0.0 && seconds > cr.budget_seconds;
        if (over_budget) failures.push_back("runtime " + fmt(seconds) + " s exceeds " + fmt(cr.budget_seconds) + " s");
        const bool pass = failures.empty();
        failed += pass ? 0 : 1;
        std::printf("[%s] %2zu %s:%s runtime=%ss%s\n", pass ? "PASS" : "FAIL", c + 1, cr.title, numbers.c_str(),
                    fmt(seconds).c_str(),
                    cr.budget_seconds > 0.0 ? (" (budget " + fmt(cr.budget_seconds) + "s)").c_str() : "");
        for (std::size_t i = 0; i < failures.size() && i < 5; ++i) std::printf("       %s\n", failures[i].c_str());
        if (failures.size() > 5) std::printf("       ... %zu more\n", failures.size() - 5);
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
