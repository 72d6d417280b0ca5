#pragma once

// Brownian ε-ladder: V jumps to W each time W has moved by ε since the last
// jump. X¹ = W − V⁺ and X² = −V⁻ stay within ε of each other while the total
// variation of V grows like T/ε. Paths are simulated independently on a
// fine grid; no tree is involved.

#include "bsdelab/random.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace bsdelab {

struct CounterexampleConfig {
    double eps = 0.05;
    double dt = 1e-5;
    double horizon = 1.0;
    std::size_t n_paths = 10000;
    RandomSeed seed{};
    std::size_t batch = 64;      ///< lanes advanced together by the ladder kernel
    std::size_t chunk = 1024;    ///< grid steps generated per kernel call
    unsigned workers = 1;

    void validate() const;
};

struct LadderPathStats {
    double gap = 0.0;        ///< sup over the grid of |X¹ − X²| = |W − V|
    double tv = 0.0;         ///< TV(V)_T = V⁺_T + V⁻_T
    double up = 0.0;         ///< V⁺_T
    double down = 0.0;       ///< V⁻_T
    double crossings = 0.0;
};

struct CounterexampleReport {
    CounterexampleConfig config;
    std::vector<LadderPathStats> paths;
    double slack = 0.0;           ///< √(2 dt log(1/dt)) discrete-monitoring slack
    double gap_bound = 0.0;       ///< ε + slack
    std::size_t violations = 0;   ///< paths with gap > gap_bound
    double gap_max = 0.0;
    double gap_q50 = 0.0;
    double gap_q90 = 0.0;
    double gap_q99 = 0.0;
    double mean_tv = 0.0;
    double predicted_tv = 0.0;    ///< T/ε (exit-time heuristic, not a printed value)
    double tv_relative_error = 0.0;
    double mean_crossings = 0.0;
    bool coarse_grid = false;     ///< dt > ε²/20: overshoot is not negligible

    bool gap_ok() const noexcept { return violations == 0; }
};

CounterexampleReport run_counterexample(const CounterexampleConfig& config);

struct TvSlopeFit {
    std::vector<double> eps;
    std::vector<double> mean_tv;
    double slope = 0.0;      ///< least-squares slope of log(mean TV) on log(1/ε)
    double intercept = 0.0;
};

/// Runs the ladder for each ε (same seed family, per-ε stream) and fits the slope.
TvSlopeFit tv_slope(const std::vector<double>& eps_values, CounterexampleConfig base);

/// One row per path: eps,path,gap,tv,up,down,crossings.
std::string counterexample_csv(const CounterexampleReport& report);

}  // namespace bsdelab
