#pragma once

#include "bsdelab/bsde.hpp"
#include "bsdelab/errors.hpp"
#include "bsdelab/estimate_report.hpp"
#include "bsdelab/martingale.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace bsdelab {

/// Attaches a lower obstacle, clipping S_T to min(S_T, ξ).
BsdeInstance make_reflected(BsdeInstance base, AdaptedProcess obstacle);

/// Y_k = max(S_k, ỹ_k), ỹ_k = 𝔼_k[Y_{k+1}] − g_k(ŷ, Z)dt, ΔK_{k+1} = Y_k − ỹ_k.
/// Implicit scheme: ŷ = Y_k, solved as a fixed point of y ↦ max(S_k, 𝔼_k[Y_{k+1}] − g_k(y, Z)dt).
SolutionQuadruple solve_reflected(const BsdeInstance& instance, Scheme scheme, const SolveOptions& options = {});

/// 𝔼[Σ_k (Y_k − S_k) ΔK_{k+1}].
double check_skorokhod(const ScenarioTree& tree, const SolutionQuadruple& sol, const AdaptedProcess& obstacle);

/// max_τ 𝔼[−Σ_{k<τ} c_k dt + P_τ 1{τ<n} + ξ 1{τ=n}] with optional ℚ weights.
struct StoppingProblem {
    const ScenarioTree* tree = nullptr;
    AdaptedProcess stop_payoff;   ///< P_k, used for k < n (may be −∞)
    std::vector<double> terminal; ///< one value per leaf
    AdaptedProcess running_cost;  ///< c_k per unit time at step-k nodes
    const MeasureChange* measure = nullptr;
};

struct SnellDp {
    AdaptedProcess value;
    AdaptedProcess stop;  ///< 1 where stopping is optimal (ties stop)
};

SnellDp snell_dp(const StoppingProblem& problem);

struct SnellEnumeration {
    double value = 0.0;
    std::size_t stopping_times = 0;
};

/// Exhaustive enumeration of every stopping time started at (step, node);
/// SizingError once the count would exceed `cap`.
SnellEnumeration snell_enumerate(const StoppingProblem& problem, std::size_t step = 0, std::size_t node = 0,
                                 std::size_t cap = 5'000'000);

/// Number of stopping times from the root: T(node) = 1 + Π T(child), T(leaf) = 1.
double count_stopping_times(const ScenarioTree& tree);

struct SnellOptions {
    std::size_t max_dp_depth = 12;
    std::size_t max_enum_depth = 4;
    std::size_t enum_cap = 5'000'000;
};

struct SnellResult {
    AdaptedProcess value;
    AdaptedProcess stop;
    std::optional<SnellEnumeration> enumerated;
};

/// Snell envelope of (S, ξ) with running costs, by DP and (for shallow trees) enumeration.
SnellResult snell_bruteforce(const BsdeInstance& instance, const AdaptedProcess& frozen_costs,
                             const SnellOptions& options = {});

/// Both optimal-stopping representations of a reflected solution. Display (b)
/// (discounted, under ℚ) is evaluated for the implicit scheme only.
EstimateReport verify_snell_representation(const BsdeInstance& instance, const SolutionQuadruple& sol, Scheme scheme,
                                           const SnellOptions& options = {});

/// α* = 1/ε + 2L_y + L_z²/η.
double alpha_star(double l_y, double l_z, double eps = 1.0, double eta = 0.5);

struct PicardStep {
    double dist_stop = 0.0;      ///< ‖δY‖_𝕊² + ‖δZ‖_ℍ^{2,α}
    double dist_weighted = 0.0;  ///< ‖δY‖_ℍ1^{2,α} + ‖δZ‖_ℍ^{2,α}
    double dist_full = 0.0;      ///< ‖e^{α·}δY‖_𝕊² + ‖δZ‖_ℍ^{2,α} + ‖δL‖_𝕊², L = M − K
    double dist_l = 0.0;         ///< ‖δL‖_𝕊²
    double ratio = 0.0;          ///< dist_weighted / previous dist_weighted (0 on the first step)
    double ratio_stop = 0.0;     ///< same for dist_stop
};

struct PicardTrace {
    double alpha = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    std::vector<PicardStep> steps;
    std::vector<SolutionQuadruple> iterates;  ///< filled only when requested
    double max_ratio() const;
};

class PicardError : public ConvergenceError {
public:
    PicardError(const std::string& what, PicardTrace trace)
        : ConvergenceError(what, trace.steps.empty() ? 0.0 : trace.steps.back().dist_stop), trace_(std::move(trace)) {}

    const PicardTrace& trace() const noexcept { return trace_; }

private:
    PicardTrace trace_;
};

struct PicardResult {
    SolutionQuadruple solution;
    PicardTrace trace;
};

/// Ȳ^{n+1} solves the reflected problem with frozen driver g(Ȳⁿ, Z̄ⁿ), from (0, 0).
/// Converged after n iterations when the distance between Ȳ^{n+1} and Ȳⁿ is ≤ tol.
PicardResult picard_solve(const BsdeInstance& instance, double alpha, std::size_t max_iter, double tol,
                          bool keep_iterates = false);

/// (−n) ∨ · ∧ n applied to ξ, S and g.
BsdeInstance truncate_instance(const BsdeInstance& instance, double level);

}  // namespace bsdelab
