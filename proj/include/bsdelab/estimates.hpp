#pragma once

// Numerical checks of the a priori estimates. Explicit-tier checks assemble
// the printed constants and are hard assertions; empirical-tier checks report
// lhs / rhs for "there is a constant" statements.
//
// All norms follow the conventions of norms.hpp and enter as p-th powers
// unless stated otherwise.

#include "bsdelab/bsde.hpp"
#include "bsdelab/estimate_report.hpp"
#include "bsdelab/process.hpp"

#include <span>
#include <vector>

namespace bsdelab {

/// Proof parameters. Negative beta / kappa select the defaults p(p−1)/4 and (1+p)/2.
struct ProofParameters {
    double eps = 1.0;
    double eta = 0.5;
    double beta = -1.0;
    double kappa = -1.0;

    double beta_for(double p) const noexcept { return beta > 0.0 ? beta : p * (p - 1.0) / 4.0; }
    double kappa_for(double p) const noexcept { return kappa > 0.0 ? kappa : (1.0 + p) / 2.0; }
};

/// ‖Z‖_H + ‖M‖_M + ‖K‖_I against ‖ξ‖ + ‖Y‖_S + ‖g0‖_H1 (empirical).
EstimateReport check_theorem_main1(const BsdeInstance& instance, const SolutionQuadruple& sol, double p,
                                   double alpha);

enum class LemmaBranch { k_bound, n_ge2, n_lt2 };

const char* branch_name(LemmaBranch b) noexcept;

/// k_bound: ‖K‖_I^p against the assembled Meyer chain (explicit). The solution
/// must come from the implicit scheme so that the driver is evaluated at Y_k.
/// n_ge2: the intermediate display with C1, C2 as in the proof (p ≥ 2).
/// n_lt2: ‖N‖_M^p ratio plus the non-negativity of the jump term (p < 2).
EstimateReport check_lemma_intermediate(const BsdeInstance& instance, const SolutionQuadruple& sol, double p,
                                        double alpha, LemmaBranch branch, const ProofParameters& params = {});

/// ‖δZ‖_H + ‖δ(M−K)‖_M against ‖δξ‖ + ‖δY‖_S + ‖δY‖_S^{(p/2)∧(p−1)} + ‖δg(Y¹,Z¹)‖_H1 (empirical).
EstimateReport check_theorem_main2(const BsdeInstance& inst1, const SolutionQuadruple& sol1,
                                   const BsdeInstance& inst2, const SolutionQuadruple& sol2, double p,
                                   double alpha);

enum class ObstacleVariant { s_plus, s };

/// ‖e^{α/2·}Y‖_S^p against the proof's explicit right-hand side. `unconstrained`
/// is the plain solution 𝒴 with the same ξ and g (used by the S⁺ variant).
EstimateReport check_prop_ref(const BsdeInstance& instance, const SolutionQuadruple& sol,
                              const SolutionQuadruple& unconstrained, double p, double alpha,
                              ObstacleVariant variant, const ProofParameters& params = {});

/// Stability part: ‖e^{α/2·}δY‖_S^p against the same assembly applied to
/// (|δξ|, |δS|, |δg(Y¹,Z¹)|).
EstimateReport check_prop_ref_stability(const BsdeInstance& inst1, const SolutionQuadruple& sol1,
                                        const BsdeInstance& inst2, const SolutionQuadruple& sol2, double p,
                                        double alpha, const ProofParameters& params = {});

/// p = 2 stability of reflected solutions. The report is empirical; the
/// details carry the exact path-wise cross-term check ("pathwise_excess", must
/// be ≤ 0) and its Cauchy-Schwarz bound ("cs_lhs" ≤ "cs_rhs").
EstimateReport check_prop_rbsde_p2(const BsdeInstance& inst1, const SolutionQuadruple& sol1,
                                   const BsdeInstance& inst2, const SolutionQuadruple& sol2, double alpha,
                                   double eps = 1.0);

/// Both sides of the p-power Itô inequality for one làdlàg grid path started
/// at grid index `start`. Requires left[k+1] = right[k] (the path is constant
/// between grid points) and right[n] = value[n].
struct ItoPathSides {
    double lhs = 0.0;
    double rhs = 0.0;
    double jump_term = 0.0;  ///< the (non-negative) jump sum
};
ItoPathSides ito_p_path(std::span<const double> times, std::span<const double> left,
                        std::span<const double> value, std::span<const double> right, double p, double alpha,
                        std::size_t start = 0);

/// Path-wise check on every root-to-leaf path and every start index; the
/// report holds the worst path (largest lhs − rhs).
EstimateReport check_ito_p_inequality(const ScenarioTree& tree, const LadlagProcess& x, double p, double alpha);

/// Bracket conventions for ‖N‖_M in the two-sided norm comparison.
enum class BracketConvention {
    /// Σ e^{αt}(ΔN)² with the realized increments.
    discrete,
    /// Σ e^{αt}(‖Z‖² dt + (ΔM − ΔK)²): the bracket with W–(M−K) cross
    /// variation removed, as orthogonality gives in continuous time.
    orthogonal
};

/// Two-sided comparison of ‖N‖ with ‖Z‖ + ‖M−K‖, the bound of ‖M + Z⋆W‖ by
/// ‖N‖ and ‖K‖, and the martingale property of ∫e^{pα/2·}φ_p(Y_−)d(M + Z⋆W).
/// One explicit report; the sub-results are in the details.
EstimateReport check_remark_equiv(const ScenarioTree& tree, const SolutionQuadruple& sol, double p, double alpha,
                                  BracketConvention convention = BracketConvention::orthogonal);

/// ‖N‖_M^p under the chosen bracket convention.
double norm_n(const ScenarioTree& tree, const SolutionQuadruple& sol, double p, double alpha,
              BracketConvention convention);

/// 𝔼[(Σ e^{rate·t_{k+1}} |c_k| dt)^p] for a process c on steps 0..n−1.
double integral_power(const ScenarioTree& tree, const AdaptedProcess& c, double p, double rate);

/// δg(Y¹, Z¹) = g¹(Y¹, Z¹) − g²(Y¹, Z¹) on steps 0..n−1.
AdaptedProcess driver_gap(const BsdeInstance& inst1, const SolutionQuadruple& sol1, const BsdeInstance& inst2);

}  // namespace bsdelab
