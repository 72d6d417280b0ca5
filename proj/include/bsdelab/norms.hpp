#pragma once

// Weighted norms of tree processes and the explicit constants used by the
// estimates. Every norm_* function returns the p-th power of the norm.
//
// Discretization conventions (piecewise-constant càdlàg embedding):
//   ‖Y‖_S^p   = 𝔼[sup_k (e^{r t'_k}|Y_k|)^p], t'_k = t_{min(k+1,n)} (sup of the embedded path)
//   ‖Z‖_H^p   = 𝔼[(Σ_{k=1..n} e^{α t_k} ‖Z_k‖² dt)^{p/2}],  Z_k on (t_{k-1}, t_k]
//   ‖X‖_H1^p  = 𝔼[(Σ_{k=0..n-1} e^{α t_{k+1}} X_k² dt)^{p/2}]
//   ‖M‖_M^p   = 𝔼[(Σ_{k=1..n} e^{α t_k} (ΔM_k)²)^{p/2}]
//   ‖K‖_I^p   = 𝔼[(Σ_{k=1..n} e^{α t_k / 2} |ΔK_k|)^p]

#include "bsdelab/process.hpp"

#include <span>
#include <vector>

namespace bsdelab {

struct NormConfig {
    double p = 2.0;
    double alpha = 0.0;

    void validate() const;
};

double norm_lp(const ScenarioTree& tree, std::span<const double> terminal, double p);
double norm_sp(const ScenarioTree& tree, const AdaptedProcess& y, double p, double weight_rate = 0.0);
double norm_sp_ladlag(const ScenarioTree& tree, const LadlagProcess& x, double p);
double norm_h(const ScenarioTree& tree, const PredictableProcess& z, double p, double alpha);
double norm_h1(const ScenarioTree& tree, const AdaptedProcess& x, double p, double alpha);
double norm_m(const ScenarioTree& tree, const AdaptedProcess& m, double p, double alpha);
double norm_i(const ScenarioTree& tree, const AdaptedProcess& k, double p, double alpha);

/// Weighted 𝕊^p norm of a process given directly by its sup functional.
struct NormReport {
    double s_p = 0.0;
    double h_p_alpha = 0.0;
    double h1_p_alpha = 0.0;
    double m_p_alpha = 0.0;
    double i_p_alpha = 0.0;
};

NormReport norm_report(const ScenarioTree& tree, const AdaptedProcess& y, const PredictableProcess& z,
                       const AdaptedProcess& m, const AdaptedProcess& k, const NormConfig& cfg);

/// φ_p(y) = |y|^{p-1} sgn(y), φ_p(0) = 0.
double phi_p(double y, double p);

struct PowerSumBounds {
    double lower = 0.0;
    double middle = 0.0;
    double upper = 0.0;
};

/// ((1∧n^{ℓ-1}) Σ a_i^ℓ, (Σ a_i)^ℓ, (1∨n^{ℓ-1}) Σ a_i^ℓ) for positive a_i.
PowerSumBounds power_sum_bounds(std::span<const double> values, double ell);

struct YoungBound {
    double lhs = 0.0;
    double rhs = 0.0;
};

/// ab ≤ β a^p + b^q / (q (βp)^{q/p}), q = p/(p-1).
YoungBound young_bound(double a, double b, double beta, double p);

/// (max(p/2, p/(p-2) - 1))^p for p > 2, 2 at p = 2.
double burkholder_constant(double p);
/// Alternative reading ((p/2 ∨ p/(p-2)) - 1)^p for p > 2, 2 at p = 2; reported alongside.
double burkholder_constant_alt(double p);

/// C'_p: min over integer 2 ≤ k < p of (p Π_{j=2..k} pj/(p-j))^{k/(p-1)} for p > 2,
/// (p²/(p-1))^{1/(p-1)} for p in (1, 2].
double c_prime(double p);
/// Meyer constant for right-continuous strong supermartingales: C'_p (1 + p/(p-1)).
double meyer_constant(double p);
/// Làdlàg case: C'_p (1 + p/(p-1)) (1 + C''_p), C''_p = C'_p (1 + p/(p-1)).
double ladlag_meyer_constant(double p);

struct ConstantsTable {
    double p = 2.0;
    double c_star = 0.0;        ///< 0 when p < 2 (undefined there)
    double c_star_alt = 0.0;
    double c_prime = 0.0;
    double meyer = 0.0;
    double ladlag_meyer = 0.0;

    static ConstantsTable for_exponent(double p);
};

/// (1 ∧ n^{ℓ-1}) and (1 ∨ n^{ℓ-1}).
double power_lower_factor(double n, double ell);
double power_upper_factor(double n, double ell);

}  // namespace bsdelab
