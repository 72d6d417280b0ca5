#pragma once

#include "bsdelab/errors.hpp"
#include "bsdelab/estimate_report.hpp"
#include "bsdelab/process.hpp"

#include <cstddef>
#include <string>

namespace bsdelab {

/// Raised when a process expected to be a martingale is not.
class MartingaleDefectError : public PreconditionError {
public:
    MartingaleDefectError(const std::string& what, std::size_t step, std::size_t node, double defect)
        : PreconditionError(what), step_(step), node_(node), defect_(defect) {}

    std::size_t step() const noexcept { return step_; }
    std::size_t node() const noexcept { return node_; }
    double defect() const noexcept { return defect_; }

private:
    std::size_t step_;
    std::size_t node_;
    double defect_;
};

/// N = N_0 + Z⋆W + M with M orthogonal to W.
struct RepresentationPair {
    PredictableProcess z;
    AdaptedProcess m;
    double residual_orthogonality = 0.0;  ///< max |𝔼_node[ΔM ΔW_i]|
    double martingale_defect = 0.0;       ///< max |𝔼_node[ΔM]|
};

/// Worst |𝔼_node[X_{k+1}] − X_k| over the tree, with its location.
struct MartingaleDefect {
    double defect = 0.0;
    std::size_t step = 0;
    std::size_t node = 0;
};
MartingaleDefect martingale_defect(const ScenarioTree& tree, const AdaptedProcess& x);

RepresentationPair represent_martingale(const ScenarioTree& tree, const AdaptedProcess& n, double tol = 1e-12);

/// Largest |N − (N_0 + Z⋆W + M)| over all nodes.
double reconstruction_defect(const ScenarioTree& tree, const AdaptedProcess& n, const RepresentationPair& rep);

/// (Z⋆W)_k = Σ_{j≤k} Z_j·ΔW_j.
AdaptedProcess stochastic_integral(const ScenarioTree& tree, const PredictableProcess& z);

/// X = M − A with M_0 = X_0, A_0 = 0 and A predictable.
struct DoobDecomposition {
    AdaptedProcess m;
    AdaptedProcess a;
};

DoobDecomposition doob_decompose(const ScenarioTree& tree, const AdaptedProcess& x, bool supermartingale = false,
                                 double tol = 1e-12);

/// Làdlàg strong supermartingale X = X_0 + M − A − I, every component stored
/// as a triple so that the identity can be checked slot by slot.
///
/// Grid embedding of a triple (L, V, R): at t_k the path jumps from L_k to V_k
/// (predictable jump) and from V_k to R_k (right jump); on (t_k, t_{k+1}) it
/// moves monotonically from R_k to L_{k+1}, which is 𝓕_{t_k}-measurable.
struct MertensDecomposition {
    LadlagProcess m;
    LadlagProcess a;
    LadlagProcess i;
};

/// Conditions: L_{k+1} sibling-constant, V_k ≥ R_k, R_k ≥ L_{k+1} ≥ 𝔼_k[V_{k+1}], R_n = V_n.
void check_strong_supermartingale(const ScenarioTree& tree, const LadlagProcess& x, double tol = 1e-12);

MertensDecomposition mertens_decompose(const ScenarioTree& tree, const LadlagProcess& x, double tol = 1e-12);

/// Largest slot-wise |X − (X_0 + M − A − I)|.
double mertens_identity_defect(const ScenarioTree& tree, const LadlagProcess& x, const MertensDecomposition& dec);

/// I^{ε,n}: sum of the first n right jumps X_t − X_{t+} ≥ ε along each path,
/// left-continuous (value slot excludes the jump at the same instant).
LadlagProcess exhaust_jumps(const ScenarioTree& tree, const LadlagProcess& x, double eps, std::size_t n_max);

/// ‖A‖_𝕀^p + ‖I‖_𝕀^p ≤ C ‖X‖_𝕊^p (norms, not powers). The right-continuous
/// constant is used when X has no right jumps, the làdlàg one otherwise.
EstimateReport meyer_bound_check(const ScenarioTree& tree, const LadlagProcess& x, double p);

/// Density D_k = Π_{j≤k} (1 − η_j·ΔW_j).
struct MeasureChange {
    PredictableProcess eta;
    AdaptedProcess density;
};

MeasureChange girsanov_change(const ScenarioTree& tree, const PredictableProcess& eta);

/// 𝔼^ℚ[X_{step+1} | 𝓕_step] at every node of `step`.
std::vector<double> conditional_expectation_q(const ScenarioTree& tree, const MeasureChange& q,
                                              std::span<const double> next_values, std::size_t step);

/// Largest |𝔼^ℚ_node[ΔX]| over the tree.
double q_martingale_defect(const ScenarioTree& tree, const MeasureChange& q, const AdaptedProcess& x);

/// W^ℚ_k = W_k + Σ_{j≤k} η_j dt, coordinate `coord`.
AdaptedProcess q_brownian(const ScenarioTree& tree, const MeasureChange& q, std::size_t coord);

}  // namespace bsdelab
