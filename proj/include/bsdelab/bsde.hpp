#pragma once

#include "bsdelab/generator.hpp"
#include "bsdelab/process.hpp"

#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

namespace bsdelab {

enum class Scheme { explicit_step, implicit_step };

const char* scheme_name(Scheme s) noexcept;

/// Terminal condition, driver and (for reflected problems) a lower obstacle.
struct BsdeInstance {
    std::shared_ptr<const ScenarioTree> tree;
    std::vector<double> xi;  ///< one value per leaf
    Generator g = Generator::zero();
    std::optional<AdaptedProcess> obstacle;

    const ScenarioTree& grid_tree() const { return *tree; }
    void validate() const;
};

struct SolverDiagnostics {
    double dynamics_residual = 0.0;  ///< max path-wise |Y_k − (Y_{k+1} − g dt − Z·ΔW − ΔM + ΔK)|
    double orthogonality = 0.0;      ///< max |𝔼_node[ΔM ΔW_i]|
    double martingale_defect = 0.0;  ///< max |𝔼_node[ΔM]|
    std::size_t max_inner_iterations = 0;
    double contraction_factor = 0.0;  ///< dt·L_y
};

/// (Y, Z, M, K) with N = Z⋆W + M − K. `driver` holds the value of g actually
/// used on (t_k, t_{k+1}] at each step-k node (step n is unused, left at 0).
struct SolutionQuadruple {
    AdaptedProcess y;
    PredictableProcess z;
    AdaptedProcess m;
    AdaptedProcess k;
    AdaptedProcess n;
    AdaptedProcess driver;
    SolverDiagnostics diagnostics;
};

struct SolveOptions {
    double inner_tol = 1e-13;
    std::size_t max_inner = 200;
};

SolutionQuadruple solve_bsde(const BsdeInstance& instance, Scheme scheme, const SolveOptions& options = {});

/// Closed-form route for affine drivers: discount X_{k+1} = X_k / (1 + λ_k dt),
/// ℚ from the Girsanov density, X_k Y_k = 𝔼^ℚ_k[X_n ξ − Σ_{j≥k} X_{j+1} g0_j dt].
SolutionQuadruple solve_linear_bsde(const BsdeInstance& instance);

/// Component-wise difference a − b, with the total variation of δK.
struct SolutionDiff {
    AdaptedProcess dy;
    PredictableProcess dz;
    AdaptedProcess dm;
    AdaptedProcess dk;
    AdaptedProcess dn;
    AdaptedProcess tv_dk;
};

SolutionDiff solution_diff(const ScenarioTree& tree, const SolutionQuadruple& a, const SolutionQuadruple& b);

/// Zero quadruple on the tree (useful as a neutral element).
SolutionQuadruple zero_solution(const ScenarioTree& tree);

namespace detail {

/// Backward induction shared by the plain and reflected solvers. With an
/// obstacle, Y_k = max(S_k, ỹ_k) and ΔK_{k+1} = Y_k − ỹ_k.
SolutionQuadruple backward_induction(const BsdeInstance& instance, Scheme scheme, const AdaptedProcess* obstacle,
                                     const SolveOptions& options);

/// Fills Z from Y, then M, K-derived N and the dynamics diagnostics. Y, K and
/// driver must already be set.
void complete_solution(const ScenarioTree& tree, SolutionQuadruple& sol);

}  // namespace detail

}  // namespace bsdelab
