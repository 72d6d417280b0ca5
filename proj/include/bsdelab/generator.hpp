#pragma once

#include "bsdelab/process.hpp"
#include "bsdelab/random.hpp"

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bsdelab {

/// g(t_k, node, y, z) = g0 + λ y + η·z with node-wise coefficients.
struct AffineCoefficients {
    AdaptedProcess g0;
    AdaptedProcess lambda;
    std::vector<AdaptedProcess> eta;  ///< one process per Brownian coordinate
};

/// g0 as a function of the path: c + w_coef·ΣW_t + reveal_coef·(revealed labels so far).
struct DriftSpec {
    double constant = 0.0;
    double w_coef = 0.0;
    double reveal_coef = 0.0;

    AdaptedProcess realize(const ScenarioTree& tree) const;
};

/// Driver with declared Lipschitz constants (L_y, L_z). Cheap to copy.
class Generator {
public:
    using Fn = std::function<double(std::size_t step, std::size_t node, double y, std::span<const double> z)>;

    Generator(std::string kind, Fn fn, double l_y, double l_z, bool depends_on_solution = true);

    double operator()(std::size_t step, std::size_t node, double y, std::span<const double> z) const {
        return (*fn_)(step, node, y, z);
    }

    const std::string& kind() const noexcept { return kind_; }
    double l_y() const noexcept { return l_y_; }
    double l_z() const noexcept { return l_z_; }
    bool depends_on_solution() const noexcept { return depends_on_solution_; }
    const AffineCoefficients* affine() const noexcept { return affine_ ? affine_.get() : nullptr; }

    /// g(·, ·, 0, 0) on every node.
    AdaptedProcess g0(const ScenarioTree& tree) const;

    /// (−n) ∨ g ∧ n; keeps the Lipschitz constants.
    Generator clipped(double n) const;

    static Generator zero();
    static Generator constant(double c);
    static Generator affine(AffineCoefficients coefficients);
    /// Constant-coefficient affine driver g0(path) + λ y + η·z.
    static Generator affine(const ScenarioTree& tree, const DriftSpec& g0, double lambda, std::vector<double> eta);
    /// Ignores (y, z): g = costs(step, node).
    static Generator frozen(AdaptedProcess costs);
    /// g0 + Σ_j a_j clamp(y, −R, R)^j + b·Σ_i clamp(z_i, −R, R).
    static Generator clipped_polynomial(const ScenarioTree& tree, const DriftSpec& g0, std::vector<double> coeffs,
                                        double radius, double z_coef);
    /// g0 + a sin(y) + b Σ_i cos(z_i) + c ‖z‖.
    static Generator lipschitz_trig(const ScenarioTree& tree, const DriftSpec& g0, double a, double b, double c);
    /// Node-wise table of g0 plus constant λ, η.
    static Generator table(AdaptedProcess g0, double lambda, std::vector<double> eta);

private:
    std::string kind_;
    std::shared_ptr<const Fn> fn_;
    double l_y_ = 0.0;
    double l_z_ = 0.0;
    bool depends_on_solution_ = true;
    std::shared_ptr<const AffineCoefficients> affine_;
};

struct LipschitzProbe {
    double worst_excess = 0.0;  ///< max of |Δg| − (L_y|Δy| + L_z‖Δz‖)
    std::size_t probes = 0;
    bool pass = true;
};

/// Randomized falsification of the declared Lipschitz constants.
LipschitzProbe probe_lipschitz(const ScenarioTree& tree, const Generator& g, RandomSeed seed,
                               std::size_t n_probes = 64, double radius = 10.0);

}  // namespace bsdelab
