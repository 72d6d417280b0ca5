#pragma once

#include "bsdelab/tree.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace bsdelab {

/// Real value per (step, node). Measurability with respect to the step's
/// partition is structural: one value per atom.
class AdaptedProcess {
public:
    AdaptedProcess() = default;

    static AdaptedProcess zeros(const ScenarioTree& tree);
    static AdaptedProcess constant(const ScenarioTree& tree, double c);
    /// Fills every node with f(step, node).
    static AdaptedProcess from_function(const ScenarioTree& tree,
                                        const std::function<double(std::size_t, std::size_t)>& f);

    std::size_t n_steps() const noexcept { return values_.empty() ? 0 : values_.size() - 1; }
    double operator()(std::size_t step, std::size_t node) const noexcept { return values_[step][node]; }
    double& operator()(std::size_t step, std::size_t node) noexcept { return values_[step][node]; }
    std::span<const double> at(std::size_t step) const noexcept { return values_[step]; }
    std::span<double> at(std::size_t step) noexcept { return values_[step]; }

    bool same_shape(const ScenarioTree& tree) const noexcept;

    AdaptedProcess& operator+=(const AdaptedProcess& other);
    AdaptedProcess& operator-=(const AdaptedProcess& other);
    AdaptedProcess& operator*=(double c);
    friend AdaptedProcess operator+(AdaptedProcess a, const AdaptedProcess& b) { return a += b; }
    friend AdaptedProcess operator-(AdaptedProcess a, const AdaptedProcess& b) { return a -= b; }
    friend AdaptedProcess operator*(AdaptedProcess a, double c) { return a *= c; }

    bool operator==(const AdaptedProcess&) const = default;

private:
    std::vector<std::vector<double>> values_;
};

/// ℝ^dim-valued process on the intervals (t_{k-1}, t_k], k = 1..n. The value
/// for interval k is 𝓕_{t_{k-1}}-measurable and is stored once per node of
/// step k-1, which makes sibling-constancy exact by construction.
class PredictableProcess {
public:
    PredictableProcess() = default;

    static PredictableProcess zeros(const ScenarioTree& tree, std::size_t dim);
    static PredictableProcess constant(const ScenarioTree& tree, std::span<const double> value);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t n_steps() const noexcept { return values_.size(); }

    /// Value on interval k (1-based) at the step-(k-1) node `parent`.
    std::span<const double> at(std::size_t k, std::size_t parent) const noexcept {
        return {values_[k - 1].data() + parent * dim_, dim_};
    }
    std::span<double> at(std::size_t k, std::size_t parent) noexcept {
        return {values_[k - 1].data() + parent * dim_, dim_};
    }
    /// Value seen from a node of step k (looks up its parent).
    std::span<const double> at_node(const ScenarioTree& tree, std::size_t k, std::size_t node) const noexcept {
        return at(k, tree.parent(k, node));
    }

    bool operator==(const PredictableProcess&) const = default;

private:
    std::size_t dim_ = 1;
    std::vector<std::vector<double>> values_;
};

/// Làdlàg process on the grid: (left limit, value, right limit) per node.
/// For the embedding of a càdlàg process, left(k) = value(k-1) and right = value.
struct LadlagProcess {
    AdaptedProcess left;
    AdaptedProcess value;
    AdaptedProcess right;

    static LadlagProcess from_cadlag(const ScenarioTree& tree, const AdaptedProcess& x);
};

/// 𝔼[X_{step+1} | 𝓕_{t_step}] at every node of `step`.
std::vector<double> conditional_expectation(const ScenarioTree& tree, std::span<const double> next_values,
                                            std::size_t step);
/// Same as above for one node.
double conditional_expectation_at(const ScenarioTree& tree, std::span<const double> next_values,
                                  std::size_t step, std::size_t node);

/// 𝔼[X_step] as a path-probability-weighted sum over the nodes of `step`.
double expectation(const ScenarioTree& tree, std::span<const double> values, std::size_t step);

/// Projection coefficient 𝔼_node[X_{step+1} ΔW_{step+1}] / dt written into `out` (size dim).
void projection_on_increment(const ScenarioTree& tree, std::span<const double> next_values, std::size_t step,
                             std::size_t node, std::span<double> out);

/// Pushes a per-node accumulator forward along every path: acc at a node is
/// update(step, node, acc at parent) (root: update(0, 0, init)). Returns the
/// leaf accumulators, in leaf order.
std::vector<double> accumulate_paths(const ScenarioTree& tree, double init,
                                     const std::function<double(std::size_t, std::size_t, double)>& update);

/// 𝔼[f(leaf accumulator)] for a vector produced by accumulate_paths.
double leaf_expectation(const ScenarioTree& tree, std::span<const double> leaf_values,
                        const std::function<double(double)>& f);

}  // namespace bsdelab
