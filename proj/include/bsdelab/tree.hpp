#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace bsdelab {

/// Uniform grid 0 = t_0 < ... < t_n = T.
struct TimeGrid {
    double horizon = 1.0;
    std::size_t n_steps = 1;
    double dt = 1.0;
    std::vector<double> times;

    static TimeGrid uniform(double horizon, std::size_t n_steps);

    /// Grid index of `t` if it lies on the grid (relative tolerance 1e-12).
    std::ptrdiff_t index_of(double t) const noexcept;

    bool operator==(const TimeGrid&) const = default;
};

/// Extra discrete information revealed at a grid instant, independent of the
/// Brownian increments. Revealing at a deterministic time makes the
/// compensated label a martingale that jumps at a predictable time.
struct RevealSpec {
    double time = 0.0;
    std::vector<double> values;  ///< numeric value attached to each label
    std::vector<double> law;     ///< label probabilities

    bool operator==(const RevealSpec&) const = default;
};

enum class IncrementScheme { rademacher };

struct TreeConfig {
    TimeGrid grid;
    std::size_t dim = 1;
    IncrementScheme scheme = IncrementScheme::rademacher;
    std::vector<RevealSpec> reveals;
    std::size_t node_cap = std::size_t{1} << 20;
};

/// Finite filtered probability space. Nodes are stored step by step; the
/// children of a node occupy a contiguous block of the next step, blocks in
/// parent order, so every subtree maps to a contiguous range of leaves.
///
/// Immutable after construction.
class ScenarioTree {
public:
    static constexpr std::int32_t no_reveal = -1;

    const TimeGrid& grid() const noexcept { return grid_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t n_steps() const noexcept { return grid_.n_steps; }
    double dt() const noexcept { return grid_.dt; }
    double time(std::size_t step) const noexcept { return grid_.times[step]; }
    const std::vector<RevealSpec>& reveals() const noexcept { return reveals_; }
    std::size_t node_cap() const noexcept { return node_cap_; }

    std::size_t nodes_at(std::size_t step) const noexcept { return steps_[step].prob.size(); }
    std::size_t total_nodes() const noexcept;
    std::size_t leaves() const noexcept { return nodes_at(n_steps()); }

    std::size_t parent(std::size_t step, std::size_t node) const noexcept { return steps_[step].parent[node]; }
    std::size_t first_child(std::size_t step, std::size_t node) const noexcept { return steps_[step].first_child[node]; }
    std::size_t n_children(std::size_t step, std::size_t node) const noexcept { return steps_[step].n_children[node]; }

    /// Conditional probability of the node given its parent (1 at the root).
    double prob(std::size_t step, std::size_t node) const noexcept { return steps_[step].prob[node]; }
    std::span<const double> probs(std::size_t step) const noexcept { return steps_[step].prob; }
    /// Unconditional probability of reaching the node.
    double path_prob(std::size_t step, std::size_t node) const noexcept { return steps_[step].path_prob[node]; }
    std::span<const double> path_probs(std::size_t step) const noexcept { return steps_[step].path_prob; }

    /// Brownian increment that led into the node (zero at the root).
    std::span<const double> dw(std::size_t step, std::size_t node) const noexcept {
        return {steps_[step].dw.data() + node * dim_, dim_};
    }
    /// Brownian level W_{t_step} at the node.
    std::span<const double> w(std::size_t step, std::size_t node) const noexcept {
        return {steps_[step].w.data() + node * dim_, dim_};
    }
    /// Reveal label index carried by the node, or no_reveal.
    std::int32_t reveal(std::size_t step, std::size_t node) const noexcept { return steps_[step].reveal[node]; }
    /// Sum of the values of all labels revealed along the path so far.
    double reveal_sum(std::size_t step, std::size_t node) const noexcept { return steps_[step].reveal_sum[node]; }
    /// Index into reveals() of the reveal happening at `step`, or -1.
    std::ptrdiff_t reveal_index_at(std::size_t step) const noexcept { return reveal_at_step_[step]; }

    /// Weights p_c ΔW_{c,coord} / dt over the nodes of `step` (step >= 1), so
    /// that the projection coefficient of X_{step} on ΔW at a parent is a
    /// weighted sum over its children.
    std::span<const double> projection_weights(std::size_t step, std::size_t coord) const noexcept {
        return {steps_[step].proj.data() + coord * nodes_at(step), nodes_at(step)};
    }

    /// First and one-past-last leaf below the node.
    std::size_t leaf_begin(std::size_t step, std::size_t node) const noexcept { return steps_[step].leaf_begin[node]; }
    std::size_t leaf_end(std::size_t step, std::size_t node) const noexcept { return steps_[step].leaf_end[node]; }

    /// Ancestor of a leaf at `step`.
    std::size_t ancestor(std::size_t leaf, std::size_t step) const noexcept;

    bool operator==(const ScenarioTree& other) const;

private:
    friend ScenarioTree build_tree(const TreeConfig& config);
    friend ScenarioTree deserialize_tree(const std::string& text);

    struct StepData {
        std::vector<std::size_t> parent;
        std::vector<std::size_t> first_child;
        std::vector<std::size_t> n_children;
        std::vector<double> prob;
        std::vector<double> path_prob;
        std::vector<double> dw;
        std::vector<double> w;
        std::vector<std::int32_t> reveal;
        std::vector<double> reveal_sum;
        std::vector<double> proj;
        std::vector<std::size_t> leaf_begin;
        std::vector<std::size_t> leaf_end;

        bool operator==(const StepData&) const = default;
    };

    void finalize();

    TimeGrid grid_;
    std::size_t dim_ = 1;
    std::size_t node_cap_ = std::size_t{1} << 20;
    std::vector<RevealSpec> reveals_;
    std::vector<std::ptrdiff_t> reveal_at_step_;
    std::vector<StepData> steps_;
};

/// Builds the tree of a Rademacher scheme: each Brownian coordinate moves by
/// ±√dt with probability 1/2; at a reveal step every Brownian branch is
/// further split by the reveal label.
ScenarioTree build_tree(const TreeConfig& config);

/// Tolerance-based audit of the tree invariants. Returns the worst defects.
struct TreeAudit {
    double prob_sum_defect = 0.0;
    double dw_mean_defect = 0.0;
    double dw_cov_defect = 0.0;
    double reveal_independence_defect = 0.0;
};
TreeAudit audit_tree(const ScenarioTree& tree);

/// Canonical JSON (version 1). Deserialization validates the invariants.
std::string serialize_tree(const ScenarioTree& tree);
ScenarioTree deserialize_tree(const std::string& text);

}  // namespace bsdelab
