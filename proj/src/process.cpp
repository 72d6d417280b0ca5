#include "bsdelab/process.hpp"

#include "bsdelab/errors.hpp"
#include "bsdelab/kernels.hpp"

#include <algorithm>
#include <string>

namespace bsdelab {

AdaptedProcess AdaptedProcess::zeros(const ScenarioTree& tree) {
    return constant(tree, 0.0);
}

AdaptedProcess AdaptedProcess::constant(const ScenarioTree& tree, double c) {
    AdaptedProcess p;
    p.values_.resize(tree.n_steps() + 1);
    for (std::size_t k = 0; k <= tree.n_steps(); ++k) {
        p.values_[k].assign(tree.nodes_at(k), c);
    }
    return p;
}

AdaptedProcess AdaptedProcess::from_function(const ScenarioTree& tree,
                                             const std::function<double(std::size_t, std::size_t)>& f) {
    AdaptedProcess p = zeros(tree);
    for (std::size_t k = 0; k <= tree.n_steps(); ++k) {
        for (std::size_t i = 0; i < tree.nodes_at(k); ++i) {
            p.values_[k][i] = f(k, i);
        }
    }
    return p;
}

bool AdaptedProcess::same_shape(const ScenarioTree& tree) const noexcept {
    if (values_.size() != tree.n_steps() + 1) {
        return false;
    }
    for (std::size_t k = 0; k <= tree.n_steps(); ++k) {
        if (values_[k].size() != tree.nodes_at(k)) {
            return false;
        }
    }
    return true;
}

namespace {

void require_same_shape(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
    if (a.size() != b.size()) {
        throw PreconditionError("adapted processes live on different trees");
    }
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k].size() != b[k].size()) {
            throw PreconditionError("adapted processes live on different trees");
        }
    }
}

}  // namespace

AdaptedProcess& AdaptedProcess::operator+=(const AdaptedProcess& other) {
    require_same_shape(values_, other.values_);
    for (std::size_t k = 0; k < values_.size(); ++k) {
        for (std::size_t i = 0; i < values_[k].size(); ++i) {
            values_[k][i] += other.values_[k][i];
        }
    }
    return *this;
}

AdaptedProcess& AdaptedProcess::operator-=(const AdaptedProcess& other) {
    require_same_shape(values_, other.values_);
    for (std::size_t k = 0; k < values_.size(); ++k) {
        for (std::size_t i = 0; i < values_[k].size(); ++i) {
            values_[k][i] -= other.values_[k][i];
        }
    }
    return *this;
}

AdaptedProcess& AdaptedProcess::operator*=(double c) {
    for (auto& row : values_) {
        for (double& v : row) {
            v *= c;
        }
    }
    return *this;
}

PredictableProcess PredictableProcess::zeros(const ScenarioTree& tree, std::size_t dim) {
    PredictableProcess p;
    p.dim_ = dim;
    p.values_.resize(tree.n_steps());
    for (std::size_t k = 1; k <= tree.n_steps(); ++k) {
        p.values_[k - 1].assign(tree.nodes_at(k - 1) * dim, 0.0);
    }
    return p;
}

PredictableProcess PredictableProcess::constant(const ScenarioTree& tree, std::span<const double> value) {
    PredictableProcess p = zeros(tree, value.size());
    for (std::size_t k = 1; k <= tree.n_steps(); ++k) {
        for (std::size_t i = 0; i < tree.nodes_at(k - 1); ++i) {
            std::copy(value.begin(), value.end(), p.at(k, i).begin());
        }
    }
    return p;
}

LadlagProcess LadlagProcess::from_cadlag(const ScenarioTree& tree, const AdaptedProcess& x) {
    LadlagProcess out{x, x, x};
    for (std::size_t k = 1; k <= tree.n_steps(); ++k) {
        for (std::size_t i = 0; i < tree.nodes_at(k); ++i) {
            out.left(k, i) = x(k - 1, tree.parent(k, i));
        }
    }
    return out;
}

double conditional_expectation_at(const ScenarioTree& tree, std::span<const double> next_values, std::size_t step,
                                  std::size_t node) {
    const std::size_t c0 = tree.first_child(step, node);
    const std::size_t nc = tree.n_children(step, node);
    return kernels::weighted_sum(tree.probs(step + 1).subspan(c0, nc), next_values.subspan(c0, nc));
}

std::vector<double> conditional_expectation(const ScenarioTree& tree, std::span<const double> next_values,
                                            std::size_t step) {
    if (step >= tree.n_steps()) {
        throw PreconditionError("conditional expectation: step " + std::to_string(step) + " out of range [0, " +
                                std::to_string(tree.n_steps()) + ")");
    }
    if (next_values.size() != tree.nodes_at(step + 1)) {
        throw PreconditionError("conditional expectation: values do not cover step " + std::to_string(step + 1));
    }
    std::vector<double> out(tree.nodes_at(step));
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = conditional_expectation_at(tree, next_values, step, i);
    }
    return out;
}

double expectation(const ScenarioTree& tree, std::span<const double> values, std::size_t step) {
    if (step > tree.n_steps() || values.size() != tree.nodes_at(step)) {
        throw PreconditionError("expectation: values do not match step " + std::to_string(step));
    }
    return kernels::weighted_sum(tree.path_probs(step), values);
}

void projection_on_increment(const ScenarioTree& tree, std::span<const double> next_values, std::size_t step,
                             std::size_t node, std::span<double> out) {
    const std::size_t c0 = tree.first_child(step, node);
    const std::size_t nc = tree.n_children(step, node);
    for (std::size_t j = 0; j < tree.dim(); ++j) {
        out[j] = kernels::weighted_sum(tree.projection_weights(step + 1, j).subspan(c0, nc),
                                       next_values.subspan(c0, nc));
    }
}

std::vector<double> accumulate_paths(const ScenarioTree& tree, double init,
                                     const std::function<double(std::size_t, std::size_t, double)>& update) {
    std::vector<double> acc{update(0, 0, init)};
    for (std::size_t k = 1; k <= tree.n_steps(); ++k) {
        std::vector<double> next(tree.nodes_at(k));
        for (std::size_t i = 0; i < next.size(); ++i) {
            next[i] = update(k, i, acc[tree.parent(k, i)]);
        }
        acc = std::move(next);
    }
    return acc;
}

double leaf_expectation(const ScenarioTree& tree, std::span<const double> leaf_values,
                        const std::function<double(double)>& f) {
    std::vector<double> mapped(leaf_values.size());
    std::transform(leaf_values.begin(), leaf_values.end(), mapped.begin(), f);
    return kernels::weighted_sum(tree.path_probs(tree.n_steps()), mapped);
}

}  // namespace bsdelab
