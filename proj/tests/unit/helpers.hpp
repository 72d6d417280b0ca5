#pragma once

#include "bsdelab/families.hpp"
#include "bsdelab/tree.hpp"

#include <memory>

namespace bsdelab::testing {

inline std::shared_ptr<const ScenarioTree> tree_of(std::size_t n, std::size_t d = 1, std::vector<RevealSpec> reveals = {},
                                                   double horizon = 1.0) {
    TreeSpec s;
    s.horizon = horizon;
    s.n_steps = n;
    s.dim = d;
    s.reveals = std::move(reveals);
    return make_tree(s);
}

inline RevealSpec coin(double t) {
    return RevealSpec{t, {1.0, -1.0}, {0.5, 0.5}};
}

}  // namespace bsdelab::testing
