#pragma once

// Seeded instance families. Every draw depends only on (seed, stream, index),
// so a family member can be regenerated on its own.

#include "bsdelab/bsde.hpp"
#include "bsdelab/process.hpp"
#include "bsdelab/random.hpp"
#include "bsdelab/tree.hpp"

#include <cstddef>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace bsdelab {

struct TreeSpec {
    double horizon = 1.0;
    std::size_t n_steps = 4;
    std::size_t dim = 1;
    std::vector<RevealSpec> reveals;
    std::size_t node_cap = std::size_t{1} << 20;

    TreeConfig config() const;
};

std::shared_ptr<const ScenarioTree> make_tree(const TreeSpec& spec);

enum class DriverFamily { zero, constant, affine, polynomial, trig, mixed };
enum class TerminalFamily { smooth, lognormal };
enum class ObstacleFamily { none, random, decreasing, very_negative };

DriverFamily parse_driver_family(const std::string& s);
TerminalFamily parse_terminal_family(const std::string& s);
ObstacleFamily parse_obstacle_family(const std::string& s);
const char* family_name(DriverFamily f) noexcept;
const char* family_name(TerminalFamily f) noexcept;
const char* family_name(ObstacleFamily f) noexcept;

struct FamilySpec {
    DriverFamily driver = DriverFamily::mixed;
    TerminalFamily terminal = TerminalFamily::smooth;
    ObstacleFamily obstacle = ObstacleFamily::random;
    double lipschitz = 1.0;  ///< upper bound for L_y and L_z
    double scale = 1.0;      ///< magnitude of ξ and S
    RandomSeed seed{};
};

/// Driver drawn from the family. Its declared constants never exceed `lipschitz`.
Generator random_generator(const ScenarioTree& tree, DriverFamily family, double lipschitz, std::mt19937_64& rng);

/// Terminal values per leaf. `smooth`: a W_T + b sin(W_T) + c·reveals + noise;
/// `lognormal`: exp(σ W_T + noise), heavy-tailed at fine resolution.
std::vector<double> random_terminal(const ScenarioTree& tree, TerminalFamily family, double scale,
                                    std::mt19937_64& rng);

/// Obstacle process (before the terminal clip S_n ≤ ξ).
AdaptedProcess random_obstacle(const ScenarioTree& tree, ObstacleFamily family, double scale,
                               std::mt19937_64& rng);

/// Member `index` of the family on `tree`; reflected when the family has an obstacle.
BsdeInstance make_instance(const FamilySpec& spec, std::shared_ptr<const ScenarioTree> tree, std::size_t index);

/// Martingale 𝔼_k[N_n] for random leaf values.
AdaptedProcess random_martingale(const ScenarioTree& tree, std::mt19937_64& rng, double scale = 1.0);

/// Predictable η with ‖η_k‖_1 √dt ≤ 0.9 and |η_j| ≤ bound.
PredictableProcess random_eta(const ScenarioTree& tree, std::mt19937_64& rng, double bound);

/// Random làdlàg strong supermartingale: martingale noise minus a predictable
/// non-decreasing drain; with `right_jumps`, also adapted downward right jumps.
LadlagProcess random_strong_supermartingale(const ScenarioTree& tree, std::mt19937_64& rng, bool right_jumps);

/// Random grid path with L_{k+1} = R_k and R_n = V_n, for the p-power Itô check.
LadlagProcess random_ladlag_semimartingale(const ScenarioTree& tree, std::mt19937_64& rng);

}  // namespace bsdelab
