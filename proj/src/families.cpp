#include "bsdelab/families.hpp"

#include "bsdelab/errors.hpp"
#include "bsdelab/reflected.hpp"

#include <algorithm>
#include <cmath>

namespace bsdelab {

TreeConfig TreeSpec::config() const {
    TreeConfig c;
    c.grid = TimeGrid::uniform(horizon, n_steps);
    c.dim = dim;
    c.reveals = reveals;
    c.node_cap = node_cap;
    return c;
}

std::shared_ptr<const ScenarioTree> make_tree(const TreeSpec& spec) {
    return std::make_shared<const ScenarioTree>(build_tree(spec.config()));
}

DriverFamily parse_driver_family(const std::string& s) {
    if (s == "zero") return DriverFamily::zero;
    if (s == "constant") return DriverFamily::constant;
    if (s == "affine") return DriverFamily::affine;
    if (s == "polynomial") return DriverFamily::polynomial;
    if (s == "trig") return DriverFamily::trig;
    if (s == "mixed") return DriverFamily::mixed;
    throw ConfigError("unknown driver family '" + s + "'");
}

TerminalFamily parse_terminal_family(const std::string& s) {
    if (s == "smooth") return TerminalFamily::smooth;
    if (s == "lognormal") return TerminalFamily::lognormal;
    throw ConfigError("unknown terminal family '" + s + "'");
}

ObstacleFamily parse_obstacle_family(const std::string& s) {
    if (s == "none") return ObstacleFamily::none;
    if (s == "random") return ObstacleFamily::random;
    if (s == "decreasing") return ObstacleFamily::decreasing;
    if (s == "very_negative") return ObstacleFamily::very_negative;
    throw ConfigError("unknown obstacle family '" + s + "'");
}

const char* family_name(DriverFamily f) noexcept {
    switch (f) {
        case DriverFamily::zero: return "zero";
        case DriverFamily::constant: return "constant";
        case DriverFamily::affine: return "affine";
        case DriverFamily::polynomial: return "polynomial";
        case DriverFamily::trig: return "trig";
        case DriverFamily::mixed: return "mixed";
    }
    return "?";
}

const char* family_name(TerminalFamily f) noexcept {
    return f == TerminalFamily::smooth ? "smooth" : "lognormal";
}

const char* family_name(ObstacleFamily f) noexcept {
    switch (f) {
        case ObstacleFamily::none: return "none";
        case ObstacleFamily::random: return "random";
        case ObstacleFamily::decreasing: return "decreasing";
        case ObstacleFamily::very_negative: return "very_negative";
    }
    return "?";
}

namespace {

DriftSpec random_drift(std::mt19937_64& rng) {
    return {uniform(rng, -1.0, 1.0), uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5)};
}

/// z-coefficients whose absolute sum stays below 0.9·bound, so the
/// linearized η keeps every Girsanov factor positive on dt ≤ 1.
std::vector<double> random_z_coefs(std::size_t dim, double bound, std::mt19937_64& rng) {
    std::vector<double> eta(dim);
    const double each = 0.9 * bound / static_cast<double>(dim);
    for (double& e : eta) {
        e = uniform(rng, -each, each);
    }
    return eta;
}

}  // namespace

Generator random_generator(const ScenarioTree& tree, DriverFamily family, double lipschitz, std::mt19937_64& rng) {
    if (lipschitz < 0.0) {
        throw PreconditionError("random_generator: lipschitz bound must be non-negative");
    }
    if (family == DriverFamily::mixed) {
        const auto pick = static_cast<int>(uniform(rng, 0.0, 3.0));
        family = pick == 0 ? DriverFamily::affine : pick == 1 ? DriverFamily::polynomial : DriverFamily::trig;
    }
    const std::size_t d = tree.dim();
    switch (family) {
        case DriverFamily::zero: return Generator::zero();
        case DriverFamily::constant: return Generator::constant(uniform(rng, -1.0, 1.0));
        case DriverFamily::affine: {
            const DriftSpec g0 = random_drift(rng);
            const double lambda = uniform(rng, -lipschitz, lipschitz);
            return Generator::affine(tree, g0, lambda, random_z_coefs(d, lipschitz, rng));
        }
        case DriverFamily::polynomial: {
            // a1 y + a2 clamp(y)^2 with |a1| + 2|a2|R ≤ L.
            const double radius = 2.0;
            const double a1 = uniform(rng, -0.5, 0.5) * lipschitz;
            const double a2 = uniform(rng, -0.5, 0.5) * lipschitz / (2.0 * radius);
            const double zc = uniform(rng, -0.9, 0.9) * lipschitz / static_cast<double>(d);
            return Generator::clipped_polynomial(tree, random_drift(rng), {0.0, a1, a2}, radius, zc);
        }
        case DriverFamily::trig: {
            const double a = uniform(rng, -lipschitz, lipschitz);
            const double budget = 0.9 * lipschitz / static_cast<double>(d);
            const double b = uniform(rng, -0.5, 0.5) * budget;
            const double c = uniform(rng, 0.0, 0.5) * budget;
            return Generator::lipschitz_trig(tree, random_drift(rng), a, b, c);
        }
        case DriverFamily::mixed: break;
    }
    throw PreconditionError("random_generator: unreachable family");
}

std::vector<double> random_terminal(const ScenarioTree& tree, TerminalFamily family, double scale,
                                    std::mt19937_64& rng) {
    const std::size_t n = tree.n_steps();
    std::vector<double> xi(tree.leaves());
    if (family == TerminalFamily::smooth) {
        const double a = uniform(rng, -1.0, 1.0);
        const double b = uniform(rng, -1.0, 1.0);
        const double c = uniform(rng, -1.0, 1.0);
        for (std::size_t l = 0; l < xi.size(); ++l) {
            double w = 0.0;
            for (double v : tree.w(n, l)) {
                w += v;
            }
            xi[l] = scale * (a * w + b * std::sin(2.0 * w) + c * tree.reveal_sum(n, l) + uniform(rng, -0.25, 0.25));
        }
    } else {
        const double sigma = uniform(rng, 1.5, 2.5);
        for (std::size_t l = 0; l < xi.size(); ++l) {
            double w = 0.0;
            for (double v : tree.w(n, l)) {
                w += v;
            }
            xi[l] = scale * std::exp(sigma * w + uniform(rng, -0.5, 0.5));
        }
    }
    return xi;
}

AdaptedProcess random_obstacle(const ScenarioTree& tree, ObstacleFamily family, double scale,
                               std::mt19937_64& rng) {
    const std::size_t n = tree.n_steps();
    switch (family) {
        case ObstacleFamily::none:
        case ObstacleFamily::very_negative: return AdaptedProcess::constant(tree, -1e9);
        case ObstacleFamily::decreasing: {
            const double top = uniform(rng, 0.5, 1.5) * scale;
            const double slope = uniform(rng, 0.5, 1.5) * scale;
            return AdaptedProcess::from_function(tree, [&](std::size_t k, std::size_t) {
                return top - slope * tree.time(k);
            });
        }
        case ObstacleFamily::random: {
            const double a = uniform(rng, -1.0, 1.0);
            const double level = uniform(rng, -0.5, 0.5);
            AdaptedProcess s = AdaptedProcess::zeros(tree);
            for (std::size_t k = 0; k <= n; ++k) {
                for (std::size_t i = 0; i < tree.nodes_at(k); ++i) {
                    double w = 0.0;
                    for (double v : tree.w(k, i)) {
                        w += v;
                    }
                    s(k, i) = scale * (level + a * w + uniform(rng, -0.5, 0.5));
                }
            }
            return s;
        }
    }
    throw PreconditionError("random_obstacle: unreachable family");
}

BsdeInstance make_instance(const FamilySpec& spec, std::shared_ptr<const ScenarioTree> tree, std::size_t index) {
    auto rng = make_engine(spec.seed.substream(index));
    BsdeInstance inst;
    inst.tree = tree;
    inst.g = random_generator(*tree, spec.driver, spec.lipschitz, rng);
    inst.xi = random_terminal(*tree, spec.terminal, spec.scale, rng);
    if (spec.obstacle == ObstacleFamily::none) {
        return inst;
    }
    AdaptedProcess s = random_obstacle(*tree, spec.obstacle, spec.scale, rng);
    if (spec.obstacle == ObstacleFamily::decreasing) {
        // Obstacle always binding: ξ = S_T.
        const std::size_t n = tree->n_steps();
        for (std::size_t l = 0; l < tree->leaves(); ++l) {
            inst.xi[l] = s(n, l);
        }
    }
    return make_reflected(std::move(inst), std::move(s));
}

AdaptedProcess random_martingale(const ScenarioTree& tree, std::mt19937_64& rng, double scale) {
    const std::size_t n = tree.n_steps();
    AdaptedProcess m = AdaptedProcess::zeros(tree);
    for (double& v : m.at(n)) {
        v = scale * uniform(rng, -1.0, 1.0);
    }
    for (std::size_t k = n; k-- > 0;) {
        const auto ce = conditional_expectation(tree, m.at(k + 1), k);
        std::copy(ce.begin(), ce.end(), m.at(k).begin());
    }
    return m;
}

PredictableProcess random_eta(const ScenarioTree& tree, std::mt19937_64& rng, double bound) {
    const std::size_t d = tree.dim();
    const double cap = std::min(bound, 0.9 / (std::sqrt(tree.dt()) * static_cast<double>(d)));
    PredictableProcess eta = PredictableProcess::zeros(tree, d);
    for (std::size_t k = 1; k <= tree.n_steps(); ++k) {
        for (std::size_t i = 0; i < tree.nodes_at(k - 1); ++i) {
            for (double& v : eta.at(k, i)) {
                v = uniform(rng, -cap, cap);
            }
        }
    }
    return eta;
}

LadlagProcess random_strong_supermartingale(const ScenarioTree& tree, std::mt19937_64& rng, bool right_jumps) {
    const std::size_t n = tree.n_steps();
    LadlagProcess x{AdaptedProcess::zeros(tree), AdaptedProcess::zeros(tree), AdaptedProcess::zeros(tree)};
    x.value(0, 0) = uniform(rng, -2.0, 2.0);
    x.left(0, 0) = x.value(0, 0);
    const auto right_of = [&](std::size_t k, std::size_t i) {
        const bool jump = right_jumps && k < n && uniform(rng, 0.0, 1.0) < 0.5;
        x.right(k, i) = x.value(k, i) - (jump ? uniform(rng, 0.0, 0.5) : 0.0);
    };
    right_of(0, 0);
    std::vector<double> noise;
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < tree.nodes_at(k); ++i) {
            // Drain on (t_k, t_{k+1}), predictable jump drain at t_{k+1}, centered noise.
            const double drift = uniform(rng, 0.0, 0.3) * tree.dt();
            const double jump_drain = uniform(rng, 0.0, 1.0) < 0.3 ? uniform(rng, 0.0, 0.3) : 0.0;
            const std::size_t c0 = tree.first_child(k, i);
            const std::size_t nc = tree.n_children(k, i);
            noise.assign(nc, 0.0);
            double m = 0.0;
            for (std::size_t c = 0; c < nc; ++c) {
                noise[c] = uniform(rng, -1.0, 1.0) * std::sqrt(tree.dt());
                m += tree.prob(k + 1, c0 + c) * noise[c];
            }
            for (std::size_t c = 0; c < nc; ++c) {
                const std::size_t child = c0 + c;
                x.left(k + 1, child) = x.right(k, i) - drift;
                x.value(k + 1, child) = x.left(k + 1, child) - jump_drain + (noise[c] - m);
                right_of(k + 1, child);
            }
        }
    }
    return x;
}

LadlagProcess random_ladlag_semimartingale(const ScenarioTree& tree, std::mt19937_64& rng) {
    const std::size_t n = tree.n_steps();
    LadlagProcess x{AdaptedProcess::zeros(tree), AdaptedProcess::zeros(tree), AdaptedProcess::zeros(tree)};
    const auto draw = [&]() { return uniform(rng, 0.0, 1.0) < 0.1 ? 0.0 : uniform(rng, -2.0, 2.0); };
    for (std::size_t k = 0; k <= n; ++k) {
        for (std::size_t i = 0; i < tree.nodes_at(k); ++i) {
            x.value(k, i) = draw();
            x.right(k, i) = k == n ? x.value(k, i) : draw();
            x.left(k, i) = k == 0 ? x.value(k, i) : x.right(k - 1, tree.parent(k, i));
        }
    }
    return x;
}

}  // namespace bsdelab
