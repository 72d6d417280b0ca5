#include "bsdelab/reflected.hpp"

#include "bsdelab/norms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace bsdelab {

BsdeInstance make_reflected(BsdeInstance base, AdaptedProcess obstacle) {
    base.validate();
    if (!obstacle.same_shape(*base.tree)) {
        throw PreconditionError("obstacle does not match the tree");
    }
    const std::size_t n = base.tree->n_steps();
    for (std::size_t i = 0; i < base.tree->leaves(); ++i) {
        obstacle(n, i) = std::min(obstacle(n, i), base.xi[i]);
    }
    base.obstacle = std::move(obstacle);
    return base;
}

SolutionQuadruple solve_reflected(const BsdeInstance& instance, Scheme scheme, const SolveOptions& options) {
    if (!instance.obstacle) {
        throw PreconditionError("solve_reflected needs an obstacle");
    }
    return detail::backward_induction(instance, scheme, &*instance.obstacle, options);
}

double check_skorokhod(const ScenarioTree& tree, const SolutionQuadruple& sol, const AdaptedProcess& obstacle) {
    const auto leaf = accumulate_paths(tree, 0.0, [&](std::size_t k, std::size_t i, double acc) {
        if (k == 0) {
            return acc;
        }
        const std::size_t par = tree.parent(k, i);
        return acc + (sol.y(k - 1, par) - obstacle(k - 1, par)) * (sol.k(k, i) - sol.k(k - 1, par));
    });
    return leaf_expectation(tree, leaf, [](double v) { return v; });
}

namespace {

double child_weight(const StoppingProblem& pb, std::size_t k, std::size_t parent, std::size_t c) {
    const ScenarioTree& tree = *pb.tree;
    double w = tree.prob(k + 1, c);
    if (pb.measure) {
        const auto eta = pb.measure->eta.at(k + 1, parent);
        const auto dw = tree.dw(k + 1, c);
        double s = 0.0;
        for (std::size_t j = 0; j < eta.size(); ++j) {
            s += eta[j] * dw[j];
        }
        w *= 1.0 - s;
    }
    return w;
}

void validate_problem(const StoppingProblem& pb) {
    if (pb.tree == nullptr) {
        throw PreconditionError("stopping problem has no tree");
    }
    if (!pb.stop_payoff.same_shape(*pb.tree) || !pb.running_cost.same_shape(*pb.tree) ||
        pb.terminal.size() != pb.tree->leaves()) {
        throw PreconditionError("stopping problem data does not match the tree");
    }
}

std::vector<double> enumerate_values(const StoppingProblem& pb, std::size_t k, std::size_t i, std::size_t cap) {
    const ScenarioTree& tree = *pb.tree;
    if (k == tree.n_steps()) {
        return {pb.terminal[i]};
    }
    std::vector<double> acc{-pb.running_cost(k, i) * tree.dt()};
    const std::size_t c0 = tree.first_child(k, i);
    for (std::size_t c = c0; c < c0 + tree.n_children(k, i); ++c) {
        const auto vals = enumerate_values(pb, k + 1, c, cap);
        if (static_cast<double>(acc.size()) * static_cast<double>(vals.size()) + 1.0 > static_cast<double>(cap)) {
            std::ostringstream os;
            os << "stopping-time enumeration exceeds the cap of " << cap;
            throw SizingError(os.str());
        }
        const double w = child_weight(pb, k, i, c);
        std::vector<double> next;
        next.reserve(acc.size() * vals.size());
        for (double a : acc) {
            for (double v : vals) {
                next.push_back(a + w * v);
            }
        }
        acc = std::move(next);
    }
    acc.push_back(pb.stop_payoff(k, i));
    return acc;
}

}  // namespace

SnellDp snell_dp(const StoppingProblem& pb) {
    validate_problem(pb);
    const ScenarioTree& tree = *pb.tree;
    const std::size_t n = tree.n_steps();
    SnellDp out{AdaptedProcess::zeros(tree), AdaptedProcess::zeros(tree)};
    for (std::size_t i = 0; i < tree.leaves(); ++i) {
        out.value(n, i) = pb.terminal[i];
        out.stop(n, i) = 1.0;
    }
    for (std::size_t k = n; k-- > 0;) {
        for (std::size_t i = 0; i < tree.nodes_at(k); ++i) {
            const std::size_t c0 = tree.first_child(k, i);
            double cont = 0.0;
            for (std::size_t c = c0; c < c0 + tree.n_children(k, i); ++c) {
                cont += child_weight(pb, k, i, c) * out.value(k + 1, c);
            }
            cont -= pb.running_cost(k, i) * tree.dt();
            const double s = pb.stop_payoff(k, i);
            const bool stop = s >= cont;
            out.value(k, i) = stop ? s : cont;
            out.stop(k, i) = stop ? 1.0 : 0.0;
        }
    }
    return out;
}

SnellEnumeration snell_enumerate(const StoppingProblem& pb, std::size_t step, std::size_t node, std::size_t cap) {
    validate_problem(pb);
    const auto values = enumerate_values(pb, step, node, cap);
    return {*std::max_element(values.begin(), values.end()), values.size()};
}

double count_stopping_times(const ScenarioTree& tree) {
    std::vector<double> next(tree.leaves(), 1.0);
    for (std::size_t k = tree.n_steps(); k-- > 0;) {
        std::vector<double> cur(tree.nodes_at(k), 1.0);
        for (std::size_t i = 0; i < cur.size(); ++i) {
            double prod = 1.0;
            const std::size_t c0 = tree.first_child(k, i);
            for (std::size_t c = c0; c < c0 + tree.n_children(k, i); ++c) {
                prod *= next[c];
            }
            cur[i] = 1.0 + prod;
        }
        next = std::move(cur);
    }
    return next[0];
}

namespace {

AdaptedProcess obstacle_or_minus_infinity(const BsdeInstance& instance) {
    if (instance.obstacle) {
        return *instance.obstacle;
    }
    return AdaptedProcess::constant(*instance.tree, -std::numeric_limits<double>::infinity());
}

}  // namespace

SnellResult snell_bruteforce(const BsdeInstance& instance, const AdaptedProcess& frozen_costs,
                             const SnellOptions& options) {
    instance.validate();
    const ScenarioTree& tree = *instance.tree;
    if (tree.n_steps() > options.max_dp_depth) {
        std::ostringstream os;
        os << "snell_bruteforce: depth " << tree.n_steps() << " exceeds the cap of " << options.max_dp_depth;
        throw SizingError(os.str());
    }
    StoppingProblem pb{&tree, obstacle_or_minus_infinity(instance), instance.xi, frozen_costs, nullptr};
    auto dp = snell_dp(pb);
    SnellResult out{std::move(dp.value), std::move(dp.stop), std::nullopt};
    if (tree.n_steps() <= options.max_enum_depth) {
        out.enumerated = snell_enumerate(pb, 0, 0, options.enum_cap);
    }
    return out;
}

EstimateReport verify_snell_representation(const BsdeInstance& instance, const SolutionQuadruple& sol, Scheme scheme,
                                           const SnellOptions& options) {
    instance.validate();
    const ScenarioTree& tree = *instance.tree;
    const std::size_t n = tree.n_steps();
    const std::size_t d = tree.dim();
    const double dt = tree.dt();
    double scale = 1.0;
    for (std::size_t k = 0; k <= n; ++k) {
        for (double v : sol.y.at(k)) {
            scale = std::max(scale, std::fabs(v));
        }
    }

    // (a) frozen costs: the driver values the solver used.
    const auto snell = snell_bruteforce(instance, sol.driver, options);
    double defect_a = 0.0;
    for (std::size_t k = 0; k <= n; ++k) {
        for (std::size_t i = 0; i < tree.nodes_at(k); ++i) {
            defect_a = std::max(defect_a, std::fabs(snell.value(k, i) - sol.y(k, i)));
        }
    }
    double defect_enum = 0.0;
    if (snell.enumerated) {
        defect_enum = std::fabs(snell.enumerated->value - sol.y(0, 0));
    }

    // (b) discounted problem under ℚ with difference-quotient linearization.
    double defect_b = 0.0;
    double max_lambda = 0.0;
    double max_eta = 0.0;
    const bool with_b = scheme == Scheme::implicit_step;
    if (with_b) {
        const Generator& g = instance.g;
        AdaptedProcess g0 = AdaptedProcess::zeros(tree);
        AdaptedProcess lambda = AdaptedProcess::zeros(tree);
        PredictableProcess eta = PredictableProcess::zeros(tree, d);
        std::vector<double> zpart(d);
        std::vector<double> zero(d, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            for (std::size_t i = 0; i < tree.nodes_at(k); ++i) {
                const auto z = sol.z.at(k + 1, i);
                const double y = sol.y(k, i);
                const double g_used = sol.driver(k, i);
                const double g_0z = g(k, i, 0.0, z);
                lambda(k, i) = std::fabs(y) > 1e-12 ? (g_used - g_0z) / y : 0.0;
                // Telescoping over coordinates: g(0, z) − g(0, 0) = Σ_j η_j z_j.
                std::fill(zpart.begin(), zpart.end(), 0.0);
                double prev = g(k, i, 0.0, zero);
                g0(k, i) = prev;
                double rest = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    zpart[j] = z[j];
                    const double cur = g(k, i, 0.0, zpart);
                    if (std::fabs(z[j]) > 1e-12) {
                        eta.at(k + 1, i)[j] = (cur - prev) / z[j];
                    } else {
                        rest += cur - prev;
                    }
                    prev = cur;
                }
                // Coordinates too small to divide by keep their (tiny) contribution in g0.
                g0(k, i) += rest;
                if (std::fabs(y) <= 1e-12) {
                    g0(k, i) += g_used - g_0z;
                }
                max_lambda = std::max(max_lambda, std::fabs(lambda(k, i)));
                for (double e : eta.at(k + 1, i)) {
                    max_eta = std::max(max_eta, std::fabs(e));
                }
            }
        }
        const MeasureChange q = girsanov_change(tree, eta);
        AdaptedProcess disc = AdaptedProcess::constant(tree, 1.0);
        AdaptedProcess running = AdaptedProcess::zeros(tree);
        for (std::size_t k = 0; k < n; ++k) {
            for (std::size_t i = 0; i < tree.nodes_at(k); ++i) {
                const double next = disc(k, i) / (1.0 + lambda(k, i) * dt);
                running(k, i) = next * g0(k, i);
                const std::size_t c0 = tree.first_child(k, i);
                for (std::size_t c = c0; c < c0 + tree.n_children(k, i); ++c) {
                    disc(k + 1, c) = next;
                }
            }
        }
        AdaptedProcess stop = obstacle_or_minus_infinity(instance);
        for (std::size_t k = 0; k <= n; ++k) {
            for (std::size_t i = 0; i < tree.nodes_at(k); ++i) {
                stop(k, i) *= disc(k, i);
            }
        }
        std::vector<double> terminal(tree.leaves());
        for (std::size_t l = 0; l < tree.leaves(); ++l) {
            terminal[l] = disc(n, l) * instance.xi[l];
        }
        StoppingProblem pb{&tree, std::move(stop), std::move(terminal), std::move(running), &q};
        const auto dp = snell_dp(pb);
        for (std::size_t k = 0; k <= n; ++k) {
            for (std::size_t i = 0; i < tree.nodes_at(k); ++i) {
                defect_b = std::max(defect_b, std::fabs(dp.value(k, i) - disc(k, i) * sol.y(k, i)));
            }
        }
    }
    const double tol = 1e-10 * scale;
    auto rep = EstimateReport::make_explicit("snell_representation", std::max({defect_a, defect_b, defect_enum}), tol,
                                             0.0, 0.0);
    rep.with("defect_frozen_costs", defect_a).with("defect_enumeration", defect_enum);
    rep.with("defect_discounted", defect_b).with("discounted_checked", with_b ? 1.0 : 0.0);
    rep.with("max_abs_lambda", max_lambda).with("max_abs_eta", max_eta);
    if (snell.enumerated) {
        rep.with("stopping_times", static_cast<double>(snell.enumerated->stopping_times));
    }
    return rep;
}

double alpha_star(double l_y, double l_z, double eps, double eta) {
    if (!(eps > 0.0) || !(eta > 0.0) || !(eta < 1.0)) {
        throw PreconditionError("alpha_star: needs eps > 0 and eta in (0, 1)");
    }
    return 1.0 / eps + 2.0 * l_y + l_z * l_z / eta;
}

double PicardTrace::max_ratio() const {
    double m = 0.0;
    for (std::size_t s = 1; s < steps.size(); ++s) {
        m = std::max(m, steps[s].ratio);
    }
    return m;
}

PicardResult picard_solve(const BsdeInstance& instance, double alpha, std::size_t max_iter, double tol,
                          bool keep_iterates) {
    instance.validate();
    if (!instance.obstacle) {
        throw PreconditionError("picard_solve needs an obstacle");
    }
    const ScenarioTree& tree = *instance.tree;
    const std::size_t n = tree.n_steps();
    PicardTrace trace;
    trace.alpha = alpha;

    auto iterate = [&](const SolutionQuadruple& prev) {
        AdaptedProcess costs = AdaptedProcess::zeros(tree);
        for (std::size_t k = 0; k < n; ++k) {
            for (std::size_t i = 0; i < tree.nodes_at(k); ++i) {
                costs(k, i) = instance.g(k, i, prev.y(k, i), prev.z.at(k + 1, i));
            }
        }
        BsdeInstance frozen = instance;
        frozen.g = Generator::frozen(std::move(costs));
        return solve_reflected(frozen, Scheme::explicit_step);
    };

    SolutionQuadruple current = iterate(zero_solution(tree));
    if (keep_iterates) {
        trace.iterates.push_back(current);
    }
    for (std::size_t it = 1; it <= max_iter; ++it) {
        SolutionQuadruple next = iterate(current);
        const SolutionDiff diff = solution_diff(tree, next, current);
        const AdaptedProcess dl = diff.dm - diff.dk;
        PicardStep step;
        const double dz = std::sqrt(norm_h(tree, diff.dz, 2.0, alpha));
        step.dist_l = std::sqrt(norm_sp(tree, dl, 2.0));
        step.dist_stop = std::sqrt(norm_sp(tree, diff.dy, 2.0)) + dz;
        step.dist_weighted = std::sqrt(norm_h1(tree, diff.dy, 2.0, alpha)) + dz;
        step.dist_full = std::sqrt(norm_sp(tree, diff.dy, 2.0, alpha)) + dz + step.dist_l;
        if (!trace.steps.empty()) {
            const auto& prev = trace.steps.back();
            step.ratio = prev.dist_weighted > 0.0 ? step.dist_weighted / prev.dist_weighted : 0.0;
            step.ratio_stop = prev.dist_stop > 0.0 ? step.dist_stop / prev.dist_stop : 0.0;
        }
        trace.steps.push_back(step);
        if (keep_iterates) {
            trace.iterates.push_back(next);
        }
        current = std::move(next);
        if (step.dist_stop <= tol) {
            trace.iterations = it;
            trace.converged = true;
            return {std::move(current), std::move(trace)};
        }
    }
    trace.iterations = max_iter;
    std::ostringstream os;
    os << "Picard iteration did not reach " << tol << " within " << max_iter << " iterations";
    throw PicardError(os.str(), std::move(trace));
}

BsdeInstance truncate_instance(const BsdeInstance& instance, double level) {
    if (!(level > 0.0)) {
        throw PreconditionError("truncation level must be positive");
    }
    instance.validate();
    BsdeInstance out = instance;
    for (double& v : out.xi) {
        v = std::clamp(v, -level, level);
    }
    if (out.obstacle) {
        for (std::size_t k = 0; k <= out.tree->n_steps(); ++k) {
            for (double& v : out.obstacle->at(k)) {
                v = std::clamp(v, -level, level);
            }
        }
    }
    out.g = instance.g.clipped(level);
    return out;
}

}  // namespace bsdelab
