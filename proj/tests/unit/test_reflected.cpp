#include "bsdelab/families.hpp"
#include "bsdelab/reflected.hpp"
#include "helpers.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace bsdelab;
using bsdelab::testing::coin;
using bsdelab::testing::tree_of;

namespace {

BsdeInstance instance(std::shared_ptr<const ScenarioTree> t, std::vector<double> xi, Generator g) {
    BsdeInstance in;
    in.tree = std::move(t);
    in.xi = std::move(xi);
    in.g = std::move(g);
    return in;
}

}  // namespace

TEST(Reflected, NonBindingObstacleMatchesPlainSolver) {
    auto t = tree_of(4, 1, {coin(0.5)});
    auto rng = make_engine({1, 0});
    const auto g = random_generator(*t, DriverFamily::trig, 1.0, rng);
    const auto base = instance(t, random_terminal(*t, TerminalFamily::smooth, 1.0, rng), g);
    const auto refl = make_reflected(base, AdaptedProcess::constant(*t, -1e9));
    for (Scheme s : {Scheme::explicit_step, Scheme::implicit_step}) {
        const auto a = solve_reflected(refl, s);
        const auto b = solve_bsde(base, s);
        EXPECT_EQ(a.y, b.y);
        EXPECT_EQ(a.k, AdaptedProcess::zeros(*t));
    }
}

TEST(Reflected, DecreasingObstacleAlwaysBinds) {
    auto t = tree_of(4);
    const auto s = AdaptedProcess::from_function(*t, [&](std::size_t k, std::size_t) { return 1.0 - t->time(k) * t->time(k); });
    const auto refl = make_reflected(instance(t, std::vector<double>(t->leaves(), 0.0), Generator::zero()), s);
    const auto sol = solve_reflected(refl, Scheme::implicit_step);
    for (std::size_t k = 0; k <= 4; ++k) {
        for (std::size_t i = 0; i < t->nodes_at(k); ++i) {
            EXPECT_NEAR(sol.y(k, i), s(k, i), 1e-15);
            if (k > 0) {
                EXPECT_NEAR(sol.k(k, i) - sol.k(k - 1, t->parent(k, i)), s(k - 1, 0) - s(k, 0), 1e-15);
            }
        }
    }
    EXPECT_LE(std::fabs(check_skorokhod(*t, sol, *refl.obstacle)), 1e-15);
}

TEST(Reflected, MatchesOptimalStopping) {
    auto t = tree_of(3);
    auto rng = make_engine({2, 0});
    for (int rep = 0; rep < 10; ++rep) {
        const auto xi = random_terminal(*t, TerminalFamily::smooth, 1.0, rng);
        const auto s = random_obstacle(*t, ObstacleFamily::random, 1.0, rng);
        const auto refl = make_reflected(instance(t, xi, Generator::zero()), s);
        const auto sol = solve_reflected(refl, Scheme::implicit_step);
        const auto bf = snell_bruteforce(refl, AdaptedProcess::zeros(*t));
        ASSERT_TRUE(bf.enumerated.has_value());
        EXPECT_NEAR(sol.y(0, 0), bf.enumerated->value, 1e-12);
        EXPECT_NEAR(sol.y(0, 0), bf.value(0, 0), 1e-12);
    }
}

TEST(Reflected, SnellRepresentationNonlinear) {
    auto t = tree_of(3, 1, {coin(2.0 / 3.0)});
    auto rng = make_engine({3, 0});
    const auto g = random_generator(*t, DriverFamily::mixed, 1.0, rng);
    const auto xi = random_terminal(*t, TerminalFamily::smooth, 1.0, rng);
    const auto refl = make_reflected(instance(t, xi, g), random_obstacle(*t, ObstacleFamily::random, 1.0, rng));
    for (Scheme s : {Scheme::explicit_step, Scheme::implicit_step}) {
        const auto sol = solve_reflected(refl, s);
        EXPECT_TRUE(verify_snell_representation(refl, sol, s).pass);
    }
}

TEST(Snell, NoObstacleAndBindingObstacle) {
    auto t = tree_of(3);
    auto rng = make_engine({4, 0});
    const auto xi = random_terminal(*t, TerminalFamily::smooth, 1.0, rng);
    StoppingProblem never;
    never.tree = t.get();
    never.stop_payoff = AdaptedProcess::constant(*t, -1e12);
    never.terminal = xi;
    never.running_cost = AdaptedProcess::constant(*t, 0.5);
    const auto dp = snell_dp(never);
    EXPECT_NEAR(dp.value(0, 0), expectation(*t, xi, 3) - 0.5, 1e-14);
    EXPECT_NEAR(snell_enumerate(never).value, dp.value(0, 0), 1e-14);

    StoppingProblem now = never;
    now.stop_payoff = AdaptedProcess::from_function(*t, [](std::size_t k, std::size_t) { return 3.0 - double(k); });
    now.terminal.assign(t->leaves(), 0.0);
    now.running_cost = AdaptedProcess::zeros(*t);
    const auto dp2 = snell_dp(now);
    for (std::size_t k = 0; k < 3; ++k) {
        for (std::size_t i = 0; i < t->nodes_at(k); ++i) {
            EXPECT_EQ(dp2.value(k, i), 3.0 - double(k));
            EXPECT_EQ(dp2.stop(k, i), 1.0);
        }
    }
}

TEST(Snell, StoppingTimeCountAndCap) {
    EXPECT_EQ(count_stopping_times(*tree_of(1)), 2.0);
    EXPECT_EQ(count_stopping_times(*tree_of(2)), 5.0);
    EXPECT_EQ(count_stopping_times(*tree_of(3)), 26.0);
    auto t = tree_of(3);
    StoppingProblem p;
    p.tree = t.get();
    p.stop_payoff = AdaptedProcess::zeros(*t);
    p.terminal.assign(t->leaves(), 0.0);
    p.running_cost = AdaptedProcess::zeros(*t);
    EXPECT_EQ(snell_enumerate(p).stopping_times, 26u);
    EXPECT_THROW(snell_enumerate(p, 0, 0, 10), SizingError);
}

TEST(Skorokhod, HandBuiltViolation) {
    auto t = tree_of(2);
    SolutionQuadruple sol = zero_solution(*t);
    sol.y = AdaptedProcess::constant(*t, 1.0);
    const auto s = AdaptedProcess::zeros(*t);
    EXPECT_EQ(check_skorokhod(*t, sol, s), 0.0);
    for (std::size_t i = 0; i < t->nodes_at(1); ++i) sol.k(1, i) = 0.5;
    for (std::size_t i = 0; i < t->nodes_at(2); ++i) sol.k(2, i) = 0.5;
    EXPECT_NEAR(check_skorokhod(*t, sol, s), 0.5, 1e-15);
}

TEST(Truncation, ClipsTerminalObstacleAndDriver) {
    auto t = tree_of(1);
    auto in = instance(t, {-5.0, 3.0}, Generator::constant(9.0));
    const auto tr = truncate_instance(in, 4.0);
    EXPECT_EQ(tr.xi, (std::vector<double>{-4.0, 3.0}));
    EXPECT_EQ(tr.g(0, 0, 0.0, std::vector<double>{0.0}), 4.0);
    const auto same = truncate_instance(in, 10.0);
    EXPECT_EQ(same.xi, in.xi);
}

TEST(Picard, ConstantDriverOneIteration) {
    auto t = tree_of(3);
    auto rng = make_engine({5, 0});
    const auto xi = random_terminal(*t, TerminalFamily::smooth, 1.0, rng);
    const auto refl = make_reflected(instance(t, xi, Generator::constant(0.3)),
                                     random_obstacle(*t, ObstacleFamily::random, 1.0, rng));
    const auto res = picard_solve(refl, 1.0, 50, 1e-12);
    EXPECT_TRUE(res.trace.converged);
    EXPECT_EQ(res.trace.iterations, 1u);
}

TEST(Picard, LimitMatchesImplicitSolver) {
    auto t = tree_of(4, 1, {coin(0.5)});
    auto rng = make_engine({6, 0});
    const auto g = random_generator(*t, DriverFamily::trig, 1.0, rng);
    const auto refl = make_reflected(instance(t, random_terminal(*t, TerminalFamily::smooth, 1.0, rng), g),
                                     random_obstacle(*t, ObstacleFamily::random, 1.0, rng));
    const double alpha = alpha_star(g.l_y(), g.l_z()) + 0.25;
    const auto res = picard_solve(refl, alpha, 1000, 1e-12);
    ASSERT_TRUE(res.trace.converged);
    EXPECT_LT(res.trace.max_ratio(), 1.0);
    const auto direct = solve_reflected(refl, Scheme::implicit_step);
    for (std::size_t k = 0; k <= 4; ++k)
        for (std::size_t i = 0; i < t->nodes_at(k); ++i) EXPECT_NEAR(res.solution.y(k, i), direct.y(k, i), 1e-9);
}

TEST(Picard, ReportsNonConvergence) {
    auto t = tree_of(4);
    auto rng = make_engine({7, 0});
    const auto g = random_generator(*t, DriverFamily::trig, 2.0, rng);
    const auto refl = make_reflected(instance(t, random_terminal(*t, TerminalFamily::smooth, 1.0, rng), g),
                                     random_obstacle(*t, ObstacleFamily::random, 1.0, rng));
    try {
        picard_solve(refl, 10.0, 1, 1e-300);
        FAIL() << "expected PicardError";
    } catch (const PicardError& e) {
        EXPECT_EQ(e.trace().iterations, 1u);
        EXPECT_FALSE(e.trace().converged);
    }
}
