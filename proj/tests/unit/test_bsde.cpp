#include "bsdelab/bsde.hpp"
#include "bsdelab/families.hpp"
#include "bsdelab/martingale.hpp"
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

std::vector<double> terminal_w(const ScenarioTree& t) {
    std::vector<double> xi(t.leaves());
    for (std::size_t i = 0; i < xi.size(); ++i) xi[i] = t.w(t.n_steps(), i)[0];
    return xi;
}

}  // namespace

TEST(Bsde, ZeroDriverIsConditionalExpectation) {
    auto t = tree_of(3, 1, {coin(2.0 / 3.0)});
    auto rng = make_engine({1, 0});
    auto xi = random_terminal(*t, TerminalFamily::smooth, 1.0, rng);
    const auto sol = solve_bsde(instance(t, xi, Generator::zero()), Scheme::implicit_step);
    EXPECT_LE(martingale_defect(*t, sol.y).defect, 1e-14);
    EXPECT_LE(sol.diagnostics.orthogonality, 1e-13);
    EXPECT_LE(sol.diagnostics.dynamics_residual, 1e-12);
    EXPECT_NEAR(sol.y(0, 0), expectation(*t, xi, 3), 1e-14);
}

TEST(Bsde, ConstantDriver) {
    auto t = tree_of(5);
    for (Scheme s : {Scheme::explicit_step, Scheme::implicit_step}) {
        const auto sol = solve_bsde(instance(t, std::vector<double>(t->leaves(), 0.0), Generator::constant(2.0)), s);
        for (std::size_t k = 0; k <= 5; ++k) EXPECT_NEAR(sol.y(k, 0), -2.0 * (1.0 - t->time(k)), 1e-14);
    }
}

TEST(Bsde, LinearDriverDiscreteExponential) {
    const double lambda = 0.7;
    auto t = tree_of(6);
    const std::vector<double> ones(t->leaves(), 1.0);
    const auto g = Generator::affine(*t, DriftSpec{}, lambda, {0.0});
    const auto imp = solve_bsde(instance(t, ones, g), Scheme::implicit_step);
    EXPECT_NEAR(imp.y(0, 0), std::pow(1.0 + lambda * t->dt(), -6.0), 1e-14);
    const auto exp = solve_bsde(instance(t, ones, g), Scheme::explicit_step);
    EXPECT_NEAR(exp.y(0, 0), std::pow(1.0 - lambda * t->dt(), 6.0), 1e-14);
    const auto closed = solve_linear_bsde(instance(t, ones, g));
    EXPECT_NEAR(closed.y(0, 0), imp.y(0, 0), 1e-14);
}

TEST(Bsde, LinearDriverConvergesToExponential) {
    const double lambda = -1.0;
    double prev_err = 0.0;
    for (std::size_t n : {2u, 4u, 8u, 16u}) {
        auto t = tree_of(n);
        const auto g = Generator::affine(*t, DriftSpec{}, lambda, {0.0});
        const auto sol = solve_bsde(instance(t, std::vector<double>(t->leaves(), 1.0), g), Scheme::implicit_step);
        const double err = std::fabs(sol.y(0, 0) - std::exp(-lambda));
        EXPECT_LE(err, 3.0 * t->dt());
        if (prev_err > 0.0) EXPECT_LT(err, prev_err);
        prev_err = err;
    }
}

TEST(Bsde, GirsanovDrift) {
    const double eta = 0.4;
    auto t = tree_of(5);
    const auto g = Generator::affine(*t, DriftSpec{}, 0.0, {eta});
    const auto sol = solve_bsde(instance(t, terminal_w(*t), g), Scheme::implicit_step);
    EXPECT_NEAR(sol.y(0, 0), -eta * 1.0, 1e-14);
    const auto closed = solve_linear_bsde(instance(t, terminal_w(*t), g));
    EXPECT_NEAR(closed.y(0, 0), -eta, 1e-13);
}

TEST(Bsde, NonlinearImplicitDiagnostics) {
    auto t = tree_of(4, 2, {coin(0.5)});
    auto rng = make_engine({2, 0});
    for (auto fam : {DriverFamily::polynomial, DriverFamily::trig, DriverFamily::affine}) {
        const auto g = random_generator(*t, fam, 2.0, rng);
        const auto xi = random_terminal(*t, TerminalFamily::smooth, 1.0, rng);
        for (Scheme s : {Scheme::explicit_step, Scheme::implicit_step}) {
            const auto sol = solve_bsde(instance(t, xi, g), s);
            EXPECT_LE(sol.diagnostics.dynamics_residual, 1e-10);
            EXPECT_LE(sol.diagnostics.orthogonality, 1e-12);
            EXPECT_LE(sol.diagnostics.martingale_defect, 1e-12);
        }
    }
}

TEST(Bsde, SolutionDiffUnderShift) {
    auto t = tree_of(3, 1, {coin(1.0 / 3.0)});
    auto rng = make_engine({3, 0});
    auto xi = random_terminal(*t, TerminalFamily::smooth, 1.0, rng);
    auto shifted = xi;
    for (auto& v : shifted) v += 0.75;
    const auto a = solve_bsde(instance(t, shifted, Generator::zero()), Scheme::implicit_step);
    const auto b = solve_bsde(instance(t, xi, Generator::zero()), Scheme::implicit_step);
    const auto d = solution_diff(*t, a, b);
    for (std::size_t k = 0; k <= 3; ++k) {
        for (std::size_t i = 0; i < t->nodes_at(k); ++i) {
            EXPECT_NEAR(d.dy(k, i), 0.75, 1e-14);
            EXPECT_NEAR(d.dm(k, i), 0.0, 1e-14);
            EXPECT_NEAR(d.dk(k, i), 0.0, 1e-14);
        }
    }
    const auto self = solution_diff(*t, a, a);
    EXPECT_EQ(self.dy, AdaptedProcess::zeros(*t));
    const auto vs_zero = solution_diff(*t, a, zero_solution(*t));
    EXPECT_EQ(vs_zero.dy, a.y);
}

TEST(Bsde, InvalidInstanceRejected) {
    auto t = tree_of(2);
    EXPECT_THROW(solve_bsde(instance(t, {1.0}, Generator::zero()), Scheme::implicit_step), PreconditionError);
}

TEST(Generator, LipschitzProbeAndClip) {
    auto t = tree_of(3, 2);
    auto rng = make_engine({4, 0});
    for (auto fam : {DriverFamily::affine, DriverFamily::polynomial, DriverFamily::trig, DriverFamily::mixed}) {
        const auto g = random_generator(*t, fam, 1.5, rng);
        EXPECT_LE(g.l_y(), 1.5);
        EXPECT_LE(g.l_z(), 1.5);
        EXPECT_TRUE(probe_lipschitz(*t, g, {4, 1}).pass) << g.kind();
        const auto c = g.clipped(0.1);
        const std::vector<double> z{100.0, -100.0};
        EXPECT_LE(std::fabs(c(1, 0, 50.0, z)), 0.1);
    }
    const Generator liar("liar", [](std::size_t, std::size_t, double y, std::span<const double>) { return 5.0 * y; },
                         1.0, 0.0);
    EXPECT_FALSE(probe_lipschitz(*t, liar, {4, 2}).pass);
}
