#include "bsdelab/estimates.hpp"
#include "bsdelab/families.hpp"
#include "bsdelab/reflected.hpp"
#include "helpers.hpp"

#include <gtest/gtest.h>

#include <algorithm>
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

BsdeInstance random_reflected(std::shared_ptr<const ScenarioTree> t, std::uint64_t seed) {
    FamilySpec spec;
    spec.seed = {seed, 0};
    return make_instance(spec, std::move(t), 0);
}

}  // namespace

TEST(ItoP, ZeroPath) {
    const std::vector<double> times{0.0, 0.5, 1.0}, zero(3, 0.0);
    const auto s = ito_p_path(times, zero, zero, zero, 1.5, 1.0);
    EXPECT_EQ(s.lhs, 0.0);
    EXPECT_EQ(s.rhs, 0.0);
}

TEST(ItoP, SingleJumpByHand) {
    // X = 1 on [0, 1), jumps to 3 at t = 1. At p = 2, α = 0 the inequality is
    // the identity 3² = 1² + 2·1·(3 − 1) + (3 − 1)² minus nothing, so lhs = rhs = 1.
    const std::vector<double> times{0.0, 1.0};
    const std::vector<double> left{1.0, 1.0}, value{1.0, 3.0}, right{1.0, 3.0};
    const auto s = ito_p_path(times, left, value, right, 2.0, 0.0);
    EXPECT_DOUBLE_EQ(s.lhs, 1.0);
    EXPECT_DOUBLE_EQ(s.rhs, 1.0);
    EXPECT_DOUBLE_EQ(s.jump_term, 4.0);
    // p = 1.5: jump term (3/8)·4·3^{-1/2}, integral φ(1)·2 = 2.
    const auto q = ito_p_path(times, left, value, right, 1.5, 0.0);
    const double jumps = 0.375 * 4.0 / std::sqrt(3.0);
    EXPECT_NEAR(q.jump_term, jumps, 1e-15);
    EXPECT_NEAR(q.rhs, std::pow(3.0, 1.5) - 1.5 * 2.0 - jumps, 1e-14);
    EXPECT_LE(q.lhs, q.rhs);
}

TEST(ItoP, RandomPaths) {
    auto t = tree_of(4, 1, {coin(0.5)});
    auto rng = make_engine({1, 0});
    for (int j = 0; j < 20; ++j) {
        const auto x = random_ladlag_semimartingale(*t, rng);
        for (double p : {1.2, 1.5, 1.9}) EXPECT_TRUE(check_ito_p_inequality(*t, x, p, 0.7).pass);
    }
}

TEST(Estimates, ZeroSolutionIsVacuous) {
    auto t = tree_of(3);
    const auto in = instance(t, std::vector<double>(t->leaves(), 0.0), Generator::zero());
    const auto sol = solve_bsde(in, Scheme::implicit_step);
    const auto r = check_theorem_main1(in, sol, 2.0, 0.0);
    EXPECT_TRUE(r.pass);
    EXPECT_TRUE(r.vacuous);
    EXPECT_EQ(r.tier, CheckTier::empirical);
    const auto rem = check_remark_equiv(*t, sol, 2.0, 0.0);
    EXPECT_TRUE(rem.pass);
    const auto lem = check_lemma_intermediate(in, sol, 2.0, 0.0, LemmaBranch::k_bound);
    EXPECT_TRUE(lem.pass);
    EXPECT_EQ(lem.lhs, 0.0);
}

TEST(Estimates, Main1FiniteRatio) {
    auto t = tree_of(4);
    auto rng = make_engine({2, 0});
    const auto in = instance(t, random_terminal(*t, TerminalFamily::smooth, 1.0, rng), Generator::zero());
    const auto r = check_theorem_main1(in, solve_bsde(in, Scheme::implicit_step), 2.0, 0.0);
    EXPECT_TRUE(r.pass);
    EXPECT_TRUE(std::isfinite(r.ratio));
    EXPECT_GT(r.ratio, 0.0);
}

TEST(Estimates, Main2SelfAndShift) {
    auto t = tree_of(4, 1, {coin(0.5)});
    const auto in = random_reflected(t, 3);
    const auto sol = solve_reflected(in, Scheme::implicit_step);
    const auto same = check_theorem_main2(in, sol, in, sol, 2.0, 1.0);
    EXPECT_EQ(same.lhs, 0.0);
    EXPECT_TRUE(same.pass);

    auto rng = make_engine({3, 1});
    const auto base = instance(t, random_terminal(*t, TerminalFamily::smooth, 1.0, rng), Generator::zero());
    auto shifted = base;
    for (auto& v : shifted.xi) v += 0.5;
    const auto a = solve_bsde(base, Scheme::implicit_step);
    const auto b = solve_bsde(shifted, Scheme::implicit_step);
    const auto r = check_theorem_main2(base, a, shifted, b, 2.0, 1.0);
    EXPECT_NEAR(r.lhs, 0.0, 1e-20);
}

TEST(Estimates, IntermediateBranches) {
    auto t = tree_of(4, 1, {coin(0.5)});
    for (std::uint64_t seed = 10; seed < 16; ++seed) {
        const auto in = random_reflected(t, seed);
        const auto sol = solve_reflected(in, Scheme::implicit_step);
        // α must exceed both α* and 2L_y + pL_z²/(2β) with the default β = p(p−1)/4.
        const auto alpha_for = [&](double p) {
            const double beta = ProofParameters{}.beta_for(p);
            return std::max(alpha_star(in.g.l_y(), in.g.l_z()),
                            2.0 * in.g.l_y() + p * in.g.l_z() * in.g.l_z() / (2.0 * beta)) + 0.25;
        };
        EXPECT_TRUE(check_lemma_intermediate(in, sol, 2.0, alpha_for(2.0), LemmaBranch::k_bound).pass);
        EXPECT_TRUE(check_lemma_intermediate(in, sol, 2.0, alpha_for(2.0), LemmaBranch::n_ge2).pass);
        const auto lt2 = check_lemma_intermediate(in, sol, 1.5, alpha_for(1.5), LemmaBranch::n_lt2);
        EXPECT_TRUE(lt2.pass);
    }
}

TEST(Estimates, NormEquivalenceWithoutReflection) {
    auto t = tree_of(4, 2);
    auto rng = make_engine({4, 0});
    const auto g = random_generator(*t, DriverFamily::affine, 1.0, rng);
    const auto in = instance(t, random_terminal(*t, TerminalFamily::smooth, 1.0, rng), g);
    const auto sol = solve_bsde(in, Scheme::implicit_step);
    for (double p : {1.5, 2.0, 3.0}) EXPECT_TRUE(check_remark_equiv(*t, sol, p, 0.5).pass);
    // Without K both bracket conventions coincide at p = 2 up to the W cross term.
    EXPECT_GE(norm_n(*t, sol, 2.0, 0.0, BracketConvention::orthogonal), 0.0);
}

TEST(Estimates, ReflectedBoundsOnRandomFamily) {
    auto t = tree_of(4, 1, {coin(0.5)});
    for (std::uint64_t seed = 20; seed < 24; ++seed) {
        const auto in = random_reflected(t, seed);
        const auto sol = solve_reflected(in, Scheme::implicit_step);
        BsdeInstance plain = in;
        plain.obstacle.reset();
        const auto unconstrained = solve_bsde(plain, Scheme::implicit_step);
        const double alpha = alpha_star(in.g.l_y(), in.g.l_z()) + 0.25;
        for (auto v : {ObstacleVariant::s_plus, ObstacleVariant::s}) {
            EXPECT_TRUE(check_prop_ref(in, sol, unconstrained, 2.0, alpha, v).pass);
        }
        const auto other = random_reflected(t, seed + 100);
        const auto sol2 = solve_reflected(other, Scheme::implicit_step);
        const auto r = check_prop_rbsde_p2(in, sol, other, sol2, alpha);
        EXPECT_TRUE(r.pass);
        EXPECT_LE(r.detail("pathwise_excess"), 1e-12);
        EXPECT_LE(r.detail("cs_lhs"), r.detail("cs_rhs") * (1 + 1e-12) + 1e-15);
        const auto self = check_prop_rbsde_p2(in, sol, in, sol, alpha);
        EXPECT_EQ(self.lhs, 0.0);
    }
}

TEST(Estimates, ReportFactories) {
    const auto e = EstimateReport::make_explicit("x", 1.0, 1.0 + 1e-12, 2.0);
    EXPECT_TRUE(e.pass);
    EXPECT_FALSE(EstimateReport::make_explicit("x", 2.0, 1.0, 2.0).pass);
    const auto v = EstimateReport::make_empirical("y", 0.0, 0.0);
    EXPECT_TRUE(v.vacuous);
    EXPECT_TRUE(v.pass);
    EXPECT_EQ(v.ratio, 0.0);
}
