#include "bsdelab/martingale.hpp"
#include "bsdelab/norms.hpp"
#include "helpers.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace bsdelab;
using bsdelab::testing::tree_of;

TEST(Constants, AtTwo) {
    EXPECT_DOUBLE_EQ(c_prime(2.0), 4.0);
    EXPECT_DOUBLE_EQ(meyer_constant(2.0), 12.0);
    EXPECT_DOUBLE_EQ(ladlag_meyer_constant(2.0), 156.0);
    EXPECT_DOUBLE_EQ(burkholder_constant(2.0), 2.0);
    const auto table = ConstantsTable::for_exponent(2.0);
    EXPECT_DOUBLE_EQ(table.c_star, 2.0);
    EXPECT_DOUBLE_EQ(table.meyer, 12.0);
}

TEST(Constants, Burkholder) {
    EXPECT_DOUBLE_EQ(burkholder_constant(3.0), 8.0);
    EXPECT_DOUBLE_EQ(burkholder_constant(4.0), 16.0);
    EXPECT_EQ(ConstantsTable::for_exponent(1.5).c_star, 0.0);
}

TEST(Constants, BurkholderNumericCheck) {
    // 𝔼[sup |M|^p] ≤ C 𝔼[[M]^{p/2}] on simulated ±1 walks, p = 3.
    auto t = tree_of(10);
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const double p = 3.0;
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> leaf(t->leaves());
        for (auto& v : leaf) v = u(rng) * (rep + 1);
        AdaptedProcess m = AdaptedProcess::zeros(*t);
        for (std::size_t i = 0; i < leaf.size(); ++i) m(10, i) = leaf[i];
        for (std::size_t k = 10; k-- > 0;) {
            const auto e = conditional_expectation(*t, m.at(k + 1), k);
            for (std::size_t i = 0; i < e.size(); ++i) m(k, i) = e[i];
        }
        const auto sup = accumulate_paths(*t, 0.0, [&](std::size_t k, std::size_t i, double a) {
            return std::max(a, std::fabs(m(k, i)));
        });
        const auto qv = accumulate_paths(*t, 0.0, [&](std::size_t k, std::size_t i, double a) {
            if (k == 0) return m(0, 0) * m(0, 0);
            const double d = m(k, i) - m(k - 1, t->parent(k, i));
            return a + d * d;
        });
        const double lhs = leaf_expectation(*t, sup, [&](double s) { return std::pow(s, p); });
        const double rhs = leaf_expectation(*t, qv, [&](double q) { return std::pow(q, p / 2.0); });
        EXPECT_LE(lhs, burkholder_constant(p) * rhs);
    }
}

TEST(Norms, PhiP) {
    EXPECT_DOUBLE_EQ(phi_p(3.25, 2.0), 3.25);
    EXPECT_EQ(phi_p(0.0, 1.5), 0.0);
    EXPECT_DOUBLE_EQ(phi_p(-4.0, 1.5), -2.0);
}

TEST(Norms, PowerSums) {
    const std::vector<double> a{1.0, 1.0};
    const auto b = power_sum_bounds(a, 2.0);
    EXPECT_DOUBLE_EQ(b.lower, 2.0);
    EXPECT_DOUBLE_EQ(b.middle, 4.0);
    EXPECT_DOUBLE_EQ(b.upper, 4.0);
    const std::vector<double> c{1.0, 4.0, 9.0};
    const auto d = power_sum_bounds(c, 0.5);
    EXPECT_NEAR(d.lower, 6.0 / std::sqrt(3.0), 1e-12);
    EXPECT_NEAR(d.middle, std::sqrt(14.0), 1e-12);
    EXPECT_NEAR(d.upper, 6.0, 1e-12);
    const auto e = power_sum_bounds(c, 1.0);
    EXPECT_DOUBLE_EQ(e.lower, e.middle);
    EXPECT_DOUBLE_EQ(e.middle, e.upper);
}

TEST(Norms, Young) {
    const auto y = young_bound(1.0, 1.0, 1.0, 2.0);
    EXPECT_DOUBLE_EQ(y.lhs, 1.0);
    EXPECT_DOUBLE_EQ(y.rhs, 1.25);
    const auto z = young_bound(0.0, 3.0, 0.5, 1.5);
    EXPECT_EQ(z.lhs, 0.0);
    EXPECT_GE(z.rhs, 0.0);
    double worst = 1e300;
    for (double p : {1.2, 2.0, 3.5}) {
        for (double beta : {0.1, 1.0, 4.0}) {
            for (int i = 1; i <= 60; ++i) {
                for (int j = 1; j <= 60; ++j) {
                    const auto r = young_bound(0.05 * i, 0.05 * j, beta, p);
                    worst = std::min(worst, r.rhs - r.lhs);
                }
            }
        }
    }
    EXPECT_GE(worst, -1e-12);
}

TEST(Norms, Examples) {
    auto t = tree_of(4);
    EXPECT_NEAR(norm_sp(*t, AdaptedProcess::constant(*t, -1.5), 3.0), std::pow(1.5, 3.0), 1e-14);
    const std::vector<double> z0{0.8};
    EXPECT_NEAR(norm_h(*t, PredictableProcess::constant(*t, z0), 1.5, 0.0), std::pow(0.8, 1.5), 1e-14);
    auto r = tree_of(1, 1, {RevealSpec{1.0, {1.0, -1.0}, {0.5, 0.5}}});
    const auto m = AdaptedProcess::from_function(*r, [&](std::size_t k, std::size_t i) {
        return k == 0 ? 0.0 : r->reveal_sum(k, i);
    });
    EXPECT_NEAR(norm_m(*r, m, 2.0, 0.0), 1.0, 1e-15);
    const std::vector<double> xi(t->leaves(), 2.0);
    EXPECT_NEAR(norm_lp(*t, xi, 2.0), 4.0, 1e-14);
}

TEST(Norms, RejectsBadExponent) {
    EXPECT_THROW((NormConfig{0.5, 0.0}.validate()), PreconditionError);
}
