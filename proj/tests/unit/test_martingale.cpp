#include "bsdelab/families.hpp"
#include "bsdelab/martingale.hpp"
#include "helpers.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace bsdelab;
using bsdelab::testing::coin;
using bsdelab::testing::tree_of;

namespace {

/// Deterministic làdlàg path on the tree from per-step (value, right) pairs,
/// with left[k+1] = right[k].
LadlagProcess deterministic_path(const ScenarioTree& t, std::vector<double> value, std::vector<double> right) {
    LadlagProcess x;
    x.value = AdaptedProcess::from_function(t, [&](std::size_t k, std::size_t) { return value[k]; });
    x.right = AdaptedProcess::from_function(t, [&](std::size_t k, std::size_t) { return right[k]; });
    x.left = AdaptedProcess::from_function(t, [&](std::size_t k, std::size_t) { return k == 0 ? value[0] : right[k - 1]; });
    return x;
}

}  // namespace

TEST(Representation, ConstantIntegrand) {
    auto t = tree_of(4, 2);
    const std::vector<double> z0{0.7, -1.3};
    const auto n = stochastic_integral(*t, PredictableProcess::constant(*t, z0));
    const auto rep = represent_martingale(*t, n);
    for (std::size_t k = 1; k <= 4; ++k) {
        for (std::size_t i = 0; i < t->nodes_at(k - 1); ++i) {
            EXPECT_NEAR(rep.z.at(k, i)[0], 0.7, 1e-13);
            EXPECT_NEAR(rep.z.at(k, i)[1], -1.3, 1e-13);
        }
        for (std::size_t i = 0; i < t->nodes_at(k); ++i) EXPECT_NEAR(rep.m(k, i), 0.0, 1e-13);
    }
}

TEST(Representation, CompensatedRevealIsOrthogonal) {
    auto t = tree_of(2, 1, {RevealSpec{0.5, {2.0, -1.0}, {0.25, 0.75}}});
    // Label value minus its mean 2·0.25 − 0.75 = −0.25.
    const auto n = AdaptedProcess::from_function(*t, [&](std::size_t k, std::size_t i) {
        return k == 0 ? 0.0 : t->reveal_sum(k, i) + 0.25;
    });
    EXPECT_LE(martingale_defect(*t, n).defect, 1e-15);
    const auto rep = represent_martingale(*t, n);
    for (std::size_t k = 1; k <= 2; ++k) {
        for (std::size_t i = 0; i < t->nodes_at(k - 1); ++i) EXPECT_NEAR(rep.z.at(k, i)[0], 0.0, 1e-15);
        for (std::size_t i = 0; i < t->nodes_at(k); ++i) EXPECT_NEAR(rep.m(k, i), n(k, i), 1e-15);
    }
}

TEST(Representation, OneStepAgainstLeastSquares) {
    auto t = tree_of(1, 1, {coin(1.0)});
    ASSERT_EQ(t->leaves(), 4u);
    const std::vector<double> leaf{3.0, -1.0, 0.5, 2.0};
    AdaptedProcess n = AdaptedProcess::zeros(*t);
    double mean = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        n(1, i) = leaf[i];
        mean += t->prob(1, i) * leaf[i];
    }
    n(0, 0) = mean;
    // Least squares of (N_1 − N_0) on ΔW under equal weights: Z = Σ p x ΔW / Σ p ΔW².
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        const double dw = t->dw(1, i)[0];
        num += t->prob(1, i) * (leaf[i] - mean) * dw;
        den += t->prob(1, i) * dw * dw;
    }
    const auto rep = represent_martingale(*t, n);
    EXPECT_NEAR(rep.z.at(1, 0)[0], num / den, 1e-14);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_NEAR(rep.m(1, i), leaf[i] - mean - num / den * t->dw(1, i)[0], 1e-14);
    }
    EXPECT_LE(rep.residual_orthogonality, 1e-14);
    EXPECT_LE(reconstruction_defect(*t, n, rep), 1e-14);
}

TEST(Representation, NonMartingaleRejected) {
    auto t = tree_of(2);
    const auto x = AdaptedProcess::from_function(*t, [](std::size_t k, std::size_t) { return double(k); });
    EXPECT_THROW(represent_martingale(*t, x), MartingaleDefectError);
}

TEST(Doob, MartingaleHasNoCompensator) {
    auto t = tree_of(3);
    auto rng = make_engine({3, 0});
    const auto x = random_martingale(*t, rng);
    const auto dec = doob_decompose(*t, x);
    for (std::size_t k = 0; k <= 3; ++k)
        for (std::size_t i = 0; i < t->nodes_at(k); ++i) EXPECT_NEAR(dec.a(k, i), 0.0, 1e-14);
}

TEST(Doob, DeterministicDrift) {
    auto t = tree_of(4);
    const auto x = AdaptedProcess::from_function(*t, [&](std::size_t k, std::size_t) { return -t->time(k); });
    const auto dec = doob_decompose(*t, x, true);
    for (std::size_t k = 0; k <= 4; ++k) {
        for (std::size_t i = 0; i < t->nodes_at(k); ++i) {
            EXPECT_NEAR(dec.m(k, i), 0.0, 1e-15);
            EXPECT_NEAR(dec.a(k, i), t->time(k), 1e-15);
        }
    }
}

TEST(Doob, SquaredBrownianCompensator) {
    // X = M − A, so the submartingale W² has A_k = −t_k.
    auto t = tree_of(2);
    const auto x = AdaptedProcess::from_function(*t, [&](std::size_t k, std::size_t i) {
        return t->w(k, i)[0] * t->w(k, i)[0];
    });
    const auto dec = doob_decompose(*t, x);
    for (std::size_t k = 0; k <= 2; ++k)
        for (std::size_t i = 0; i < t->nodes_at(k); ++i) EXPECT_NEAR(dec.a(k, i), -t->time(k), 1e-15);
    EXPECT_THROW(doob_decompose(*t, x, true), InvariantViolation);
}

TEST(Mertens, CadlagMartingale) {
    auto t = tree_of(3);
    auto rng = make_engine({4, 0});
    const auto x = LadlagProcess::from_cadlag(*t, random_martingale(*t, rng));
    const auto dec = mertens_decompose(*t, x);
    for (std::size_t k = 0; k <= 3; ++k) {
        for (std::size_t i = 0; i < t->nodes_at(k); ++i) {
            EXPECT_NEAR(dec.a.value(k, i), 0.0, 1e-14);
            EXPECT_NEAR(dec.i.right(k, i), 0.0, 1e-14);
        }
    }
    EXPECT_LE(mertens_identity_defect(*t, x, dec), 1e-14);
}

TEST(Mertens, DeterministicDecreasing) {
    auto t = tree_of(3);
    const auto x = LadlagProcess::from_cadlag(*t, AdaptedProcess::from_function(*t, [](std::size_t k, std::size_t) {
        return 2.0 - 0.5 * double(k * k);
    }));
    const auto dec = mertens_decompose(*t, x);
    for (std::size_t k = 0; k <= 3; ++k) {
        EXPECT_NEAR(dec.m.value(k, 0), 0.0, 1e-15);
        EXPECT_NEAR(dec.i.right(k, 0), 0.0, 1e-15);
        EXPECT_NEAR(dec.a.value(k, 0), x.value(0, 0) - x.value(k, 0), 1e-15);
    }
}

TEST(Mertens, SingleRightJump) {
    auto t = tree_of(3);
    const auto x = deterministic_path(*t, {1.0, 1.0, 0.6, 0.6}, {1.0, 0.6, 0.6, 0.6});
    const auto dec = mertens_decompose(*t, x);
    EXPECT_NEAR(dec.i.value(1, 0), 0.0, 1e-15);  // the jump at t_1 is not yet in I at t_1
    EXPECT_NEAR(dec.i.right(1, 0), 0.4, 1e-15);
    EXPECT_NEAR(dec.i.value(2, 0), 0.4, 1e-15);
    EXPECT_NEAR(dec.a.value(3, 0), 0.0, 1e-15);
    EXPECT_LE(mertens_identity_defect(*t, x, dec), 1e-15);
}

TEST(Mertens, RejectsNonSupermartingale) {
    auto t = tree_of(2);
    const auto x = deterministic_path(*t, {0.0, 1.0, 2.0}, {0.0, 1.0, 2.0});
    EXPECT_THROW(mertens_decompose(*t, x), InvariantViolation);
}

TEST(Mertens, ExhaustJumps) {
    auto t = tree_of(3);
    const auto x = deterministic_path(*t, {1.0, 0.7, 0.6, 0.6}, {0.7, 0.6, 0.6, 0.6});
    const auto coarse = exhaust_jumps(*t, x, 0.2, 10);
    EXPECT_NEAR(coarse.right(3, 0), 0.3, 1e-15);
    const auto fine = exhaust_jumps(*t, x, 0.05, 10);
    const auto dec = mertens_decompose(*t, x);
    for (std::size_t k = 0; k <= 3; ++k) {
        EXPECT_NEAR(fine.value(k, 0), dec.i.value(k, 0), 1e-15);
        EXPECT_NEAR(fine.right(k, 0), dec.i.right(k, 0), 1e-15);
    }
    EXPECT_NEAR(fine.right(3, 0), 0.4, 1e-15);
    EXPECT_NEAR(exhaust_jumps(*t, x, 0.05, 1).right(3, 0), 0.3, 1e-15);
    const auto none = LadlagProcess::from_cadlag(*t, x.value);
    EXPECT_EQ(exhaust_jumps(*t, none, 1e-9, 10).right(3, 0), 0.0);
}

TEST(Meyer, ZeroProcessAndRandomFamily) {
    auto t = tree_of(4, 1, {coin(0.5)});
    const auto zero = LadlagProcess::from_cadlag(*t, AdaptedProcess::zeros(*t));
    const auto r0 = meyer_bound_check(*t, zero, 2.0);
    EXPECT_TRUE(r0.pass);
    EXPECT_EQ(r0.lhs, 0.0);
    auto rng = make_engine({5, 0});
    for (int j = 0; j < 30; ++j) {
        const auto x = random_strong_supermartingale(*t, rng, j % 2 == 1);
        for (double p : {1.5, 2.0, 3.0}) EXPECT_TRUE(meyer_bound_check(*t, x, p).pass);
    }
}

TEST(Girsanov, TwoLeafHandComputation) {
    auto t = tree_of(1);
    const std::vector<double> eta{0.5};
    const auto q = girsanov_change(*t, PredictableProcess::constant(*t, eta));
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_DOUBLE_EQ(q.density(1, i), 1.0 - 0.5 * t->dw(1, i)[0]);
    }
    const auto wq = q_brownian(*t, q, 0);
    EXPECT_LE(q_martingale_defect(*t, q, wq), 1e-15);
    const std::vector<double> d1(q.density.at(1).begin(), q.density.at(1).end());
    EXPECT_DOUBLE_EQ(expectation(*t, d1, 1), 1.0);
}

TEST(Girsanov, ZeroEtaAndAdmissibility) {
    auto t = tree_of(3, 2);
    const auto q = girsanov_change(*t, PredictableProcess::zeros(*t, 2));
    for (std::size_t i = 0; i < t->leaves(); ++i) EXPECT_EQ(q.density(3, i), 1.0);
    const std::vector<double> big{2.0, 0.0};
    EXPECT_THROW(girsanov_change(*t, PredictableProcess::constant(*t, big)), PreconditionError);
    auto rng = make_engine({6, 0});
    const auto eta = random_eta(*t, rng, 1.0);
    const auto qr = girsanov_change(*t, eta);
    const std::vector<double> dn(qr.density.at(3).begin(), qr.density.at(3).end());
    EXPECT_NEAR(expectation(*t, dn, 3), 1.0, 1e-14);
    for (double d : dn) EXPECT_GT(d, 0.0);
}
