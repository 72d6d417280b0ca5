#include "bsdelab/kernels.hpp"
#include "bsdelab/random.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace bsdelab;
namespace k = bsdelab::kernels;

namespace {

bool have_avx2() { return k::detected_isa() == k::Isa::avx2; }

std::vector<double> draws(std::size_t n, std::uint64_t stream, double lo = -1.0, double hi = 1.0) {
    auto rng = make_engine({11, stream});
    std::vector<double> v(n);
    for (auto& x : v) x = uniform(rng, lo, hi);
    return v;
}

struct Lanes {
    std::vector<double> w, anchor, gap, up, down, crossings;
    explicit Lanes(std::size_t n) : w(n), anchor(n), gap(n), up(n), down(n), crossings(n) {}
    k::LadderLanes view() { return {w, anchor, gap, up, down, crossings}; }
};

}  // namespace

TEST(Kernels, WeightedSumScalarMatchesNaive) {
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 16u, 33u, 1001u}) {
        const auto w = draws(n, 1);
        const auto x = draws(n, 2);
        double naive = 0.0;
        for (std::size_t i = 0; i < n; ++i) naive += w[i] * x[i];
        EXPECT_NEAR(k::scalar::weighted_sum(w, x), naive, 1e-13 * (1.0 + n));
    }
}

TEST(Kernels, WeightedSumAvx2MatchesScalar) {
    if (!have_avx2()) GTEST_SKIP() << "CPU lacks AVX2";
    for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 8u, 13u, 64u, 4097u}) {
        const auto w = draws(n, 3);
        const auto x = draws(n, 4, -50.0, 50.0);
        const double s = k::scalar::weighted_sum(w, x);
        const double v = k::avx2::weighted_sum(w, x);
        double abs_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) abs_sum += std::fabs(w[i] * x[i]);
        EXPECT_NEAR(s, v, 4e-16 * abs_sum * std::log2(2.0 + n)) << "n=" << n;
    }
}

TEST(Kernels, MaxAbsAgree) {
    EXPECT_EQ(k::scalar::max_abs({}), 0.0);
    for (std::size_t n : {1u, 3u, 4u, 9u, 100u}) {
        auto x = draws(n, 5, -3.0, 3.0);
        x[n / 2] = -7.25;
        EXPECT_EQ(k::scalar::max_abs(x), 7.25);
        if (have_avx2()) EXPECT_EQ(k::avx2::max_abs(x), 7.25);
    }
}

TEST(Kernels, LadderAvx2BitIdentical) {
    if (!have_avx2()) GTEST_SKIP() << "CPU lacks AVX2";
    for (std::size_t lanes : {1u, 4u, 7u, 64u}) {
        const std::size_t steps = 5000;
        auto inc = draws(steps * lanes, 6, -0.01, 0.01);
        Lanes a(lanes), b(lanes);
        k::scalar::ladder_advance(inc, lanes, 0.05, a.view());
        k::avx2::ladder_advance(inc, lanes, 0.05, b.view());
        EXPECT_EQ(a.w, b.w);
        EXPECT_EQ(a.anchor, b.anchor);
        EXPECT_EQ(a.gap, b.gap);
        EXPECT_EQ(a.up, b.up);
        EXPECT_EQ(a.down, b.down);
        EXPECT_EQ(a.crossings, b.crossings);
    }
}

TEST(Kernels, LadderHandPath) {
    // Walk 0 -> 0.03 -> 0.06 (cross up) -> 0.0 (cross down) -> 0.02.
    const std::vector<double> inc{0.03, 0.03, -0.06, 0.02};
    Lanes l(1);
    k::scalar::ladder_advance(inc, 1, 0.05, l.view());
    EXPECT_DOUBLE_EQ(l.crossings[0], 2.0);
    EXPECT_NEAR(l.up[0], 0.06, 1e-15);
    EXPECT_NEAR(l.down[0], 0.06, 1e-15);
    EXPECT_NEAR(l.anchor[0], 0.0, 1e-15);
    EXPECT_NEAR(l.gap[0], 0.03, 1e-15);
}

TEST(Kernels, ForceIsaDispatch) {
    k::force_isa(k::Isa::scalar);
    EXPECT_EQ(k::active_isa(), k::Isa::scalar);
    k::force_isa(k::Isa::avx2);
    EXPECT_EQ(k::active_isa(), have_avx2() ? k::Isa::avx2 : k::Isa::scalar);
    const auto w = draws(37, 7);
    const auto x = draws(37, 8);
    const double via_dispatch = k::weighted_sum(w, x);
    const double direct = have_avx2() ? k::avx2::weighted_sum(w, x) : k::scalar::weighted_sum(w, x);
    EXPECT_EQ(via_dispatch, direct);
    k::force_isa(std::nullopt);
    EXPECT_EQ(k::active_isa(), k::detected_isa());
    EXPECT_EQ(k::isa_name(k::Isa::scalar), "scalar");
}
