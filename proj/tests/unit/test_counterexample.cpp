#include "bsdelab/counterexample.hpp"
#include "bsdelab/errors.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace bsdelab;

namespace {

CounterexampleConfig small(std::size_t paths = 200) {
    CounterexampleConfig c;
    c.eps = 0.1;
    c.dt = 1e-4;
    c.n_paths = paths;
    c.seed = {21, 0};
    return c;
}

}  // namespace

TEST(Counterexample, NoCrossingPath) {
    CounterexampleConfig c = small(50);
    c.eps = 50.0;  // never reached on [0, 1]
    const auto r = run_counterexample(c);
    for (const auto& p : r.paths) {
        EXPECT_EQ(p.tv, 0.0);
        EXPECT_EQ(p.crossings, 0.0);
        EXPECT_LT(p.gap, c.eps);
    }
}

TEST(Counterexample, IndependentOfBatchingAndWorkers) {
    auto a = small(130);
    auto b = a;
    b.batch = 5;
    b.chunk = 333;
    b.workers = 3;
    const auto ra = run_counterexample(a);
    const auto rb = run_counterexample(b);
    ASSERT_EQ(ra.paths.size(), rb.paths.size());
    for (std::size_t i = 0; i < ra.paths.size(); ++i) {
        EXPECT_EQ(ra.paths[i].gap, rb.paths[i].gap);
        EXPECT_EQ(ra.paths[i].tv, rb.paths[i].tv);
        EXPECT_EQ(ra.paths[i].crossings, rb.paths[i].crossings);
    }
    EXPECT_EQ(counterexample_csv(ra), counterexample_csv(rb));
}

TEST(Counterexample, JordanDecompositionIsMinimal) {
    const auto r = run_counterexample(small());
    for (const auto& p : r.paths) {
        EXPECT_GE(p.up, 0.0);
        EXPECT_GE(p.down, 0.0);
        EXPECT_DOUBLE_EQ(p.tv, p.up + p.down);
        // Each crossing moves V by at least ε in one direction only.
        EXPECT_GE(p.tv, p.crossings * 0.1 - 1e-12);
    }
}

TEST(Counterexample, GapAndTotalVariationSanity) {
    const auto r = run_counterexample(small(2000));
    EXPECT_TRUE(r.gap_ok());
    EXPECT_LE(r.gap_max, r.gap_bound);
    EXPECT_NEAR(r.slack, std::sqrt(2e-4 * std::log(1e4)), 1e-15);
    EXPECT_DOUBLE_EQ(r.predicted_tv, 10.0);
    EXPECT_LT(r.tv_relative_error, 0.15);
    EXPECT_LE(r.gap_q50, r.gap_q90);
    EXPECT_LE(r.gap_q90, r.gap_q99);
}

TEST(Counterexample, SlopeNearOne) {
    auto base = small(300);
    base.dt = 1e-4;
    const auto fit = tv_slope({0.4, 0.2, 0.1}, base);
    EXPECT_EQ(fit.mean_tv.size(), 3u);
    EXPECT_NEAR(fit.slope, 1.0, 0.2);
}

TEST(Counterexample, RejectsBadConfig) {
    auto c = small();
    c.eps = -1.0;
    EXPECT_THROW(run_counterexample(c), Error);
    c = small();
    c.n_paths = 0;
    EXPECT_THROW(run_counterexample(c), Error);
}
