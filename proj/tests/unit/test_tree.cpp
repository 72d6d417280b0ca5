#include "bsdelab/errors.hpp"
#include "bsdelab/process.hpp"
#include "bsdelab/tree.hpp"
#include "helpers.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cmath>
#include <string>

using namespace bsdelab;
using bsdelab::testing::coin;
using bsdelab::testing::tree_of;

TEST(Tree, OneStepRademacher) {
    auto t = tree_of(1);
    ASSERT_EQ(t->nodes_at(0), 1u);
    ASSERT_EQ(t->leaves(), 2u);
    const double a = t->dw(1, 0)[0];
    const double b = t->dw(1, 1)[0];
    EXPECT_DOUBLE_EQ(std::max(a, b), 1.0);
    EXPECT_DOUBLE_EQ(std::min(a, b), -1.0);
    EXPECT_DOUBLE_EQ(t->prob(1, 0), 0.5);
    EXPECT_DOUBLE_EQ(t->prob(1, 1), 0.5);
}

TEST(Tree, RevealProductLaw) {
    auto t = tree_of(1, 1, {RevealSpec{1.0, {0.0, 1.0}, {0.5, 0.5}}});
    ASSERT_EQ(t->leaves(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_DOUBLE_EQ(t->path_prob(1, i), 0.25);
        EXPECT_NE(t->reveal(1, i), ScenarioTree::no_reveal);
    }
}

TEST(Tree, TwoDimensionalCovariance) {
    auto t = tree_of(2, 2);
    ASSERT_EQ(t->leaves(), 16u);
    for (std::size_t node = 0; node < t->nodes_at(1); ++node) {
        ASSERT_EQ(t->n_children(1, node), 4u);
        double c[2][2] = {{0, 0}, {0, 0}};
        double m[2] = {0, 0};
        const std::size_t c0 = t->first_child(1, node);
        for (std::size_t c_i = c0; c_i < c0 + 4; ++c_i) {
            const auto dw = t->dw(2, c_i);
            const double p = t->prob(2, c_i);
            for (int i = 0; i < 2; ++i) {
                m[i] += p * dw[i];
                for (int j = 0; j < 2; ++j) c[i][j] += p * dw[i] * dw[j];
            }
        }
        EXPECT_NEAR(m[0], 0.0, 1e-15);
        EXPECT_NEAR(m[1], 0.0, 1e-15);
        EXPECT_NEAR(c[0][0], t->dt(), 1e-15);
        EXPECT_NEAR(c[1][1], t->dt(), 1e-15);
        EXPECT_NEAR(c[0][1], 0.0, 1e-15);
    }
    const auto audit = audit_tree(*t);
    EXPECT_LE(audit.dw_cov_defect, 1e-12);
}

TEST(Tree, ConditionalExpectationExamples) {
    auto t = tree_of(1);
    const std::vector<double> constant{3.5, 3.5};
    EXPECT_DOUBLE_EQ(conditional_expectation(*t, constant, 0)[0], 3.5);
    const std::vector<double> inc{t->dw(1, 0)[0], t->dw(1, 1)[0]};
    EXPECT_DOUBLE_EQ(conditional_expectation(*t, inc, 0)[0], 0.0);
    const std::vector<double> vals{3.0, 1.0};
    EXPECT_DOUBLE_EQ(conditional_expectation(*t, vals, 0)[0], 2.0);
    const std::vector<double> indicator{1.0, 0.0};
    EXPECT_DOUBLE_EQ(expectation(*t, indicator, 1), 0.5);
}

TEST(Tree, SquaredBrownianTerminalMeanIsHorizon) {
    auto t = tree_of(2);
    std::vector<double> w2(t->leaves());
    for (std::size_t i = 0; i < w2.size(); ++i) w2[i] = t->w(2, i)[0] * t->w(2, i)[0];
    EXPECT_NEAR(expectation(*t, w2, 2), 1.0, 1e-15);
    auto t3 = tree_of(5, 1, {coin(0.4)}, 2.0);
    std::vector<double> v(t3->leaves());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = t3->w(5, i)[0] * t3->w(5, i)[0];
    EXPECT_NEAR(expectation(*t3, v, 5), 2.0, 1e-13);
}

TEST(Tree, SubtreeLeafRanges) {
    auto t = tree_of(3, 1, {coin(2.0 / 3.0)});
    for (std::size_t k = 0; k <= 3; ++k) {
        double mass = 0.0;
        for (std::size_t i = 0; i < t->nodes_at(k); ++i) {
            mass += t->path_prob(k, i);
            for (std::size_t leaf = t->leaf_begin(k, i); leaf < t->leaf_end(k, i); ++leaf) {
                EXPECT_EQ(t->ancestor(leaf, k), i);
            }
        }
        EXPECT_NEAR(mass, 1.0, 1e-15);
    }
}

TEST(Tree, SerializationRoundTripIsCanonical) {
    auto t = tree_of(3, 2, {coin(1.0 / 3.0)});
    const std::string s = serialize_tree(*t);
    const ScenarioTree back = deserialize_tree(s);
    EXPECT_TRUE(back == *t);
    EXPECT_EQ(serialize_tree(back), s);
    auto one = tree_of(1);
    EXPECT_TRUE(deserialize_tree(serialize_tree(*one)) == *one);
}

TEST(Tree, CorruptedProbabilityNamesNode) {
    auto t = tree_of(1);
    auto j = nlohmann::json::parse(serialize_tree(*t));
    j["nodes"][1]["prob"] = 0.4;  // children now sum to 0.9
    try {
        deserialize_tree(j.dump());
        FAIL() << "expected InvariantViolation";
    } catch (const InvariantViolation& e) {
        EXPECT_NE(std::string(e.what()).find("node 0"), std::string::npos) << e.what();
    }
}

TEST(Tree, MalformedJsonIsConfigError) {
    EXPECT_THROW(deserialize_tree("{not json"), ConfigError);
    EXPECT_THROW(deserialize_tree("{\"version\": 1}"), ConfigError);
}

TEST(Tree, OffGridRevealRejected) {
    try {
        tree_of(4, 1, {coin(0.3)});
        FAIL() << "expected PreconditionError";
    } catch (const PreconditionError& e) {
        EXPECT_NE(std::string(e.what()).find("not on the grid"), std::string::npos);
    }
}

TEST(Tree, BadRevealLawRejected) {
    EXPECT_THROW(tree_of(2, 1, {RevealSpec{0.5, {1.0, 2.0}, {0.5, 0.6}}}), PreconditionError);
    EXPECT_THROW(tree_of(2, 1, {RevealSpec{0.5, {1.0, 2.0}, {1.0, 0.0}}}), PreconditionError);
}

TEST(Tree, NodeCapNamed) {
    TreeSpec s;
    s.n_steps = 12;
    s.dim = 2;
    s.node_cap = 1000;
    try {
        make_tree(s);
        FAIL() << "expected SizingError";
    } catch (const SizingError& e) {
        EXPECT_NE(std::string(e.what()).find("1000"), std::string::npos);
    }
}

TEST(Tree, BuildIsDeterministic) {
    auto a = tree_of(4, 2, {coin(0.5)});
    auto b = tree_of(4, 2, {coin(0.5)});
    EXPECT_TRUE(*a == *b);
    EXPECT_EQ(serialize_tree(*a), serialize_tree(*b));
}

TEST(Tree, TimeGridIndex) {
    const TimeGrid g = TimeGrid::uniform(1.5, 3);
    EXPECT_EQ(g.index_of(1.0), 2);
    EXPECT_EQ(g.index_of(0.7), -1);
    EXPECT_DOUBLE_EQ(g.times.back(), 1.5);
}
