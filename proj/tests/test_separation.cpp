#include <gtest/gtest.h>

#include <random>

#include "l2c/separation.hpp"
#include "oracles.hpp"

using namespace l2c;

namespace {

MixedGraph chain3() {
    MixedGraph g(3);
    g.add_directed(0, 1);
    g.add_directed(1, 2);
    return g;
}

}  // namespace

TEST(MSeparation, ChainBlockedByMiddle) {
    EXPECT_TRUE(m_separated(chain3(), {{0}, {2}, {1}}));
    EXPECT_FALSE(m_separated(chain3(), {{0}, {2}, {}}));
}

TEST(MSeparation, ColliderOpensWhenConditioned) {
    MixedGraph g(3);
    g.add_directed(0, 1);
    g.add_directed(2, 1);
    EXPECT_TRUE(m_separated(g, {{0}, {2}, {}}));
    EXPECT_FALSE(m_separated(g, {{0}, {2}, {1}}));
}

TEST(MSeparation, ColliderOpensThroughDescendant) {
    MixedGraph g(4);
    g.add_directed(0, 1);
    g.add_directed(2, 1);
    g.add_directed(1, 3);
    EXPECT_FALSE(m_separated(g, {{0}, {2}, {3}}));
}

TEST(MSeparation, BidirectedAlwaysConnects) {
    MixedGraph g(2);
    g.add_bidirected(0, 1);
    EXPECT_FALSE(m_separated(g, {{0}, {1}, {}}));
}

TEST(MSeparation, RejectsOverlapAndEmpty) {
    EXPECT_THROW(m_separated(chain3(), {{0}, {0}, {}}), InputError);
    EXPECT_THROW(m_separated(chain3(), {{0}, {2}, {0}}), InputError);
    EXPECT_THROW(m_separated(chain3(), {{}, {2}, {}}), InputError);
    EXPECT_THROW(m_separated(chain3(), {{0}, {7}, {}}), InputError);
}

TEST(SigmaSeparation, TwoCycleWithExit) {
    // 0 <-> 1 in one SCC; the only path 1 -> 0 -> 2 leaves 0 by a tail into
    // another SCC, so conditioning on 0 blocks it.
    MixedGraph g(3);
    g.add_directed(0, 1);
    g.add_directed(1, 0);
    g.add_directed(0, 2);
    EXPECT_TRUE(sigma_separated(g, {{1}, {2}, {0}}));
    EXPECT_TRUE(brute_force_separated(g, {{1}, {2}, {0}}, SepMode::sigma));
    EXPECT_FALSE(sigma_separated(g, {{1}, {2}, {}}));
}

TEST(SigmaSeparation, ConditionedNodeInsideCycleDoesNotBlock) {
    // cycle 1 -> 2 -> 3 -> 1 fed by 0. Given {1, 3}, every conditioned
    // non-collider only emits tails inside the cycle, so sigma stays open
    // while m-separation blocks.
    MixedGraph g(4);
    g.add_directed(0, 1);
    g.add_directed(1, 2);
    g.add_directed(2, 3);
    g.add_directed(3, 1);
    EXPECT_FALSE(sigma_separated(g, {{0}, {2}, {1, 3}}));
    EXPECT_TRUE(m_separated(g, {{0}, {2}, {1, 3}}));
    EXPECT_FALSE(brute_force_separated(g, {{0}, {2}, {1, 3}}, SepMode::sigma));
    EXPECT_TRUE(brute_force_separated(g, {{0}, {2}, {1, 3}}, SepMode::m));
}

TEST(SigmaSeparation, AdjacentNeverSeparated) {
    std::mt19937_64 rng(1);
    for (int rep = 0; rep < 100; ++rep) {
        auto g = oracle::random_mixed(6, 0.3, 0.2, false, rng);
        for (VarId a = 0; a < 6; ++a)
            for (VarId b = a + 1; b < 6; ++b) {
                if (!g.adjacent(a, b)) continue;
                NodeSet z;
                for (VarId v = 0; v < 6; ++v)
                    if (v != a && v != b) z.insert(v);
                EXPECT_FALSE(sigma_separated(g, {{a}, {b}, z}));
                EXPECT_FALSE(m_separated(g, {{a}, {b}, {}}));
            }
    }
}

TEST(BruteForce, TrivialCases) {
    MixedGraph empty(4);
    EXPECT_TRUE(brute_force_separated(empty, {{0, 1}, {2}, {3}}, SepMode::m));
    MixedGraph bi(3);
    bi.add_bidirected(0, 1);
    bi.add_bidirected(1, 2);
    bi.add_bidirected(0, 2);
    for (SepMode mode : {SepMode::m, SepMode::sigma}) {
        EXPECT_FALSE(brute_force_separated(bi, {{0}, {1}, {}}, mode));
        EXPECT_FALSE(brute_force_separated(bi, {{0}, {2}, {1}}, mode));
    }
    EXPECT_THROW(brute_force_separated(MixedGraph(13), {{0}, {1}, {}}, SepMode::m), CapacityError);
}

// Exhaustive singleton-pair queries with every conditioning subset.
TEST(BruteForce, AgreesWithReachabilityOnRandomGraphs) {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> size(2, 6);
    for (int rep = 0; rep < 300; ++rep) {
        const std::size_t n = static_cast<std::size_t>(size(rng));
        auto g = oracle::random_mixed(n, 0.35, 0.2, rep % 2 == 0, rng);
        for (VarId a = 0; a < n; ++a)
            for (VarId b = a + 1; b < n; ++b) {
                std::vector<VarId> rest;
                for (VarId v = 0; v < n; ++v)
                    if (v != a && v != b) rest.push_back(v);
                for (std::size_t mask = 0; mask < (std::size_t{1} << rest.size()); ++mask) {
                    NodeSet z;
                    for (std::size_t i = 0; i < rest.size(); ++i)
                        if (mask >> i & 1) z.insert(rest[i]);
                    SepQuery q{{a}, {b}, z}, r{{b}, {a}, z};
                    bool m = m_separated(g, q), s = sigma_separated(g, q);
                    ASSERT_EQ(m, brute_force_separated(g, q, SepMode::m));
                    ASSERT_EQ(s, brute_force_separated(g, q, SepMode::sigma));
                    ASSERT_EQ(m, m_separated(g, r));
                    ASSERT_EQ(s, sigma_separated(g, r));
                    if (is_acyclic(g)) {
                        ASSERT_EQ(m, s);
                    }
                }
            }
    }
}

TEST(VStructures, Basics) {
    MarkedGraph g(3);
    g.add_edge(0, 2, Mark::tail, Mark::arrow);
    g.add_edge(1, 2, Mark::tail, Mark::arrow);
    EXPECT_EQ(v_structures(g), (std::vector<VStructure>{{0, 2, 1}}));
    g.add_edge(0, 1, Mark::tail, Mark::tail);
    EXPECT_TRUE(v_structures(g).empty());
}

TEST(VStructures, AnyMarkAtFarEnd) {
    MarkedGraph g(3);
    g.add_edge(0, 2, Mark::arrow, Mark::arrow);
    g.add_edge(1, 2, Mark::tail, Mark::arrow);
    EXPECT_EQ(v_structures(g), (std::vector<VStructure>{{0, 2, 1}}));
}
