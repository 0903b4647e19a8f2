#include <gtest/gtest.h>

#include <random>

#include "l2c/reduction.hpp"
#include "oracles.hpp"

using namespace l2c;

namespace {

std::size_t count_compatible(const ClusterGraph& cg, CompatMode mode) {
    std::size_t n = 0;
    enumerate_compatible(
        cg, 10, [&](const MixedGraph&) { return ++n, true; }, mode);
    return n;
}

// All cluster graphs over `sizes` with at most `max_dir` directed (self-loops
// included where the cluster has two members) and `max_bi` bidirected edges.
void all_cluster_graphs(const std::vector<std::size_t>& sizes, std::size_t max_dir, std::size_t max_bi,
                        const std::function<void(const ClusterGraph&)>& f) {
    const auto k = static_cast<ClusterId>(sizes.size());
    std::vector<Edge> dir, bi;
    for (ClusterId a = 0; a < k; ++a)
        for (ClusterId b = 0; b < k; ++b) {
            if (a == b && sizes[a] < 2) continue;
            dir.emplace_back(a, b);
            if (a < b) bi.emplace_back(a, b);
        }
    for (std::uint64_t m = 0; m < (std::uint64_t{1} << dir.size()); ++m) {
        if (static_cast<std::size_t>(__builtin_popcountll(m)) > max_dir) continue;
        for (std::uint64_t q = 0; q < (std::uint64_t{1} << bi.size()); ++q) {
            if (static_cast<std::size_t>(__builtin_popcountll(q)) > max_bi) continue;
            ClusterGraph cg(sizes);
            for (std::size_t i = 0; i < dir.size(); ++i)
                if (m >> i & 1) cg.graph.add_directed(dir[i].first, dir[i].second);
            for (std::size_t i = 0; i < bi.size(); ++i)
                if (q >> i & 1) cg.graph.add_bidirected(bi[i].first, bi[i].second);
            f(cg);
        }
    }
}

}  // namespace

TEST(Representatives, AllThreeRoles) {
    // cluster {0..4}; 0 -> 5, 6 -> 1, 2 <-> 7
    MixedGraph g(8);
    g.add_directed(0, 5);
    g.add_directed(6, 1);
    g.add_bidirected(2, 7);
    Partition p({0, 0, 0, 0, 0, 1, 2, 3});
    auto r = select_representatives(0, g, p);
    EXPECT_FALSE(r.verbatim);
    EXPECT_EQ(r.out_rep, VarId{0});
    EXPECT_EQ(r.in_rep, VarId{1});
    EXPECT_EQ(r.bi_rep, VarId{2});
    EXPECT_EQ(r.kept, (std::vector<VarId>{0, 1, 2}));
    EXPECT_EQ(reduce_graph(g, p).partition.size(0), 3u);
}

TEST(Representatives, OnlyOutgoing) {
    MixedGraph g(6);
    g.add_directed(3, 5);
    g.add_directed(4, 5);
    Partition p({0, 0, 0, 0, 0, 1});
    auto r = select_representatives(0, g, p);
    EXPECT_EQ(r.out_rep, VarId{3});
    EXPECT_FALSE(r.in_rep);
    EXPECT_FALSE(r.bi_rep);
    EXPECT_EQ(r.kept, (std::vector<VarId>{3}));
}

TEST(Representatives, SharedMemberReusedOnlyWhenNeeded) {
    // member 0 has all three roles; the others none
    MixedGraph g(6);
    g.add_directed(0, 4);
    g.add_directed(5, 0);
    g.add_bidirected(0, 4);
    Partition p({0, 0, 0, 0, 1, 2});
    auto r = select_representatives(0, g, p);
    EXPECT_EQ(r.out_rep, VarId{0});
    EXPECT_EQ(r.in_rep, VarId{1});
    EXPECT_EQ(r.bi_rep, VarId{2});
    // derived cluster graph survives the role split
    auto red = reduce_graph(g, p);
    EXPECT_EQ(derive_cdag(red.graph, red.partition).graph, derive_cdag(g, p).graph);
}

TEST(Representatives, SmallClusterVerbatim) {
    MixedGraph g(3);
    g.add_directed(0, 2);
    Partition p({0, 0, 1});
    auto r = select_representatives(0, g, p);
    EXPECT_TRUE(r.verbatim);
    EXPECT_EQ(r.kept, (std::vector<VarId>{0, 1}));
    EXPECT_THROW(select_representatives(5, g, p), InputError);
}

TEST(Representatives, IsolatedClusterKeepsOne) {
    MixedGraph g(5);
    auto r = select_representatives(0, g, Partition({0, 0, 0, 0, 0}));
    EXPECT_EQ(r.kept.size(), 1u);
    EXPECT_FALSE(r.out_rep || r.in_rep || r.bi_rep);
}

TEST(ReduceGraph, SmallClustersAreIdentity) {
    std::mt19937_64 rng(1);
    for (int rep = 0; rep < 50; ++rep) {
        auto g = oracle::random_mixed(9, 0.3, 0.2, true, rng);
        auto p = block_partition({3, 2, 1, 3});
        auto red = reduce_graph(g, p);
        EXPECT_EQ(red.graph, g);
        EXPECT_EQ(red.partition, p);
    }
}

TEST(ReduceGraph, OneLargeClusterArithmetic) {
    // cluster 0 has ten members; clusters 1..4 are singletons
    MixedGraph g(14);
    g.add_directed(0, 10);
    g.add_directed(11, 3);
    g.add_bidirected(5, 12);
    g.add_directed(2, 7);
    g.add_directed(12, 13);
    auto p = block_partition({10, 1, 1, 1, 1});
    auto red = reduce_graph(g, p);
    EXPECT_EQ(red.graph.num_vars(), 3u + 4u);
    EXPECT_EQ(derive_cdag(red.graph, red.partition).graph, derive_cdag(g, p).graph);
    EXPECT_TRUE(is_acyclic(red.graph));
}

TEST(ReduceGraph, CdagPreservedAndBounded) {
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 300; ++rep) {
        const bool acyclic = rep % 2 == 0;
        auto g = oracle::random_mixed(20, 0.12, 0.06, acyclic, rng);
        std::vector<ClusterId> a(20);
        for (auto& c : a) c = static_cast<ClusterId>(rng() % 4);
        auto p = Partition::from_labels(a);
        auto red = reduce_graph(g, p);
        EXPECT_EQ(derive_cdag(red.graph, red.partition).graph, derive_cdag(g, p).graph);
        EXPECT_LE(red.graph.num_vars(), 3 * p.num_clusters());
        if (acyclic) {
            EXPECT_TRUE(is_acyclic(red.graph));
        }
        for (std::size_t i = 0; i < red.original.size(); ++i)
            EXPECT_EQ(p.of(red.original[i]), red.partition.of(static_cast<VarId>(i)));
    }
}

TEST(CanonicalGraph, Examples) {
    ClusterGraph two({1, 1});
    two.graph.add_directed(0, 1);
    auto g = canonical_graph(two);
    EXPECT_TRUE(g.has_directed(0, 1));
    EXPECT_EQ(g.num_directed(), 1u);

    ClusterGraph loop({3});
    loop.graph.add_directed(0, 0);
    auto c = canonical_graph(loop);
    EXPECT_EQ(c.num_directed(), 3u);
    EXPECT_EQ(strongly_connected_components(c).size(), 1u);

    ClusterGraph bow({1, 1});
    bow.graph.add_bidirected(0, 1);
    EXPECT_TRUE(canonical_graph(bow).has_bidirected(0, 1));

    ClusterGraph bad({1});
    bad.graph.add_directed(0, 0);
    EXPECT_THROW(canonical_graph(bad), CapacityError);
    EXPECT_FALSE(canonical_admg(bad));
}

TEST(CanonicalGraph, RoundTripsThroughDerive) {
    std::size_t seen = 0;
    all_cluster_graphs({2, 1, 3}, 3, 2, [&](const ClusterGraph& cg) {
        auto g = canonical_graph(cg);
        EXPECT_EQ(derive_cdag(g, block_partition(cg.sizes)), cg);
        if (auto a = canonical_admg(cg)) {
            EXPECT_TRUE(is_acyclic(*a));
            EXPECT_EQ(derive_cdag(*a, block_partition(cg.sizes)), cg);
        }
        ++seen;
    });
    EXPECT_GT(seen, 100u);
}

TEST(CanonicalAdmg, ExistsExactlyWhenEnumerationFindsOne) {
    all_cluster_graphs({2, 1, 1}, 2, 1, [&](const ClusterGraph& cg) {
        bool any = false;
        enumerate_compatible(cg, 10, [&](const MixedGraph&) { return any = true, false; });
        EXPECT_EQ(any, has_compatible_admg(cg));
    });
}

TEST(EnumerateCompatible, SingletonExamples) {
    ClusterGraph cg({1, 1});
    cg.graph.add_directed(0, 1);
    EXPECT_EQ(count_compatible(cg, CompatMode::admg), 1u);
    cg.graph.add_bidirected(0, 1);
    EXPECT_EQ(count_compatible(cg, CompatMode::admg), 1u);
}

TEST(EnumerateCompatible, MatchesBruteForceFilter) {
    for (auto sizes : {std::vector<std::size_t>{2}, std::vector<std::size_t>{2, 1}, std::vector<std::size_t>{1, 2}}) {
        std::size_t n = 0;
        for (auto s : sizes) n += s;
        auto p = block_partition(sizes);
        all_cluster_graphs(sizes, 3, 1, [&](const ClusterGraph& cg) {
            std::size_t want_admg = 0, want_dmg = 0;
            oracle::all_mixed_graphs(n, [&](const MixedGraph& g) {
                if (!(derive_cdag(g, p) == cg)) return;
                ++want_dmg;
                want_admg += is_acyclic(g);
            });
            EXPECT_EQ(count_compatible(cg, CompatMode::admg), want_admg);
            EXPECT_EQ(count_compatible(cg, CompatMode::dmg), want_dmg);
        });
    }
}

TEST(EnumerateCompatible, CapacityLimits) {
    ClusterGraph big({6, 5});
    EXPECT_THROW(enumerate_compatible(big, 11, [](const MixedGraph&) { return true; }), CapacityError);
    EXPECT_THROW(enumerate_compatible(big, 10, [](const MixedGraph&) { return true; }), CapacityError);
    ClusterGraph dense({4, 4});
    dense.graph.add_directed(0, 1);
    dense.graph.add_directed(1, 0);
    EXPECT_THROW(enumerate_compatible(dense, 10, [](const MixedGraph&) { return true; }), CapacityError);
}

TEST(ReducedCdag, PreservesClusterGraph) {
    all_cluster_graphs({5, 2, 4}, 2, 1, [&](const ClusterGraph& cg) {
        auto r = reduced_cdag(cg);
        EXPECT_EQ(r.graph, cg.graph);
        for (auto s : r.sizes) EXPECT_LE(s, 3u);
    });
}
