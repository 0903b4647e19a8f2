#include <gtest/gtest.h>

#include "l2c/local_discovery.hpp"
#include "l2c/scm.hpp"
#include "oracles.hpp"

using namespace l2c;

namespace {

CiTester oracle_tester(const MixedGraph& g) { return CiTester(std::make_shared<OracleBackend>(g)); }

// Target-incident soundness and completeness against the MAG of the truth.
void check_against_mag(const MixedGraph& truth, const DiscoveryOptions& opt = {}) {
    auto mag = oracle::mag_projection(truth);
    CiTester t = oracle_tester(truth);
    for (VarId v = 0; v < truth.num_vars(); ++v) {
        auto ls = discover_local(v, t, opt);
        EXPECT_EQ(ls.mmb, oracle::mag_markov_blanket(mag, v)) << "target " << v;
        NodeSet adj(ls.direct_causes);
        adj.insert(ls.direct_effects.begin(), ls.direct_effects.end());
        adj.insert(ls.undecided.begin(), ls.undecided.end());
        NodeSet true_adj;
        for (VarId w : mag.neighbors(v)) true_adj.insert(w);
        EXPECT_EQ(adj, true_adj) << "target " << v;
        for (VarId c : ls.direct_causes) EXPECT_TRUE(mag.is_directed(c, v)) << c << "->" << v;
        for (VarId e : ls.direct_effects) EXPECT_TRUE(mag.is_directed(v, e)) << v << "->" << e;
        for (VarId u : ls.confounded) EXPECT_TRUE(mag.is_bidirected(u, v));
        for (const auto& vs : ls.v_structures) {
            EXPECT_EQ(mag.mark(vs.x, vs.z), Mark::arrow);
            EXPECT_EQ(mag.mark(vs.y, vs.z), Mark::arrow);
            EXPECT_FALSE(mag.adjacent(vs.x, vs.y));
        }
    }
}

}  // namespace

TEST(MagOracle, InducingPathsMatchSubsetSearch) {
    for (std::uint64_t s = 0; s < 30; ++s) {
        auto dag = gen_dag(9, 2.5, GraphModel::erdos_renyi, s);
        auto g = hide_latents(dag, 0.25, s).graph;
        auto mag = oracle::mag_projection(g);
        EXPECT_TRUE(is_ancestral(mag));
        for (VarId a = 0; a < g.num_vars(); ++a)
            for (VarId b = a + 1; b < g.num_vars(); ++b)
                EXPECT_EQ(mag.adjacent(a, b), oracle::adjacent_by_subsets(g, a, b));
    }
}

TEST(LearnMmb, Chain) {
    MixedGraph g(3);
    g.add_directed(0, 1);
    g.add_directed(1, 2);
    CiTester t = oracle_tester(g);
    EXPECT_EQ(learn_mmb(1, t, all_variables(3)), (NodeSet{0, 2}));
}

TEST(LearnMmb, ColliderChild) {
    // 0 -> 2 <- 1, 2 -> 3: blanket of 3 is {2}; blanket of 0 includes the co-parent
    MixedGraph g(4);
    g.add_directed(0, 2);
    g.add_directed(1, 2);
    g.add_directed(2, 3);
    CiTester t = oracle_tester(g);
    EXPECT_EQ(learn_mmb(3, t, all_variables(4)), NodeSet{2});
    EXPECT_EQ(learn_mmb(0, t, all_variables(4)), (NodeSet{1, 2}));
}

TEST(LearnMmb, DistrictClosure) {
    // 0 -> 1 <-> 2 <-> 3: collider path from 0 reaches 2 and 3
    MixedGraph g(4);
    g.add_directed(0, 1);
    g.add_bidirected(1, 2);
    g.add_bidirected(2, 3);
    CiTester t = oracle_tester(g);
    EXPECT_EQ(learn_mmb(0, t, all_variables(4)), (NodeSet{1, 2, 3}));
}

TEST(LearnMmb, IsolatedTarget) {
    MixedGraph g(3);
    g.add_directed(0, 1);
    CiTester t = oracle_tester(g);
    EXPECT_TRUE(learn_mmb(2, t, all_variables(3)).empty());
}

TEST(LearnMmb, SequentialAndGroupAgree) {
    for (std::uint64_t s = 0; s < 20; ++s) {
        auto g = hide_latents(gen_dag(14, 3.0, GraphModel::erdos_renyi, s), 0.2, s).graph;
        CiTester a = oracle_tester(g), b = oracle_tester(g);
        DiscoveryOptions seq;
        seq.group_search = false;
        for (VarId v = 0; v < g.num_vars(); ++v)
            EXPECT_EQ(learn_mmb(v, a, all_variables(g.num_vars())), learn_mmb(v, b, all_variables(g.num_vars()), seq));
    }
}

TEST(LocalMag, UnshieldedCollider) {
    MixedGraph g(3);
    g.add_directed(0, 2);
    g.add_directed(1, 2);
    CiTester t = oracle_tester(g);
    auto lg = learn_local_mag(2, t);
    EXPECT_EQ(lg.mark(0, 2), Mark::arrow);
    EXPECT_EQ(lg.mark(1, 2), Mark::arrow);
    auto ls = extract_local_structure(lg, 2);
    EXPECT_EQ(ls.v_structures, (std::vector<VStructure>{{0, 2, 1}}));
}

TEST(LocalMag, PureConfoundingNeverCommitted) {
    MixedGraph g(2);
    g.add_bidirected(0, 1);
    CiTester t = oracle_tester(g);
    auto ls = discover_local(1, t);
    EXPECT_EQ(ls.undecided, NodeSet{0});
    EXPECT_FALSE(ls.direct_causes.count(0));
}

TEST(LocalMag, ConfoundedPairWithInstrumentsIsBidirected) {
    // 2 -> 0 <-> 1 <- 3
    MixedGraph g(4);
    g.add_bidirected(0, 1);
    g.add_directed(2, 0);
    g.add_directed(3, 1);
    CiTester t = oracle_tester(g);
    auto ls = discover_local(0, t);
    EXPECT_EQ(ls.confounded, NodeSet{1});
    EXPECT_TRUE(ls.direct_causes.empty());
    EXPECT_EQ(ls.local_graph.mark(1, 0), Mark::arrow);
    EXPECT_EQ(ls.local_graph.mark(0, 1), Mark::arrow);
}

TEST(LocalMag, ChainHasNoVStructure) {
    MixedGraph g(3);
    g.add_directed(0, 1);
    g.add_directed(1, 2);
    CiTester t = oracle_tester(g);
    auto ls = discover_local(1, t);
    EXPECT_EQ(ls.undecided, (NodeSet{0, 2}));
    EXPECT_TRUE(ls.v_structures.empty());
    check_against_mag(g);
}

TEST(Extract, MarkPatterns) {
    MarkedGraph m(4);
    m.add_edge(0, 3, Mark::tail, Mark::arrow);
    m.add_edge(1, 3, Mark::arrow, Mark::arrow);
    m.add_edge(2, 3, Mark::circle, Mark::arrow);
    m.add_edge(3, 0, Mark::arrow, Mark::tail);  // overwrite: keep only 0 -> 3 semantics below
    m.add_edge(0, 3, Mark::tail, Mark::arrow);
    auto ls = extract_local_structure(m, 3);
    EXPECT_EQ(ls.direct_causes, NodeSet{0});
    EXPECT_EQ(ls.undecided, (NodeSet{1, 2}));
    EXPECT_EQ(ls.confounded, NodeSet{1});
    MarkedGraph e(2);
    e.add_edge(0, 1, Mark::arrow, Mark::tail);
    EXPECT_EQ(extract_local_structure(e, 1).direct_effects, NodeSet{0});
}

TEST(LocalDiscovery, SoundAndCompleteOnRandomAdmgs) {
    for (std::uint64_t s = 0; s < 40; ++s) {
        auto dag = gen_dag(12, s % 2 ? 3.0 : 2.0, GraphModel::erdos_renyi, 500 + s);
        auto g = hide_latents(dag, 0.2, 600 + s).graph;
        check_against_mag(g);
    }
}

TEST(LocalDiscovery, TestCountIndependentOfDistantVariables) {
    // same neighborhood around target 0, padded with an increasing number of
    // isolated chains far away
    auto count_for = [](std::size_t pad) {
        MixedGraph g(4 + pad);
        g.add_directed(1, 0);
        g.add_directed(2, 0);
        g.add_directed(0, 3);
        for (VarId v = 4; v + 1 < 4 + pad; v += 2) g.add_directed(v, v + 1);
        CiTester t(std::make_shared<OracleBackend>(g));
        NodeSet mmb = learn_mmb(0, t, all_variables(g.num_vars()));
        std::uint64_t before = t.count();
        learn_local_mag(0, t, mmb);
        return std::pair{t.count() - before, before};
    };
    auto [fci_small, mb_small] = count_for(10);
    auto [fci_big, mb_big] = count_for(200);
    EXPECT_EQ(fci_small, fci_big);
    EXPECT_LE(mb_big, mb_small + 20);  // halving search grows logarithmically
}

TEST(Merge, ArrowAndTailBeatCircleConflictsBecomeCircle) {
    LocalStructure a, b;
    a.target = 0;
    a.local_graph = MarkedGraph(3);
    a.local_graph.add_edge(0, 1, Mark::circle, Mark::arrow);
    a.local_graph.add_edge(0, 2, Mark::tail, Mark::arrow);
    b.target = 1;
    b.local_graph = MarkedGraph(3);
    b.local_graph.add_edge(0, 1, Mark::tail, Mark::circle);
    LocalStructure c;
    c.target = 2;
    c.local_graph = MarkedGraph(3);
    c.local_graph.add_edge(0, 2, Mark::arrow, Mark::arrow);
    std::vector<MarkConflict> log;
    auto m = merge_local_marks({a, b, c}, 3, &log);
    EXPECT_TRUE(m.is_directed(0, 1));
    EXPECT_EQ(m.mark(2, 0), Mark::circle);
    EXPECT_EQ(m.mark(0, 2), Mark::arrow);
    ASSERT_EQ(log.size(), 1u);
    EXPECT_EQ(log[0].at, 0u);
}

TEST(LearnedGraph, ExpansionIsConservative) {
    MarkedGraph m(4);
    m.add_edge(0, 1, Mark::tail, Mark::arrow);  // invisible: nothing points into 0
    m.add_edge(2, 3, Mark::circle, Mark::circle);
    auto g = learned_graph(m);
    EXPECT_TRUE(g.has_directed(0, 1));
    EXPECT_TRUE(g.has_bidirected(0, 1));
    EXPECT_TRUE(g.has_directed(2, 3));
    EXPECT_TRUE(g.has_directed(3, 2));
    EXPECT_TRUE(g.has_bidirected(2, 3));
}

TEST(LearnedGraph, VisibleEdgeDropsConfounding) {
    MarkedGraph m(3);
    m.add_edge(2, 0, Mark::arrow, Mark::arrow);  // 2 <-> 0, 2 not adjacent to 1
    m.add_edge(0, 1, Mark::tail, Mark::arrow);
    EXPECT_TRUE(visible_edge(m, 0, 1));
    auto g = learned_graph(m);
    EXPECT_TRUE(g.has_directed(0, 1));
    EXPECT_FALSE(g.has_bidirected(0, 1));
}

TEST(LearnedGraph, PlantedChainIsRecoveredWithoutSpuriousConfounding) {
    PlantedConfig cfg;
    cfg.cluster_sizes = {8, 8, 8};
    auto ps = planted_cluster_scm(cfg, 11);
    CiTester t = oracle_tester(ps.truth.graph);
    auto locals = discover_all(t);
    std::vector<MarkConflict> log;
    auto merged = merge_local_marks(locals, 24, &log);
    EXPECT_TRUE(log.empty());
    auto g = learned_graph(merged);
    for (auto [a, b] : ps.truth.graph.directed_edges()) {
        EXPECT_TRUE(g.has_directed(a, b));
        EXPECT_FALSE(g.has_bidirected(a, b)) << a << "->" << b;
    }
    EXPECT_EQ(g.num_directed(), ps.truth.graph.num_directed());
}

TEST(PcSkeleton, MatchesDagSkeleton) {
    auto g = gen_dag(10, 2.0, GraphModel::erdos_renyi, 3);
    CiTester t = oracle_tester(g);
    auto sk = pc_skeleton(t);
    std::set<Edge> expect;
    for (auto [a, b] : g.directed_edges()) expect.insert({std::min(a, b), std::max(a, b)});
    EXPECT_EQ(std::set<Edge>(sk.begin(), sk.end()), expect);
}
