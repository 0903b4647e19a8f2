#include <gtest/gtest.h>

#include <random>

#include "l2c/ci.hpp"
#include "l2c/scm.hpp"
#include "oracles.hpp"

using namespace l2c;

TEST(GenDag, ErdosRenyiEdgeCountAndAcyclic) {
    double total = 0;
    for (std::uint64_t s = 0; s < 40; ++s) {
        auto g = gen_dag(50, 2.0, GraphModel::erdos_renyi, s);
        EXPECT_TRUE(is_acyclic(g));
        total += static_cast<double>(g.num_directed());
    }
    EXPECT_NEAR(total / 40.0, 50.0, 4.0);
}

TEST(GenDag, BarabasiAlbertDegree) {
    auto g = gen_dag(100, 4.0, GraphModel::barabasi_albert, 3);
    EXPECT_TRUE(is_acyclic(g));
    EXPECT_EQ(g.num_directed(), 1u + 2u * 98u);
}

TEST(GenDag, SmallAndDeterministic) {
    auto g = gen_dag(2, 1.0, GraphModel::erdos_renyi, 1);
    EXPECT_LE(g.num_directed(), 1u);
    EXPECT_EQ(gen_dag(30, 3.0, GraphModel::erdos_renyi, 9), gen_dag(30, 3.0, GraphModel::erdos_renyi, 9));
    EXPECT_EQ(gen_dag(30, 3.0, GraphModel::barabasi_albert, 9), gen_dag(30, 3.0, GraphModel::barabasi_albert, 9));
}

TEST(GenDag, Errors) {
    EXPECT_THROW(gen_dag(1, 1.0, GraphModel::erdos_renyi, 0), InputError);
    EXPECT_THROW(gen_dag(5, 0.5, GraphModel::erdos_renyi, 0), InputError);
    EXPECT_THROW(gen_dag(5, 7.0, GraphModel::erdos_renyi, 0), InputError);
}

TEST(HideLatents, ZeroFractionIsIdentity) {
    auto g = gen_dag(12, 2.0, GraphModel::erdos_renyi, 4);
    auto p = hide_latents(g, 0.0, 1);
    EXPECT_EQ(p.graph, g);
    EXPECT_TRUE(p.latents.empty());
}

TEST(HideLatents, ConfounderBecomesBidirected) {
    MixedGraph g(3);
    g.add_directed(0, 1);
    g.add_directed(0, 2);
    auto p = hide_latents(g, NodeSet{0});
    EXPECT_EQ(p.observed, (std::vector<VarId>{1, 2}));
    EXPECT_TRUE(p.graph.has_bidirected(0, 1));
    EXPECT_EQ(p.graph.num_directed(), 0u);
}

TEST(HideLatents, MatchesPathEnumeration) {
    for (std::uint64_t s = 0; s < 100; ++s) {
        auto g = gen_dag(10, 2.5, GraphModel::erdos_renyi, s);
        auto p = hide_latents(g, 0.2, s + 1000);
        EXPECT_EQ(p.latents.size(), 2u);
        EXPECT_TRUE(is_acyclic(p.graph));
        EXPECT_EQ(p.graph, oracle::latent_projection_by_paths(g, p.latents));
    }
}

TEST(HideLatents, MediatorBecomesDirected) {
    MixedGraph g(3);
    g.add_directed(0, 1);
    g.add_directed(1, 2);
    auto p = hide_latents(g, NodeSet{1});
    EXPECT_TRUE(p.graph.has_directed(0, 1));
}

TEST(Sample, IndependentColumnsWithoutEdges) {
    Scm scm = make_scm(MixedGraph(3), {}, 1);
    Dataset d = sample(scm, 20000, 2);
    Eigen::MatrixXd c = detail::correlation_matrix(d.values);
    EXPECT_LT(std::abs(c(0, 1)), 0.03);
    EXPECT_NEAR((d.values.col(0).array() - d.values.col(0).mean()).square().mean(), 1.0, 0.05);
}

TEST(Sample, RegressionSlopeRecoversCoefficient) {
    MixedGraph g(2);
    g.add_directed(0, 1);
    Scm scm = make_scm(g, {}, 1);
    scm.coef[1] = {{0, 2.0}};
    Dataset d = sample(scm, 10000, 5);
    Eigen::VectorXd x = d.values.col(0).array() - d.values.col(0).mean();
    Eigen::VectorXd y = d.values.col(1).array() - d.values.col(1).mean();
    double slope = x.dot(y) / x.dot(x);
    double se = std::sqrt(1.0 / x.dot(x));
    EXPECT_NEAR(slope, 2.0, 3 * se);
    EXPECT_EQ(sample(scm, 50, 9).values, sample(scm, 50, 9).values);
}

TEST(Intervene, DoZeroOnCause) {
    MixedGraph g(2);
    g.add_directed(0, 1);
    Scm scm = make_scm(g, {}, 1);
    scm.coef[1] = {{0, 2.0}};
    Dataset d = intervene_sample(scm, {{0, 0.0}}, 10000, 3);
    EXPECT_NEAR(d.values.col(1).mean(), 0.0, 3.0 / std::sqrt(10000.0));
    EXPECT_DOUBLE_EQ(d.values.col(0).maxCoeff(), 0.0);
}

TEST(Intervene, SinkLeavesOthersUnchanged) {
    MixedGraph g(3);
    g.add_directed(0, 1);
    g.add_directed(1, 2);
    Scm scm = make_scm(g, {}, 1);
    Dataset obs = sample(scm, 100, 4), itv = intervene_sample(scm, {{2, 5.0}}, 100, 4);
    EXPECT_EQ(obs.values.leftCols(2), itv.values.leftCols(2));
}

TEST(Intervene, ConfoundedBowBiasesRegression) {
    // latent 2 confounds 0 and 1; 0 -> 1 with unit effect
    MixedGraph g(3);
    g.add_directed(0, 1);
    g.add_directed(2, 0);
    g.add_directed(2, 1);
    Scm scm = make_scm(g, {2}, 1);
    scm.coef[1] = {{0, 1.0}, {2, 1.0}};
    scm.coef[0] = {{2, 1.0}};
    Dataset obs = sample(scm, 20000, 7);
    Eigen::VectorXd x = obs.values.col(0).array() - obs.values.col(0).mean();
    Eigen::VectorXd y = obs.values.col(1).array() - obs.values.col(1).mean();
    double ols = x.dot(y) / x.dot(x);
    EXPECT_NEAR(ols, 1.5, 0.05);  // 1 + cov(L, X) / var(X) = 1 + 1/2
    double m1 = intervene_sample(scm, {{0, 1.0}}, 20000, 8).values.col(1).mean();
    double m0 = intervene_sample(scm, {{0, 0.0}}, 20000, 8).values.col(1).mean();
    EXPECT_NEAR(m1 - m0, 1.0, 0.01);
    EXPECT_THROW(intervene_sample(scm, {{2, 0.0}}, 10, 1), InputError);
}

TEST(Intervene, LinearMeansMatchSimulation) {
    auto g = gen_dag(8, 2.0, GraphModel::erdos_renyi, 12);
    Scm scm = make_scm(g, {}, 13);
    auto mu = linear_means(scm, {{3, 2.0}});
    Dataset d = intervene_sample(scm, {{3, 2.0}}, 20000, 14);
    for (VarId v = 0; v < 8; ++v) EXPECT_NEAR(d.values.col(v).mean(), mu[v], 0.1);
}

TEST(Sample, CiStructureMatchesOracle) {
    std::size_t agree = 0, total = 0;
    for (std::uint64_t s = 0; s < 5; ++s) {
        auto dag = gen_dag(10, 2.0, GraphModel::erdos_renyi, 50 + s);
        auto proj = hide_latents(dag, 0.2, 60 + s);
        Scm scm = make_scm(dag, proj.latents, 70 + s);
        Dataset d = sample(scm, 10000, 80 + s);
        FisherZBackend fz(d, 0.01);
        OracleBackend orc(proj.graph);
        for (VarId a = 0; a < 8; ++a)
            for (VarId b = a + 1; b < 8; ++b)
                for (VarId c = 0; c < 8; ++c) {
                    if (c == a || c == b) continue;
                    ++total;
                    agree += fz.run(a, {b}, {c}).independent == orc.run(a, {b}, {c}).independent;
                }
    }
    EXPECT_GE(static_cast<double>(agree) / static_cast<double>(total), 0.95);
}

TEST(PlantedPartition, Extremes) {
    auto g = gen_dag(10, 2.0, GraphModel::erdos_renyi, 1);
    EXPECT_EQ(planted_partition(g, 10, PartitionMode::structural, 1).num_clusters(), 10u);
    EXPECT_EQ(planted_partition(g, 1, PartitionMode::structural, 1).num_clusters(), 1u);
    EXPECT_EQ(planted_partition(g, 10, PartitionMode::random, 1).num_clusters(), 10u);
    EXPECT_THROW(planted_partition(g, 11, PartitionMode::random, 1), InputError);
    EXPECT_THROW(planted_partition(g, 0, PartitionMode::random, 1), InputError);
}

TEST(PlantedPartition, StructuralFindsComponents) {
    MixedGraph g(6);
    g.add_directed(0, 2);
    g.add_directed(2, 4);
    g.add_directed(1, 3);
    g.add_bidirected(3, 5);
    auto p = planted_partition(g, 2, PartitionMode::structural, 3);
    EXPECT_EQ(p.members(0), (std::vector<VarId>{0, 2, 4}));
    EXPECT_EQ(p.members(1), (std::vector<VarId>{1, 3, 5}));
}

TEST(PlantedPartition, RandomIsDeterministicAndCovering) {
    auto g = gen_dag(20, 2.0, GraphModel::erdos_renyi, 1);
    auto a = planted_partition(g, 4, PartitionMode::random, 5);
    EXPECT_EQ(a, planted_partition(g, 4, PartitionMode::random, 5));
    EXPECT_EQ(a.num_clusters(), 4u);
    EXPECT_EQ(a.num_vars(), 20u);
}

TEST(PlantedScm, LayeredStructure) {
    PlantedConfig cfg;
    auto ps = planted_cluster_scm(cfg, 3);
    const auto& g = ps.truth.graph;
    EXPECT_EQ(g.num_vars(), 40u);
    EXPECT_TRUE(is_acyclic(g));
    EXPECT_EQ(g.num_bidirected(), 10u);  // rings of 4 and 6 over C1
    for (VarId v = 0; v < 40; ++v) {
        ClusterId c = ps.partition.of(v);
        if (c > 0) {
            EXPECT_EQ(g.parents(v).size(), 2u);
            for (VarId p : g.parents(v)) EXPECT_EQ(ps.partition.of(p), c - 1);
        }
        if (c < 3) {
            EXPECT_FALSE(g.children(v).empty());
        }
    }
    // no member of C2 has ring-consecutive parents
    for (VarId v : ps.partition.members(1))
        for (VarId a : g.parents(v))
            for (VarId b : g.parents(v)) EXPECT_FALSE(g.has_bidirected(a, b));
}

TEST(PlantedScm, LargeFirstClusterKeepsDistrictsSmall) {
    PlantedConfig cfg;
    cfg.cluster_sizes = {25, 25};
    auto ps = planted_cluster_scm(cfg, 1);
    const auto& g = ps.truth.graph;
    for (VarId v : ps.partition.members(0)) {
        NodeSet district{v}, frontier{v};
        while (!frontier.empty()) {
            NodeSet nxt;
            for (VarId a : frontier)
                for (VarId b : g.spouses(a))
                    if (district.insert(b).second) nxt.insert(b);
            frontier = nxt;
        }
        EXPECT_GE(district.size(), 4u);
        EXPECT_LE(district.size(), 7u);
    }
}
