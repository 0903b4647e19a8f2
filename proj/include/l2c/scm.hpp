#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <random>
#include <vector>

#include "l2c/dataset.hpp"
#include "l2c/graph.hpp"
#include "l2c/partition.hpp"

namespace l2c {

enum class GraphModel { erdos_renyi, barabasi_albert };
enum class Mechanism { linear, tanh };
enum class PartitionMode { structural, random };

inline GraphModel graph_model_from_string(const std::string& s) {
    if (s == "er" || s == "erdos_renyi") return GraphModel::erdos_renyi;
    if (s == "ba" || s == "barabasi_albert") return GraphModel::barabasi_albert;
    throw InputError("unknown graph model '" + s + "'");
}

/// Random DAG whose expected average (total) degree is `avg_degree`. Node
/// labels are a random permutation of the generation order, so id order says
/// nothing about causal order.
inline MixedGraph gen_dag(std::size_t p, double avg_degree, GraphModel model, std::uint64_t seed) {
    if (p < 2) throw InputError("gen_dag needs p >= 2");
    if (!(avg_degree >= 1.0)) throw InputError("gen_dag needs avg_degree >= 1");
    if (avg_degree > static_cast<double>(p - 1))
        throw InputError("avg_degree " + std::to_string(avg_degree) + " infeasible for p=" + std::to_string(p));
    std::mt19937_64 rng(seed);
    std::vector<VarId> label(p);
    std::iota(label.begin(), label.end(), 0);
    std::shuffle(label.begin(), label.end(), rng);
    MixedGraph g(p);

    if (model == GraphModel::erdos_renyi) {
        std::bernoulli_distribution edge(avg_degree / static_cast<double>(p - 1));
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = i + 1; j < p; ++j)
                if (edge(rng)) g.add_directed(label[i], label[j]);
        return g;
    }

    // preferential attachment; older nodes point at newer ones
    const std::size_t m = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(avg_degree / 2.0)));
    std::vector<std::size_t> degree(p, 0);
    for (std::size_t t = 1; t < p; ++t) {
        std::size_t want = std::min(m, t);
        std::set<std::size_t> chosen;
        while (chosen.size() < want) {
            std::vector<double> w(t);
            for (std::size_t s = 0; s < t; ++s) w[s] = chosen.count(s) ? 0.0 : static_cast<double>(degree[s] + 1);
            std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
            chosen.insert(pick(rng));
        }
        for (std::size_t s : chosen) {
            g.add_directed(label[s], label[t]);
            ++degree[s];
            ++degree[t];
        }
    }
    return g;
}

struct LatentProjection {
    MixedGraph graph;             // ADMG over observed variables, re-indexed 0..|observed|-1
    std::vector<VarId> observed;  // new id -> original id
    NodeSet latents;              // original ids
};

/// Latent projection of a DAG onto the complement of `latents`: a->b when a
/// directed path from a to b has only latent interior nodes; a<->b when some
/// latent reaches both through latent-only directed paths.
inline LatentProjection hide_latents(const MixedGraph& dag, const NodeSet& latents) {
    dag.check_all(latents);
    if (!is_acyclic(dag)) throw InputError("hide_latents expects a DAG");
    const std::size_t n = dag.num_vars();
    LatentProjection out;
    out.latents = latents;
    std::vector<VarId> pos(n, UINT32_MAX);
    for (VarId v = 0; v < n; ++v)
        if (!latents.count(v)) {
            pos[v] = static_cast<VarId>(out.observed.size());
            out.observed.push_back(v);
        }
    out.graph = MixedGraph(out.observed.size());

    // observed nodes reachable from v through latent-only interiors
    auto reach = [&](VarId v) {
        NodeSet hit;
        std::vector<char> seen(n, 0);
        std::vector<VarId> stack{v};
        while (!stack.empty()) {
            VarId u = stack.back();
            stack.pop_back();
            for (VarId c : dag.children(u)) {
                if (!latents.count(c)) {
                    hit.insert(c);
                } else if (!seen[c]) {
                    seen[c] = 1;
                    stack.push_back(c);
                }
            }
        }
        return hit;
    };

    for (VarId v = 0; v < n; ++v) {
        NodeSet hit = reach(v);
        if (!latents.count(v)) {
            for (VarId c : hit) out.graph.add_directed(pos[v], pos[c]);
        } else {
            std::vector<VarId> h(hit.begin(), hit.end());
            for (std::size_t i = 0; i < h.size(); ++i)
                for (std::size_t j = i + 1; j < h.size(); ++j) out.graph.add_bidirected(pos[h[i]], pos[h[j]]);
        }
    }
    // bidirected edges already present in the input survive between observed nodes
    for (auto [a, b] : dag.bidirected_edges())
        if (pos[a] != UINT32_MAX && pos[b] != UINT32_MAX) out.graph.add_bidirected(pos[a], pos[b]);
    return out;
}

/// Hides round(fraction * p) uniformly chosen nodes.
inline LatentProjection hide_latents(const MixedGraph& dag, double fraction, std::uint64_t seed) {
    if (!(fraction >= 0.0 && fraction < 1.0)) throw InputError("latent fraction must lie in [0, 1)");
    std::mt19937_64 rng(seed);
    std::vector<VarId> ids(dag.num_vars());
    std::iota(ids.begin(), ids.end(), 0);
    std::shuffle(ids.begin(), ids.end(), rng);
    auto k = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(dag.num_vars())));
    return hide_latents(dag, NodeSet(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k)));
}

/// Structural causal model over observed and latent variables.
struct Scm {
    MixedGraph graph;                                          // DAG over all variables
    std::vector<std::vector<std::pair<VarId, double>>> coef;   // coef[v] = (parent, weight)
    std::vector<double> noise_mean;
    std::vector<double> noise_var;
    NodeSet latents;
    Mechanism mechanism = Mechanism::linear;

    std::size_t num_vars() const { return graph.num_vars(); }

    std::vector<VarId> observed() const {
        std::vector<VarId> out;
        for (VarId v = 0; v < num_vars(); ++v)
            if (!latents.count(v)) out.push_back(v);
        return out;
    }

    double coefficient(VarId parent, VarId child) const {
        for (auto [p, w] : coef.at(child))
            if (p == parent) return w;
        return 0.0;
    }

    void validate() const {
        if (!is_acyclic(graph)) throw InputError("SCM graph has a directed cycle");
        if (graph.num_bidirected()) throw InputError("SCM graph must not contain bidirected edges");
        if (coef.size() != num_vars() || noise_mean.size() != num_vars() || noise_var.size() != num_vars())
            throw InputError("SCM parameter arrays do not match the graph");
        for (VarId v = 0; v < num_vars(); ++v) {
            if (!(noise_var[v] > 0)) throw InputError("noise variance must be positive");
            if (coef[v].size() != graph.parents(v).size()) throw InputError("mechanism/parent mismatch");
            for (auto [p, w] : coef[v])
                if (!graph.has_directed(p, v)) throw InputError("mechanism references a non-parent");
        }
        graph.check_all(latents);
    }

    LatentProjection projection() const { return hide_latents(graph, latents); }
};

struct ScmOptions {
    Mechanism mechanism = Mechanism::linear;
    double coef_min = 0.5;
    double coef_max = 1.5;
    double noise_var = 1.0;
    // make a->c cancel a->b->c on the first triangle found per child
    bool cancel_triangles = false;
};

inline Scm make_scm(const MixedGraph& dag, const NodeSet& latents, std::uint64_t seed, const ScmOptions& opt = {}) {
    Scm s;
    s.graph = dag;
    s.latents = latents;
    s.mechanism = opt.mechanism;
    s.coef.resize(dag.num_vars());
    s.noise_mean.assign(dag.num_vars(), 0.0);
    s.noise_var.assign(dag.num_vars(), opt.noise_var);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> mag(opt.coef_min, opt.coef_max);
    std::bernoulli_distribution sign(0.5);
    for (VarId v = 0; v < dag.num_vars(); ++v)
        for (VarId p : dag.parents(v)) s.coef[v].emplace_back(p, (sign(rng) ? 1.0 : -1.0) * mag(rng));
    if (opt.cancel_triangles) {
        for (VarId c = 0; c < dag.num_vars(); ++c) {
            bool done = false;
            for (VarId b : dag.parents(c)) {
                for (VarId a : dag.parents(b)) {
                    if (done || !dag.has_directed(a, c)) continue;
                    for (auto& [p, w] : s.coef[c])
                        if (p == a) w = -s.coefficient(a, b) * s.coefficient(b, c);
                    done = true;
                }
            }
        }
    }
    s.validate();
    return s;
}

namespace detail {

inline Dataset simulate(const Scm& scm, const std::map<VarId, double>& fixed, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw InputError("sample size must be at least 1");
    scm.validate();
    const auto rows = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd all(rows, static_cast<Eigen::Index>(scm.num_vars()));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> std_normal(0.0, 1.0);
    for (VarId v : topological_order(scm.graph)) {
        auto col = all.col(v);
        // draw noise even for intervened variables so other columns keep their draws
        for (Eigen::Index i = 0; i < rows; ++i)
            col(i) = scm.noise_mean[v] + std::sqrt(scm.noise_var[v]) * std_normal(rng);
        if (auto it = fixed.find(v); it != fixed.end()) {
            col.setConstant(it->second);
            continue;
        }
        for (auto [p, w] : scm.coef[v]) {
            if (scm.mechanism == Mechanism::linear) col += w * all.col(p);
            else col += (w * all.col(p)).array().tanh().matrix();
        }
    }
    Dataset d;
    auto obs = scm.observed();
    d.values.resize(rows, static_cast<Eigen::Index>(obs.size()));
    for (std::size_t j = 0; j < obs.size(); ++j) {
        d.values.col(static_cast<Eigen::Index>(j)) = all.col(obs[j]);
        d.names.push_back("V" + std::to_string(j));
    }
    return d;
}

}  // namespace detail

/// Ancestral sampling; latent columns are dropped. Column j holds observed()[j].
inline Dataset sample(const Scm& scm, std::size_t n, std::uint64_t seed) { return detail::simulate(scm, {}, n, seed); }

/// Sampling under do(v = value) for each entry; keys are SCM variable ids.
inline Dataset intervene_sample(const Scm& scm, const std::map<VarId, double>& do_values, std::size_t n,
                                std::uint64_t seed) {
    for (auto [v, val] : do_values) {
        scm.graph.check(v);
        if (scm.latents.count(v)) throw InputError("cannot intervene on latent variable " + std::to_string(v));
    }
    return detail::simulate(scm, do_values, n, seed);
}

/// Exact means of every SCM variable under the given interventions (linear SCMs).
inline std::vector<double> linear_means(const Scm& scm, const std::map<VarId, double>& do_values = {}) {
    if (scm.mechanism != Mechanism::linear) throw ContractError("linear_means needs a linear SCM");
    std::vector<double> mu(scm.num_vars(), 0.0);
    for (VarId v : topological_order(scm.graph)) {
        if (auto it = do_values.find(v); it != do_values.end()) {
            mu[v] = it->second;
            continue;
        }
        mu[v] = scm.noise_mean[v];
        for (auto [p, w] : scm.coef[v]) mu[v] += w * mu[p];
    }
    return mu;
}

/// Moral skeleton: directed and bidirected adjacencies plus married co-parents.
inline std::vector<std::vector<VarId>> moral_neighbors(const MixedGraph& g) {
    std::vector<NodeSet> nb(g.num_vars());
    auto link = [&](VarId a, VarId b) {
        if (a == b) return;
        nb[a].insert(b);
        nb[b].insert(a);
    };
    for (VarId v = 0; v < g.num_vars(); ++v) {
        for (VarId c : g.children(v)) link(v, c);
        for (VarId s : g.spouses(v)) link(v, s);
        const auto& pa = g.parents(v);
        for (std::size_t i = 0; i < pa.size(); ++i)
            for (std::size_t j = i + 1; j < pa.size(); ++j) link(pa[i], pa[j]);
    }
    std::vector<std::vector<VarId>> out;
    for (auto& s : nb) out.emplace_back(s.begin(), s.end());
    return out;
}

/// Ground-truth style partition of a graph's variables into k clusters.
///
/// structural: connected components of the moral skeleton, packed largest
/// first into k groups; when there are fewer components than k, the largest
/// group is split in two by breadth-first order from a random member.
/// random: uniform assignment with every cluster non-empty.
inline Partition planted_partition(const MixedGraph& g, std::size_t k, PartitionMode mode, std::uint64_t seed) {
    const std::size_t p = g.num_vars();
    if (k < 1) throw InputError("planted_partition needs k >= 1");
    if (k > p) throw InputError("planted_partition: k=" + std::to_string(k) + " exceeds p=" + std::to_string(p));
    std::mt19937_64 rng(seed);

    if (mode == PartitionMode::random) {
        std::vector<VarId> ids(p);
        std::iota(ids.begin(), ids.end(), 0);
        std::shuffle(ids.begin(), ids.end(), rng);
        std::vector<std::size_t> label(p);
        std::uniform_int_distribution<std::size_t> pick(0, k - 1);
        for (std::size_t i = 0; i < p; ++i) label[ids[i]] = i < k ? i : pick(rng);
        return Partition::from_labels(label);
    }

    auto nb = moral_neighbors(g);
    std::vector<std::vector<VarId>> comps;
    {
        std::vector<char> seen(p, 0);
        for (VarId s = 0; s < p; ++s) {
            if (seen[s]) continue;
            std::vector<VarId> comp{s}, stack{s};
            seen[s] = 1;
            while (!stack.empty()) {
                VarId u = stack.back();
                stack.pop_back();
                for (VarId w : nb[u])
                    if (!seen[w]) {
                        seen[w] = 1;
                        comp.push_back(w);
                        stack.push_back(w);
                    }
            }
            std::sort(comp.begin(), comp.end());
            comps.push_back(std::move(comp));
        }
    }
    std::vector<std::vector<VarId>> groups;
    if (comps.size() >= k) {
        std::stable_sort(comps.begin(), comps.end(), [](auto& a, auto& b) { return a.size() > b.size(); });
        groups.resize(k);
        for (auto& c : comps) {
            auto smallest = std::min_element(groups.begin(), groups.end(),
                                             [](auto& a, auto& b) { return a.size() < b.size(); });
            smallest->insert(smallest->end(), c.begin(), c.end());
        }
    } else {
        groups = comps;
        while (groups.size() < k) {
            auto big = std::max_element(groups.begin(), groups.end(),
                                        [](auto& a, auto& b) { return a.size() < b.size(); });
            std::vector<VarId> group = std::move(*big);
            groups.erase(big);
            NodeSet inside(group.begin(), group.end());
            std::uniform_int_distribution<std::size_t> start(0, group.size() - 1);
            // BFS restricted to the group; unreachable members are appended in id order
            std::vector<VarId> order;
            std::set<VarId> seen;
            std::deque<VarId> queue{group[start(rng)]};
            seen.insert(queue.front());
            while (order.size() < group.size()) {
                if (queue.empty()) {
                    for (VarId v : group)
                        if (!seen.count(v)) {
                            queue.push_back(v);
                            seen.insert(v);
                            break;
                        }
                }
                VarId u = queue.front();
                queue.pop_front();
                order.push_back(u);
                for (VarId w : nb[u])
                    if (inside.count(w) && seen.insert(w).second) queue.push_back(w);
            }
            std::size_t half = order.size() / 2;
            groups.emplace_back(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(half));
            groups.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(half), order.end());
        }
    }
    std::vector<std::size_t> label(p);
    for (std::size_t c = 0; c < groups.size(); ++c)
        for (VarId v : groups[c]) label[v] = c;
    return Partition::from_labels(label);
}

inline PartitionMode partition_mode_from_string(const std::string& s) {
    if (s == "structural") return PartitionMode::structural;
    if (s == "random") return PartitionMode::random;
    throw InputError("unknown partition mode '" + s + "'");
}

/// Layered cluster model used for cluster-recovery and scaling experiments.
///
/// Clusters form a chain C1 -> C2 -> ... -> Ck with no edges inside a
/// cluster. Every member of C(j+1) has `parents_per_node` parents in Cj and
/// every member of a non-final cluster has at least one child. With
/// `latent_ring`, latent L_i confounds consecutive members a_i, a_(i+1) of C1
/// (cyclically), and no member of C2 has two ring-consecutive parents. The
/// ring makes each C1 member an unshielded collider, so its outgoing edges
/// are orientable from independence facts alone.
struct PlantedConfig {
    std::vector<std::size_t> cluster_sizes{10, 10, 10, 10};
    std::size_t parents_per_node = 2;
    bool latent_ring = true;
    ScmOptions scm{};
};

struct PlantedScm {
    Scm scm;                  // observed ids 0..P-1 in cluster order, latents after
    LatentProjection truth;   // ADMG over observed ids (identical numbering)
    Partition partition;      // over observed ids
};

inline PlantedScm planted_cluster_scm(const PlantedConfig& cfg, std::uint64_t seed) {
    const auto& sz = cfg.cluster_sizes;
    if (sz.empty()) throw InputError("planted model needs at least one cluster");
    for (auto s : sz)
        if (s == 0) throw InputError("planted cluster of size 0");
    const std::size_t r = cfg.parents_per_node;
    if (r < 1) throw InputError("parents_per_node must be >= 1");
    std::size_t observed = std::accumulate(sz.begin(), sz.end(), std::size_t{0});
    const bool ring = cfg.latent_ring && sz[0] >= 4;
    // C1 is cut into latent rings of 4..7 consecutive members
    std::vector<std::pair<std::size_t, std::size_t>> blocks;  // [begin, end)
    if (ring) {
        for (std::size_t b = 0; b + 4 <= sz[0]; b += 4) blocks.emplace_back(b, b + 4);
        blocks.back().second = sz[0];
    }
    if (ring && sz.size() > 1) {
        std::size_t indep = 0;
        for (auto [b, e] : blocks) indep += (e - b) / 2;
        if (std::min(r, sz[0]) > indep) throw InputError("latent rings leave too few non-adjacent parents in C1");
    }
    std::size_t total = observed + (ring ? sz[0] : 0);

    std::vector<std::vector<VarId>> members(sz.size());
    std::vector<ClusterId> assignment;
    VarId next = 0;
    for (std::size_t c = 0; c < sz.size(); ++c)
        for (std::size_t i = 0; i < sz[c]; ++i) {
            members[c].push_back(next++);
            assignment.push_back(static_cast<ClusterId>(c));
        }

    std::mt19937_64 rng(seed);
    MixedGraph dag(total);
    NodeSet latents;
    std::vector<std::size_t> ring_next(sz[0]);  // successor of each C1 member on its ring
    for (auto [b, e] : blocks)
        for (std::size_t i = b; i < e; ++i) {
            ring_next[i] = i + 1 == e ? b : i + 1;
            VarId l = static_cast<VarId>(observed + i);
            latents.insert(l);
            dag.add_directed(l, members[0][i]);
            dag.add_directed(l, members[0][ring_next[i]]);
        }
    for (std::size_t c = 1; c < sz.size(); ++c) {
        // member t takes `want` cyclically consecutive members of a shuffled
        // previous cluster, windows of neighbours overlap
        const auto& from = members[c - 1];
        const std::size_t prev = from.size(), cur = members[c].size();
        const std::size_t want = std::min(r, prev);
        std::vector<std::vector<std::size_t>> windows(cur);
        std::vector<char> covered(prev, 0);
        for (std::size_t t = 0; t < cur; ++t)
            for (std::size_t i = 0; i < want; ++i) {
                std::size_t pos = (t * prev / cur + i) % prev;
                windows[t].push_back(pos);
                covered[pos] = 1;
            }
        if (!std::all_of(covered.begin(), covered.end(), [](char x) { return x != 0; }))
            throw InputError("cannot give every member of cluster " + std::to_string(c) +
                             " a child; enlarge the next cluster");
        std::vector<std::size_t> perm(prev);
        std::iota(perm.begin(), perm.end(), 0);
        auto ring_ok = [&] {
            if (!ring || c != 1) return true;
            for (const auto& w : windows)
                for (auto x : w)
                    for (auto y : w)
                        if (x != y && ring_next[perm[x]] == perm[y]) return false;
            return true;
        };
        bool ok = false;
        for (int attempt = 0; attempt < 10000 && !ok; ++attempt) {
            std::shuffle(perm.begin(), perm.end(), rng);
            ok = ring_ok();
        }
        if (!ok) throw InputError("no parent layout keeps C2 parents off the latent rings; use larger clusters");
        for (std::size_t t = 0; t < cur; ++t)
            for (auto pos : windows[t]) dag.add_directed(from[perm[pos]], members[c][t]);
    }

    PlantedScm out;
    out.scm = make_scm(dag, latents, seed ^ 0x5bd1e995ULL, cfg.scm);
    out.truth = hide_latents(dag, latents);
    out.partition = Partition(assignment);
    return out;
}

}  // namespace l2c
