#pragma once

#include <map>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

#include "l2c/errors.hpp"
#include "l2c/graph.hpp"
#include "l2c/local_discovery.hpp"
#include "l2c/partition.hpp"

namespace l2c {

/// Mixed graph over clusters. Directed self-loops are allowed; `sizes[c]` is
/// the number of micro variables in cluster c.
struct ClusterGraph {
    std::vector<std::size_t> sizes;
    MixedGraph graph{0, true};
    std::vector<std::string> names;

    ClusterGraph() = default;
    explicit ClusterGraph(std::vector<std::size_t> s, std::vector<std::string> n = {})
        : sizes(std::move(s)), graph(sizes.size(), true), names(std::move(n)) {
        for (std::size_t c = 0; c < sizes.size(); ++c)
            if (sizes[c] == 0) throw InputError("cluster " + std::to_string(c) + " has size 0");
        if (!names.empty() && names.size() != sizes.size()) throw InputError("cluster name count does not match clusters");
    }

    std::size_t num_clusters() const { return sizes.size(); }
    std::string name(ClusterId c) const {
        graph.check(c);
        return names.empty() ? "C" + std::to_string(c + 1) : names[c];
    }
    ClusterId find(const std::string& n) const {
        for (ClusterId c = 0; c < num_clusters(); ++c)
            if (name(c) == n) return c;
        throw InputError("unknown cluster '" + n + "'");
    }
    bool has_self_loop(ClusterId c) const { return graph.has_directed(c, c); }

    friend bool operator==(const ClusterGraph& a, const ClusterGraph& b) {
        return a.sizes == b.sizes && a.graph == b.graph;
    }
};

/// Symmetric non-negative weights over variable pairs; zero weights are not stored.
class SimilarityGraph {
public:
    SimilarityGraph() = default;
    explicit SimilarityGraph(std::size_t n) : n_(n) {}

    std::size_t num_vars() const { return n_; }

    void set(VarId a, VarId b, double w) {
        if (a >= n_ || b >= n_ || a == b) throw InputError("bad similarity pair");
        if (w < 0) throw InputError("similarity weights must be non-negative");
        auto key = std::minmax(a, b);
        if (w == 0) w_.erase(key);
        else w_[key] = w;
    }
    double weight(VarId a, VarId b) const {
        auto it = w_.find(std::minmax(a, b));
        return it == w_.end() ? 0.0 : it->second;
    }
    const std::map<std::pair<VarId, VarId>, double>& weights() const { return w_; }

private:
    std::size_t n_ = 0;
    std::map<std::pair<VarId, VarId>, double> w_;
};

struct SimilarityWeights {
    double parents = 1.0;
    double children = 1.0;
    double vpatterns = 0.5;
};

// Jaccard index; two empty sets count as no evidence of similarity.
template <class Set>
double jaccard(const Set& a, const Set& b) {
    if (a.empty() && b.empty()) return 0.0;
    std::size_t inter = 0;
    for (const auto& x : a) inter += b.count(x);
    return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

inline constexpr VarId kSelf = UINT32_MAX;

using VPattern = std::tuple<VarId, VarId, Mark>;

/// (collider, far end, mark at the far end) signatures of a target's
/// v-structures; kSelf marks the target itself as the collider.
inline std::set<VPattern> vpatterns(const LocalStructure& ls) {
    std::set<VPattern> out;
    const auto& g = ls.local_graph;
    auto far_mark = [&](VarId far, VarId z) { return g.mark(z, far); };
    for (const auto& v : ls.v_structures) {
        if (v.z == ls.target) {
            out.emplace(kSelf, v.x, far_mark(v.x, v.z));
            out.emplace(kSelf, v.y, far_mark(v.y, v.z));
        } else if (v.x == ls.target) {
            out.emplace(v.z, v.y, far_mark(v.y, v.z));
        } else if (v.y == ls.target) {
            out.emplace(v.z, v.x, far_mark(v.x, v.z));
        }
    }
    return out;
}

inline SimilarityGraph build_similarity(const std::vector<LocalStructure>& locals, const SimilarityWeights& w = {}) {
    VarId n = 0;
    for (const auto& ls : locals) n = std::max<VarId>(n, ls.target + 1);
    std::vector<int> seen(n, -1);
    for (std::size_t i = 0; i < locals.size(); ++i) {
        if (seen[locals[i].target] >= 0)
            throw InputError("duplicate local structure for variable " + std::to_string(locals[i].target));
        seen[locals[i].target] = static_cast<int>(i);
    }
    SimilarityGraph sim(n);
    std::vector<std::set<VPattern>> vp;
    for (const auto& ls : locals) vp.push_back(vpatterns(ls));
    for (std::size_t i = 0; i < locals.size(); ++i)
        for (std::size_t j = i + 1; j < locals.size(); ++j) {
            const auto &a = locals[i], &b = locals[j];
            double s = w.parents * jaccard(a.direct_causes, b.direct_causes) +
                       w.children * jaccard(a.direct_effects, b.direct_effects) +
                       w.vpatterns * jaccard(vp[i], vp[j]);
            if (s > 0) sim.set(a.target, b.target, s);
        }
    return sim;
}

enum class ClusterMethod { components, label_propagation };

inline ClusterMethod cluster_method_from_string(const std::string& s) {
    if (s == "components") return ClusterMethod::components;
    if (s == "label_propagation" || s == "lpa") return ClusterMethod::label_propagation;
    throw InputError("unknown clustering method '" + s + "'");
}

inline const char* to_string(ClusterMethod m) {
    return m == ClusterMethod::components ? "components" : "label_propagation";
}

inline Partition cluster(const SimilarityGraph& sim, double threshold, ClusterMethod method) {
    if (!(threshold >= 0)) throw InputError("threshold must be >= 0");
    const std::size_t n = sim.num_vars();
    std::vector<std::vector<std::pair<VarId, double>>> adj(n);
    for (const auto& [key, w] : sim.weights())
        if (w >= threshold) {
            adj[key.first].emplace_back(key.second, w);
            adj[key.second].emplace_back(key.first, w);
        }
    std::vector<VarId> label(n);
    std::iota(label.begin(), label.end(), 0);
    if (method == ClusterMethod::components) {
        std::function<VarId(VarId)> find = [&](VarId v) { return label[v] == v ? v : label[v] = find(label[v]); };
        for (VarId a = 0; a < n; ++a)
            for (auto [b, w] : adj[a]) {
                VarId ra = find(a), rb = find(b);
                if (ra != rb) label[std::max(ra, rb)] = std::min(ra, rb);
            }
        for (VarId v = 0; v < n; ++v) label[v] = find(v);
    } else {
        for (int round = 0; round < 100; ++round) {
            std::vector<VarId> next = label;
            for (VarId v = 0; v < n; ++v) {
                if (adj[v].empty()) continue;
                std::map<VarId, double> score;
                for (auto [u, w] : adj[v]) score[label[u]] += w;
                VarId best = label[v];
                double top = -1;
                for (auto [l, s] : score)  // ascending labels: strict > keeps the lowest on ties
                    if (s > top + 1e-12) {
                        top = s;
                        best = l;
                    }
                next[v] = best;
            }
            if (next == label) break;
            label = std::move(next);
        }
    }
    return Partition::from_labels(label);
}

/// Cluster graph induced by a micro graph: Ci -> Cj when some member of Ci
/// points at a member of Cj (i == j gives a self-loop); Ci <-> Cj for a cross
/// bidirected edge. Bidirected edges inside one cluster have no cluster-level
/// counterpart and are dropped.
inline ClusterGraph derive_cdag(const MixedGraph& g, const Partition& p) {
    if (p.num_vars() != g.num_vars())
        throw InputError("partition covers " + std::to_string(p.num_vars()) + " variables, graph has " +
                         std::to_string(g.num_vars()));
    ClusterGraph cg(p.cluster_sizes(), p.names());
    for (auto [t, h] : g.directed_edges()) cg.graph.add_directed(p.of(t), p.of(h));
    for (auto [a, b] : g.bidirected_edges())
        if (p.of(a) != p.of(b)) cg.graph.add_bidirected(p.of(a), p.of(b));
    return cg;
}

}  // namespace l2c
