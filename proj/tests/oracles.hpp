#pragma once

// Reference implementations used only by tests. They follow textbook
// definitions by brute force and share no code with the library beyond the
// graph containers.

#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <vector>

#include "l2c/l2c.hpp"

namespace oracle {

using l2c::Edge;
using l2c::MixedGraph;
using l2c::NodeSet;
using l2c::VarId;

/// Random mixed graph; with `acyclic`, directed edges follow a random order.
inline MixedGraph random_mixed(std::size_t n, double p_dir, double p_bi, bool acyclic, std::mt19937_64& rng) {
    MixedGraph g(n);
    std::vector<VarId> order(n);
    for (VarId i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::bernoulli_distribution dir(p_dir), bi(p_bi), flip(0.5);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            VarId a = order[i], b = order[j];
            if (dir(rng)) {
                if (acyclic || !flip(rng)) g.add_directed(a, b);
                else g.add_directed(b, a);
            }
            if (!acyclic && dir(rng) && flip(rng)) g.add_directed(b, a);
            if (bi(rng)) g.add_bidirected(a, b);
        }
    return g;
}

/// Nodes with a directed path into s, by repeated relaxation over the edge list.
inline NodeSet ancestors_by_relaxation(const MixedGraph& g, NodeSet s) {
    auto edges = g.directed_edges();
    bool changed = true;
    while (changed) {
        changed = false;
        for (auto [t, h] : edges)
            if (s.count(h) && s.insert(t).second) changed = true;
    }
    return s;
}

inline bool reaches(const MixedGraph& g, VarId a, VarId b) { return ancestors_by_relaxation(g, {b}).count(a) > 0; }

/// Inducing path between x and y: every interior node is a collider and an
/// ancestor of x or y. Enumerated over simple paths.
inline bool has_inducing_path(const MixedGraph& g, VarId x, VarId y) {
    NodeSet an = ancestors_by_relaxation(g, {x, y});
    std::vector<char> on(g.num_vars(), 0);
    // state: current node, whether the last edge has an arrowhead at it
    std::function<bool(VarId, bool)> dfs = [&](VarId v, bool arrow_in) -> bool {
        auto step = [&](VarId w, bool arrow_at_v, bool arrow_at_w) -> bool {
            if (on[w]) return false;
            if (v != x) {
                // v is interior: must be a collider and an ancestor of {x, y}
                if (!(arrow_in && arrow_at_v) || !an.count(v)) return false;
            }
            if (w == y) return true;
            on[w] = 1;
            bool r = dfs(w, arrow_at_w);
            on[w] = 0;
            return r;
        };
        for (VarId c : g.children(v))
            if (step(c, false, true)) return true;
        for (VarId p : g.parents(v))
            if (step(p, true, false)) return true;
        for (VarId s : g.spouses(v))
            if (step(s, true, true)) return true;
        return false;
    };
    on[x] = 1;
    return dfs(x, false);
}

/// MAG of an ADMG over the same variables (no selection variables).
inline l2c::MarkedGraph mag_projection(const MixedGraph& g) {
    l2c::MarkedGraph m(g.num_vars());
    for (VarId a = 0; a < g.num_vars(); ++a)
        for (VarId b = a + 1; b < g.num_vars(); ++b) {
            if (!g.adjacent(a, b) && !has_inducing_path(g, a, b)) continue;
            if (reaches(g, a, b)) m.add_edge(a, b, l2c::Mark::tail, l2c::Mark::arrow);
            else if (reaches(g, b, a)) m.add_edge(a, b, l2c::Mark::arrow, l2c::Mark::tail);
            else m.add_edge(a, b, l2c::Mark::arrow, l2c::Mark::arrow);
        }
    return m;
}

/// Adjacency by definition: no subset of the other variables m-separates a and b.
inline bool adjacent_by_subsets(const MixedGraph& g, VarId a, VarId b) {
    std::vector<VarId> others;
    for (VarId v = 0; v < g.num_vars(); ++v)
        if (v != a && v != b) others.push_back(v);
    for (std::size_t mask = 0; mask < (std::size_t{1} << others.size()); ++mask) {
        NodeSet z;
        for (std::size_t i = 0; i < others.size(); ++i)
            if (mask >> i & 1) z.insert(others[i]);
        if (l2c::brute_force_separated(g, {{a}, {b}, z}, l2c::SepMode::m)) return false;
    }
    return true;
}

/// Markov blanket of t in a MAG: nodes joined to t by a path whose interior
/// nodes are all colliders.
inline NodeSet mag_markov_blanket(const l2c::MarkedGraph& m, VarId t) {
    NodeSet out;
    std::vector<char> on(m.num_vars(), 0);
    std::function<void(VarId, VarId)> dfs = [&](VarId prev, VarId v) {
        out.insert(v);
        // v may be interior only if arrowheads meet at v
        if (m.mark(prev, v) != l2c::Mark::arrow) return;
        for (VarId w : m.neighbors(v)) {
            if (on[w] || m.mark(w, v) != l2c::Mark::arrow) continue;
            on[w] = 1;
            dfs(v, w);
            on[w] = 0;
        }
    };
    on[t] = 1;
    for (VarId w : m.neighbors(t)) {
        on[w] = 1;
        dfs(t, w);
        on[w] = 0;
    }
    out.erase(t);
    return out;
}

/// Latent projection by explicit path enumeration in the skeleton: a->b when
/// a directed path a -> ... -> b has only latent interior nodes; a<->b when a
/// path a <- ... <- l -> ... -> b has only latent interior nodes.
inline MixedGraph latent_projection_by_paths(const MixedGraph& dag, const NodeSet& latents) {
    std::vector<VarId> obs;
    std::vector<VarId> pos(dag.num_vars(), UINT32_MAX);
    for (VarId v = 0; v < dag.num_vars(); ++v)
        if (!latents.count(v)) {
            pos[v] = static_cast<VarId>(obs.size());
            obs.push_back(v);
        }
    MixedGraph out(obs.size());
    for (VarId a : obs)
        for (VarId b : obs) {
            if (a == b) continue;
            // enumerate skeleton paths a .. b with latent interiors; record edge directions
            std::vector<char> on(dag.num_vars(), 0);
            std::vector<int> dirs;  // +1 forward (toward b), -1 backward
            bool directed = false, bidirected = false;
            std::function<void(VarId)> dfs = [&](VarId v) {
                auto visit = [&](VarId w, int d) {
                    if (on[w]) return;
                    if (w == b) {
                        dirs.push_back(d);
                        bool all_fwd = std::all_of(dirs.begin(), dirs.end(), [](int x) { return x > 0; });
                        // shape: some backward steps then forward steps, at least one of each
                        std::size_t i = 0;
                        while (i < dirs.size() && dirs[i] < 0) ++i;
                        bool trek = i > 0 && i < dirs.size() &&
                                    std::all_of(dirs.begin() + static_cast<std::ptrdiff_t>(i), dirs.end(),
                                                [](int x) { return x > 0; });
                        if (all_fwd) directed = true;
                        if (trek) bidirected = true;
                        dirs.pop_back();
                        return;
                    }
                    if (!latents.count(w)) return;
                    on[w] = 1;
                    dirs.push_back(d);
                    dfs(w);
                    dirs.pop_back();
                    on[w] = 0;
                };
                for (VarId c : dag.children(v)) visit(c, +1);
                for (VarId p : dag.parents(v)) visit(p, -1);
            };
            on[a] = 1;
            dfs(a);
            if (directed) out.add_directed(pos[a], pos[b]);
            if (bidirected && a < b) out.add_bidirected(pos[a], pos[b]);
        }
    return out;
}

/// Calls f on every mixed graph over n labeled nodes (all directed pairs and
/// all bidirected pairs, cycles included).
inline void all_mixed_graphs(std::size_t n, const std::function<void(const MixedGraph&)>& f) {
    std::vector<Edge> dir, bi;
    for (VarId a = 0; a < n; ++a)
        for (VarId b = 0; b < n; ++b)
            if (a != b) {
                dir.emplace_back(a, b);
                if (a < b) bi.emplace_back(a, b);
            }
    const std::size_t slots = dir.size() + bi.size();
    for (std::uint64_t m = 0; m < (std::uint64_t{1} << slots); ++m) {
        MixedGraph g(n);
        for (std::size_t i = 0; i < dir.size(); ++i)
            if (m >> i & 1) g.add_directed(dir[i].first, dir[i].second);
        for (std::size_t i = 0; i < bi.size(); ++i)
            if (m >> (dir.size() + i) & 1) g.add_bidirected(bi[i].first, bi[i].second);
        f(g);
    }
}

/// Adjusted Rand index from raw pair agreements (Hubert-Arabie form).
inline double ari_by_pairs(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
    const std::size_t n = a.size();
    double both = 0, in_a = 0, in_b = 0, pairs = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            bool sa = a[i] == a[j], sb = b[i] == b[j];
            both += sa && sb;
            in_a += sa;
            in_b += sb;
            pairs += 1;
        }
    double expected = in_a * in_b / pairs, top = (in_a + in_b) / 2;
    if (top == expected) return 1.0;
    return (both - expected) / (top - expected);
}

/// Mutual information over the arithmetic mean of the entropies, by direct sums.
inline double nmi_direct(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
    const double n = static_cast<double>(a.size());
    std::map<std::uint32_t, double> pa, pb;
    std::map<std::pair<std::uint32_t, std::uint32_t>, double> pab;
    for (std::size_t i = 0; i < a.size(); ++i) {
        pa[a[i]] += 1 / n;
        pb[b[i]] += 1 / n;
        pab[{a[i], b[i]}] += 1 / n;
    }
    double mi = 0, ha = 0, hb = 0;
    for (auto [k, p] : pab) mi += p * std::log(p / (pa[k.first] * pb[k.second]));
    for (auto [k, p] : pa) ha -= p * std::log(p);
    for (auto [k, p] : pb) hb -= p * std::log(p);
    if (ha + hb == 0) return 1.0;
    return mi / ((ha + hb) / 2);
}

}  // namespace oracle
