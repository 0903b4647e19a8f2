#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "l2c/cluster.hpp"
#include "l2c/errors.hpp"
#include "l2c/graph.hpp"
#include "l2c/partition.hpp"

namespace l2c {

struct Representatives {
    ClusterId cluster = 0;
    std::optional<VarId> out_rep;
    std::optional<VarId> in_rep;
    std::optional<VarId> bi_rep;
    std::vector<VarId> kept;  // sorted original ids carried into the reduced graph
    bool verbatim = false;    // small cluster kept whole with its own edges
};

namespace detail {

struct Roles {
    std::vector<VarId> out, in, bi;  // members filling each role, ascending
    bool self_loop = false;
};

inline Roles roles(ClusterId c, const MixedGraph& g, const Partition& p) {
    Roles r;
    for (VarId v : p.members(c)) {
        bool o = false, i = false, b = false;
        for (VarId w : g.children(v)) {
            if (p.of(w) != c) o = true;
            else r.self_loop = true;
        }
        for (VarId w : g.parents(v))
            if (p.of(w) != c) i = true;
        for (VarId w : g.spouses(v))
            if (p.of(w) != c) b = true;
        if (o) r.out.push_back(v);
        if (i) r.in.push_back(v);
        if (b) r.bi.push_back(v);
    }
    return r;
}

}  // namespace detail

/// Representatives of cluster c: one member per active role (outgoing,
/// incoming, bidirected), lowest id first. Clusters of at most three members
/// are kept whole. A cluster with internal directed edges keeps at least two
/// members so that its self-loop survives; an isolated cluster keeps one.
inline Representatives select_representatives(ClusterId c, const MixedGraph& g, const Partition& p) {
    p.check_cluster(c);
    if (p.num_vars() != g.num_vars()) throw InputError("partition does not cover the graph");
    const auto& mem = p.members(c);
    auto r = detail::roles(c, g, p);
    Representatives out;
    out.cluster = c;
    std::vector<VarId> used;
    auto pick = [&](const std::vector<VarId>& fill) -> VarId {
        for (VarId v : fill)
            if (!detail::sorted_contains(used, v)) return detail::sorted_insert(used, v), v;
        for (VarId v : mem)
            if (!detail::sorted_contains(used, v)) return detail::sorted_insert(used, v), v;
        return fill.front();  // fewer members than roles: share
    };
    if (mem.size() <= 3) {
        out.verbatim = true;
        out.kept = mem;
        if (!r.out.empty()) out.out_rep = r.out.front();
        if (!r.in.empty()) out.in_rep = r.in.front();
        if (!r.bi.empty()) out.bi_rep = r.bi.front();
        return out;
    }
    if (!r.out.empty()) out.out_rep = pick(r.out);
    if (!r.in.empty()) out.in_rep = pick(r.in);
    if (!r.bi.empty()) out.bi_rep = pick(r.bi);
    std::size_t need = r.self_loop ? 2 : 1;
    while (used.size() < need) pick({});
    out.kept = used;
    return out;
}

struct ReducedGraph {
    MixedGraph graph;
    Partition partition;          // reduced node -> original cluster
    std::vector<VarId> original;  // reduced node -> original variable
    std::vector<Representatives> reps;
};

/// Reduced micro graph over the representatives. Cross-cluster edges are
/// re-attached by role; a reduced cluster with a self-loop is wired by
/// directed edges from its first representative (the outgoing one when
/// present) to the others, which keeps every reduced cluster's incoming
/// side free of outgoing edges and so preserves acyclicity.
inline ReducedGraph reduce_graph(const MixedGraph& g, const Partition& p) {
    if (p.num_vars() != g.num_vars()) throw InputError("partition does not cover the graph");
    ReducedGraph out;
    std::vector<VarId> index(g.num_vars(), UINT32_MAX);
    std::vector<ClusterId> assign;
    for (ClusterId c = 0; c < p.num_clusters(); ++c) {
        out.reps.push_back(select_representatives(c, g, p));
        for (VarId v : out.reps.back().kept) {
            index[v] = static_cast<VarId>(out.original.size());
            out.original.push_back(v);
            assign.push_back(c);
        }
    }
    out.partition = Partition(assign, p.names());
    out.graph = MixedGraph(out.original.size());
    auto tail_of = [&](VarId v) { auto& r = out.reps[p.of(v)]; return index[r.verbatim ? v : *r.out_rep]; };
    auto head_of = [&](VarId v) { auto& r = out.reps[p.of(v)]; return index[r.verbatim ? v : *r.in_rep]; };
    auto bi_of = [&](VarId v) { auto& r = out.reps[p.of(v)]; return index[r.verbatim ? v : *r.bi_rep]; };
    for (auto [t, h] : g.directed_edges()) {
        if (p.of(t) != p.of(h)) out.graph.add_directed(tail_of(t), head_of(h));
        else if (out.reps[p.of(t)].verbatim) out.graph.add_directed(index[t], index[h]);
    }
    for (auto [a, b] : g.bidirected_edges()) {
        if (p.of(a) != p.of(b)) out.graph.add_bidirected(bi_of(a), bi_of(b));
        else if (out.reps[p.of(a)].verbatim) out.graph.add_bidirected(index[a], index[b]);
    }
    for (const auto& r : out.reps) {
        if (r.verbatim || r.kept.size() < 2) continue;
        bool loop = false;
        for (VarId v : p.members(r.cluster))
            for (VarId w : g.children(v)) loop |= p.of(w) == r.cluster;
        if (!loop) continue;
        VarId src = r.out_rep.value_or(r.kept.front());
        for (VarId v : r.kept)
            if (v != src) out.graph.add_directed(index[src], index[v]);
    }
    return out;
}

/// Partition with cluster c holding the next `sizes[c]` ids.
inline Partition block_partition(const std::vector<std::size_t>& sizes, const std::vector<std::string>& names = {}) {
    std::vector<ClusterId> a;
    for (ClusterId c = 0; c < sizes.size(); ++c) a.insert(a.end(), sizes[c], c);
    return Partition(a, names);
}

/// Expansion of a cluster graph to its declared sizes: self-loops become a
/// directed cycle over the cluster, cluster edges join the first members.
/// The result may be cyclic.
inline MixedGraph canonical_graph(const ClusterGraph& cg) {
    std::vector<VarId> first(cg.num_clusters());
    std::size_t n = 0;
    for (ClusterId c = 0; c < cg.num_clusters(); ++c) {
        first[c] = static_cast<VarId>(n);
        n += cg.sizes[c];
        if (cg.has_self_loop(c) && cg.sizes[c] < 2)
            throw CapacityError("cluster " + cg.name(c) + " has a self-loop but a single member");
    }
    MixedGraph g(n);
    for (auto [a, b] : cg.graph.directed_edges()) {
        if (a != b) {
            g.add_directed(first[a], first[b]);
            continue;
        }
        for (std::size_t i = 0; i < cg.sizes[a]; ++i)
            g.add_directed(static_cast<VarId>(first[a] + i), static_cast<VarId>(first[a] + (i + 1) % cg.sizes[a]));
    }
    for (auto [a, b] : cg.graph.bidirected_edges()) g.add_bidirected(first[a], first[b]);
    return g;
}

/// An acyclic member of the compatible class when one exists. Every cluster
/// sends from its first member and receives at its second (its only member
/// when it has one), so a directed cycle can only run through single-member
/// clusters.
inline std::optional<MixedGraph> canonical_admg(const ClusterGraph& cg) {
    std::vector<VarId> out(cg.num_clusters()), in(cg.num_clusters());
    std::size_t n = 0;
    for (ClusterId c = 0; c < cg.num_clusters(); ++c) {
        out[c] = static_cast<VarId>(n);
        in[c] = static_cast<VarId>(cg.sizes[c] > 1 ? n + 1 : n);
        n += cg.sizes[c];
        if (cg.has_self_loop(c) && cg.sizes[c] < 2) return std::nullopt;
    }
    MixedGraph g(n);
    for (auto [a, b] : cg.graph.directed_edges()) g.add_directed(out[a], in[b]);
    for (auto [a, b] : cg.graph.bidirected_edges()) g.add_bidirected(out[a], out[b]);
    if (!is_acyclic(g)) return std::nullopt;
    return g;
}

inline bool has_compatible_admg(const ClusterGraph& cg) { return canonical_admg(cg).has_value(); }

/// Cluster graph of the reduced canonical ADMG (canonical graph when no ADMG exists).
inline ClusterGraph reduced_cdag(const ClusterGraph& cg) {
    auto g = canonical_admg(cg);
    MixedGraph micro = g ? *g : canonical_graph(cg);
    auto red = reduce_graph(micro, block_partition(cg.sizes, cg.names));
    return derive_cdag(red.graph, red.partition);
}

enum class CompatMode { admg, dmg };

/// Calls f on every micro graph over the declared cluster sizes whose cluster
/// graph is cg (acyclic ones only in admg mode) until f returns false.
/// Candidate edges are restricted to those cg permits; more than
/// `max_slots` candidates is a capacity error.
inline void enumerate_compatible(const ClusterGraph& cg, std::size_t max_micro,
                                 const std::function<bool(const MixedGraph&)>& f, CompatMode mode = CompatMode::admg,
                                 std::size_t max_slots = 24) {
    if (max_micro > 10) throw CapacityError("enumerate_compatible supports at most 10 micro variables");
    std::size_t n = 0;
    for (auto s : cg.sizes) n += s;
    if (n > max_micro) throw CapacityError("cluster graph has " + std::to_string(n) + " micro variables, limit is " + std::to_string(max_micro));
    auto p = block_partition(cg.sizes, cg.names);
    std::vector<Edge> dir, bi;
    for (VarId a = 0; a < n; ++a)
        for (VarId b = 0; b < n; ++b) {
            if (a == b) continue;
            if (cg.graph.has_directed(p.of(a), p.of(b))) dir.emplace_back(a, b);
            if (a < b && (p.of(a) == p.of(b) || cg.graph.has_bidirected(p.of(a), p.of(b)))) bi.emplace_back(a, b);
        }
    const std::size_t slots = dir.size() + bi.size();
    if (slots > max_slots) throw CapacityError("too many candidate edges to enumerate (" + std::to_string(slots) + ")");
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << slots); ++mask) {
        MixedGraph g(n);
        for (std::size_t i = 0; i < dir.size(); ++i)
            if (mask >> i & 1) g.add_directed(dir[i].first, dir[i].second);
        for (std::size_t i = 0; i < bi.size(); ++i)
            if (mask >> (dir.size() + i) & 1) g.add_bidirected(bi[i].first, bi[i].second);
        if (mode == CompatMode::admg && !is_acyclic(g)) continue;
        if (!(derive_cdag(g, p).graph == cg.graph)) continue;
        if (!f(g)) return;
    }
}

}  // namespace l2c
