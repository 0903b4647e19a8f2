#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "l2c/errors.hpp"

namespace l2c {

using VarId = std::uint32_t;
using NodeSet = std::set<VarId>;
using Edge = std::pair<VarId, VarId>;

namespace detail {

inline bool sorted_insert(std::vector<VarId>& v, VarId x) {
    auto it = std::lower_bound(v.begin(), v.end(), x);
    if (it != v.end() && *it == x) return false;
    v.insert(it, x);
    return true;
}

inline bool sorted_erase(std::vector<VarId>& v, VarId x) {
    auto it = std::lower_bound(v.begin(), v.end(), x);
    if (it == v.end() || *it != x) return false;
    v.erase(it);
    return true;
}

inline bool sorted_contains(const std::vector<VarId>& v, VarId x) {
    return std::binary_search(v.begin(), v.end(), x);
}

}  // namespace detail

/// Directed + bidirected graph over variables 0..num_vars-1.
///
/// Micro-level graphs reject directed self-loops. Cluster graphs viewed as
/// mixed graphs are built with `allow_self_loops` so that a cluster can point
/// at itself. Bidirected self-loops are never stored.
class MixedGraph {
public:
    MixedGraph() = default;
    explicit MixedGraph(std::size_t num_vars, bool allow_self_loops = false)
        : children_(num_vars), parents_(num_vars), spouses_(num_vars),
          allow_self_loops_(allow_self_loops) {}

    std::size_t num_vars() const { return children_.size(); }
    bool allows_self_loops() const { return allow_self_loops_; }

    bool add_directed(VarId tail, VarId head) {
        check(tail);
        check(head);
        if (tail == head && !allow_self_loops_)
            throw InputError("directed self-loop at micro variable " + std::to_string(tail));
        if (!detail::sorted_insert(children_[tail], head)) return false;
        detail::sorted_insert(parents_[head], tail);
        ++num_directed_;
        return true;
    }

    bool add_bidirected(VarId a, VarId b) {
        check(a);
        check(b);
        if (a == b) throw InputError("bidirected self-loop at " + std::to_string(a));
        if (!detail::sorted_insert(spouses_[a], b)) return false;
        detail::sorted_insert(spouses_[b], a);
        ++num_bidirected_;
        return true;
    }

    bool remove_directed(VarId tail, VarId head) {
        check(tail);
        check(head);
        if (!detail::sorted_erase(children_[tail], head)) return false;
        detail::sorted_erase(parents_[head], tail);
        --num_directed_;
        return true;
    }

    bool remove_bidirected(VarId a, VarId b) {
        check(a);
        check(b);
        if (!detail::sorted_erase(spouses_[a], b)) return false;
        detail::sorted_erase(spouses_[b], a);
        --num_bidirected_;
        return true;
    }

    bool has_directed(VarId tail, VarId head) const {
        return tail < num_vars() && detail::sorted_contains(children_[tail], head);
    }
    bool has_bidirected(VarId a, VarId b) const {
        return a < num_vars() && detail::sorted_contains(spouses_[a], b);
    }
    bool adjacent(VarId a, VarId b) const {
        return has_directed(a, b) || has_directed(b, a) || has_bidirected(a, b);
    }

    const std::vector<VarId>& children(VarId v) const { return children_.at(v); }
    const std::vector<VarId>& parents(VarId v) const { return parents_.at(v); }
    const std::vector<VarId>& spouses(VarId v) const { return spouses_.at(v); }

    std::size_t num_directed() const { return num_directed_; }
    std::size_t num_bidirected() const { return num_bidirected_; }

    std::vector<Edge> directed_edges() const {
        std::vector<Edge> out;
        out.reserve(num_directed_);
        for (VarId t = 0; t < num_vars(); ++t)
            for (VarId h : children_[t]) out.emplace_back(t, h);
        return out;
    }

    /// Each bidirected edge once, as (a, b) with a < b.
    std::vector<Edge> bidirected_edges() const {
        std::vector<Edge> out;
        out.reserve(num_bidirected_);
        for (VarId a = 0; a < num_vars(); ++a)
            for (VarId b : spouses_[a])
                if (a < b) out.emplace_back(a, b);
        return out;
    }

    void check(VarId v) const {
        if (v >= num_vars())
            throw InputError("variable " + std::to_string(v) + " out of range (num_vars=" +
                             std::to_string(num_vars()) + ")");
    }

    template <class Range>
    void check_all(const Range& vs) const {
        for (VarId v : vs) check(v);
    }

    friend bool operator==(const MixedGraph& a, const MixedGraph& b) {
        return a.children_ == b.children_ && a.spouses_ == b.spouses_;
    }

private:
    std::vector<std::vector<VarId>> children_;
    std::vector<std::vector<VarId>> parents_;
    std::vector<std::vector<VarId>> spouses_;
    std::size_t num_directed_ = 0;
    std::size_t num_bidirected_ = 0;
    bool allow_self_loops_ = false;
};

/// `s` plus every node with a directed path into `s`.
inline NodeSet ancestors(const MixedGraph& g, const NodeSet& s) {
    g.check_all(s);
    std::vector<char> seen(g.num_vars(), 0);
    std::vector<VarId> stack(s.begin(), s.end());
    for (VarId v : stack) seen[v] = 1;
    while (!stack.empty()) {
        VarId v = stack.back();
        stack.pop_back();
        for (VarId p : g.parents(v))
            if (!seen[p]) {
                seen[p] = 1;
                stack.push_back(p);
            }
    }
    NodeSet out;
    for (VarId v = 0; v < g.num_vars(); ++v)
        if (seen[v]) out.insert(v);
    return out;
}

/// `s` plus every node reachable from `s` along directed edges.
inline NodeSet descendants(const MixedGraph& g, const NodeSet& s) {
    g.check_all(s);
    std::vector<char> seen(g.num_vars(), 0);
    std::vector<VarId> stack(s.begin(), s.end());
    for (VarId v : stack) seen[v] = 1;
    while (!stack.empty()) {
        VarId v = stack.back();
        stack.pop_back();
        for (VarId c : g.children(v))
            if (!seen[c]) {
                seen[c] = 1;
                stack.push_back(c);
            }
    }
    NodeSet out;
    for (VarId v = 0; v < g.num_vars(); ++v)
        if (seen[v]) out.insert(v);
    return out;
}

/// Kahn order of the directed part. Shorter than num_vars when there is a cycle.
inline std::vector<VarId> topological_order(const MixedGraph& g) {
    std::vector<std::size_t> indeg(g.num_vars(), 0);
    for (VarId v = 0; v < g.num_vars(); ++v) indeg[v] = g.parents(v).size();
    std::vector<VarId> ready;
    for (VarId v = 0; v < g.num_vars(); ++v)
        if (indeg[v] == 0) ready.push_back(v);
    std::vector<VarId> order;
    order.reserve(g.num_vars());
    // smallest id first keeps the order deterministic
    std::make_heap(ready.begin(), ready.end(), std::greater<>{});
    while (!ready.empty()) {
        std::pop_heap(ready.begin(), ready.end(), std::greater<>{});
        VarId v = ready.back();
        ready.pop_back();
        order.push_back(v);
        for (VarId c : g.children(v))
            if (--indeg[c] == 0) {
                ready.push_back(c);
                std::push_heap(ready.begin(), ready.end(), std::greater<>{});
            }
    }
    return order;
}

inline bool is_acyclic(const MixedGraph& g) {
    return topological_order(g).size() == g.num_vars();
}

/// Removes every edge with an arrowhead into `remove_incoming` (directed heads
/// and both bidirected endpoints) and every directed edge leaving
/// `remove_outgoing`.
inline MixedGraph mutilate(const MixedGraph& g, const NodeSet& remove_incoming,
                           const NodeSet& remove_outgoing) {
    g.check_all(remove_incoming);
    g.check_all(remove_outgoing);
    std::vector<char> in(g.num_vars(), 0), out(g.num_vars(), 0);
    for (VarId v : remove_incoming) in[v] = 1;
    for (VarId v : remove_outgoing) out[v] = 1;
    MixedGraph r(g.num_vars(), g.allows_self_loops());
    for (auto [t, h] : g.directed_edges())
        if (!in[h] && !out[t]) r.add_directed(t, h);
    for (auto [a, b] : g.bidirected_edges())
        if (!in[a] && !in[b]) r.add_bidirected(a, b);
    return r;
}

/// SCC label per node (directed part only). Labels are dense, assigned in order
/// of each component's smallest member.
inline std::vector<std::size_t> scc_labels(const MixedGraph& g) {
    const std::size_t n = g.num_vars();
    std::vector<std::size_t> index(n, SIZE_MAX), low(n, 0), raw(n, SIZE_MAX);
    std::vector<char> on_stack(n, 0);
    std::vector<VarId> stack;
    std::size_t counter = 0, comp = 0;

    // iterative Tarjan
    struct Frame {
        VarId v;
        std::size_t next;
    };
    for (VarId root = 0; root < n; ++root) {
        if (index[root] != SIZE_MAX) continue;
        std::vector<Frame> call{{root, 0}};
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = 1;
        while (!call.empty()) {
            Frame& f = call.back();
            const auto& ch = g.children(f.v);
            if (f.next < ch.size()) {
                VarId w = ch[f.next++];
                if (index[w] == SIZE_MAX) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = 1;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[f.v] = std::min(low[f.v], index[w]);
                }
                continue;
            }
            VarId v = f.v;
            call.pop_back();
            if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
            if (low[v] == index[v]) {
                VarId w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = 0;
                    raw[w] = comp;
                } while (w != v);
                ++comp;
            }
        }
    }
    // relabel by smallest member
    std::vector<std::size_t> remap(comp, SIZE_MAX);
    std::size_t next = 0;
    std::vector<std::size_t> labels(n);
    for (VarId v = 0; v < n; ++v) {
        if (remap[raw[v]] == SIZE_MAX) remap[raw[v]] = next++;
        labels[v] = remap[raw[v]];
    }
    return labels;
}

inline std::vector<NodeSet> strongly_connected_components(const MixedGraph& g) {
    auto labels = scc_labels(g);
    std::size_t k = 0;
    for (auto l : labels) k = std::max(k, l + 1);
    std::vector<NodeSet> comps(k);
    for (VarId v = 0; v < g.num_vars(); ++v) comps[labels[v]].insert(v);
    return comps;
}

/// Subgraph induced by `keep`, re-indexed in ascending order of `keep`.
inline MixedGraph induced_subgraph(const MixedGraph& g, const std::vector<VarId>& keep) {
    std::vector<VarId> pos(g.num_vars(), UINT32_MAX);
    for (std::size_t i = 0; i < keep.size(); ++i) pos[keep[i]] = static_cast<VarId>(i);
    MixedGraph r(keep.size(), g.allows_self_loops());
    for (auto [t, h] : g.directed_edges())
        if (pos[t] != UINT32_MAX && pos[h] != UINT32_MAX) r.add_directed(pos[t], pos[h]);
    for (auto [a, b] : g.bidirected_edges())
        if (pos[a] != UINT32_MAX && pos[b] != UINT32_MAX) r.add_bidirected(pos[a], pos[b]);
    return r;
}

inline std::string to_dot(const MixedGraph& g, const std::vector<std::string>& names = {}) {
    auto name = [&](VarId v) {
        return v < names.size() ? names[v] : "V" + std::to_string(v);
    };
    std::ostringstream os;
    os << "digraph G {\n";
    for (VarId v = 0; v < g.num_vars(); ++v) os << "  \"" << name(v) << "\";\n";
    for (auto [t, h] : g.directed_edges())
        os << "  \"" << name(t) << "\" -> \"" << name(h) << "\";\n";
    for (auto [a, b] : g.bidirected_edges())
        os << "  \"" << name(a) << "\" -> \"" << name(b) << "\" [dir=both, style=dashed];\n";
    os << "}\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Marked graphs (MAGs / PAGs)

enum class Mark : std::uint8_t { none = 0, tail, arrow, circle };

inline const char* to_string(Mark m) {
    switch (m) {
        case Mark::tail: return "tail";
        case Mark::arrow: return "arrow";
        case Mark::circle: return "circle";
        default: return "none";
    }
}

inline Mark mark_from_string(const std::string& s) {
    if (s == "tail") return Mark::tail;
    if (s == "arrow") return Mark::arrow;
    if (s == "circle") return Mark::circle;
    throw InputError("unknown endpoint mark '" + s + "'");
}

struct MarkedEdge {
    VarId a;
    VarId b;
    Mark mark_at_a;
    Mark mark_at_b;
    friend bool operator==(const MarkedEdge&, const MarkedEdge&) = default;
};

/// At most one edge per unordered pair; each edge carries a mark at both ends.
class MarkedGraph {
public:
    MarkedGraph() = default;
    explicit MarkedGraph(std::size_t num_vars) : marks_(num_vars) {}

    std::size_t num_vars() const { return marks_.size(); }

    void add_edge(VarId a, VarId b, Mark at_a, Mark at_b) {
        check(a);
        check(b);
        if (a == b) throw InputError("marked self-loop at " + std::to_string(a));
        if (at_a == Mark::none || at_b == Mark::none) throw InputError("edge mark 'none'");
        marks_[b][a] = at_a;
        marks_[a][b] = at_b;
    }

    void remove_edge(VarId a, VarId b) {
        marks_.at(a).erase(b);
        marks_.at(b).erase(a);
    }

    bool adjacent(VarId a, VarId b) const {
        return a < num_vars() && marks_[a].count(b) > 0;
    }

    /// Mark sitting at `at` on the edge between `from` and `at`.
    Mark mark(VarId from, VarId at) const {
        if (from >= num_vars()) return Mark::none;
        auto it = marks_[from].find(at);
        return it == marks_[from].end() ? Mark::none : it->second;
    }

    void set_mark(VarId from, VarId at, Mark m) {
        if (!adjacent(from, at)) throw InputError("set_mark on missing edge");
        marks_[from][at] = m;
    }

    std::vector<VarId> neighbors(VarId v) const {
        std::vector<VarId> out;
        for (auto& [w, m] : marks_.at(v)) out.push_back(w);
        return out;
    }

    std::vector<MarkedEdge> edges() const {
        std::vector<MarkedEdge> out;
        for (VarId a = 0; a < num_vars(); ++a)
            for (auto& [b, at_b] : marks_[a])
                if (a < b) out.push_back({a, b, mark(b, a), at_b});
        return out;
    }

    bool is_directed(VarId tail, VarId head) const {
        return mark(head, tail) == Mark::tail && mark(tail, head) == Mark::arrow;
    }
    bool is_bidirected(VarId a, VarId b) const {
        return mark(b, a) == Mark::arrow && mark(a, b) == Mark::arrow;
    }

    void check(VarId v) const {
        if (v >= num_vars()) throw InputError("variable " + std::to_string(v) + " out of range");
    }

    friend bool operator==(const MarkedGraph& a, const MarkedGraph& b) { return a.marks_ == b.marks_; }

private:
    // marks_[from][at]: mark at `at` on edge from-at
    std::vector<std::map<VarId, Mark>> marks_;
};

/// Ancestral check for a fully-marked graph: only tail/arrow marks, no
/// undirected edges, no directed cycle, and no bidirected edge between a node
/// and one of its ancestors.
inline bool is_ancestral(const MarkedGraph& mg) {
    MixedGraph directed(mg.num_vars());
    std::vector<Edge> bidirected;
    for (const auto& e : mg.edges()) {
        if (e.mark_at_a == Mark::circle || e.mark_at_b == Mark::circle) return false;
        if (e.mark_at_a == Mark::tail && e.mark_at_b == Mark::tail) return false;
        if (e.mark_at_a == Mark::tail) directed.add_directed(e.a, e.b);
        else if (e.mark_at_b == Mark::tail) directed.add_directed(e.b, e.a);
        else bidirected.emplace_back(e.a, e.b);
    }
    if (!is_acyclic(directed)) return false;
    for (auto [a, b] : bidirected) {
        if (ancestors(directed, {b}).count(a) || ancestors(directed, {a}).count(b)) return false;
    }
    return true;
}

inline std::string to_dot(const MarkedGraph& g) {
    auto arrow = [](Mark m) {
        switch (m) {
            case Mark::arrow: return "normal";
            case Mark::circle: return "odot";
            default: return "none";
        }
    };
    std::ostringstream os;
    os << "digraph G {\n";
    for (const auto& e : g.edges())
        os << "  \"V" << e.a << "\" -> \"V" << e.b << "\" [dir=both, arrowtail=" << arrow(e.mark_at_a)
           << ", arrowhead=" << arrow(e.mark_at_b) << "];\n";
    os << "}\n";
    return os.str();
}

}  // namespace l2c
