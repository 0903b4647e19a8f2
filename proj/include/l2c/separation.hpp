#pragma once

#include <array>
#include <deque>
#include <vector>

#include "l2c/graph.hpp"

namespace l2c {

struct SepQuery {
    NodeSet x;
    NodeSet y;
    NodeSet z;
};

enum class SepMode { m, sigma };

namespace detail {

inline void validate(const MixedGraph& g, const SepQuery& q) {
    if (q.x.empty() || q.y.empty()) throw InputError("separation query needs non-empty x and y");
    g.check_all(q.x);
    g.check_all(q.y);
    g.check_all(q.z);
    auto disjoint = [](const NodeSet& a, const NodeSet& b) {
        for (VarId v : a)
            if (b.count(v)) return false;
        return true;
    };
    if (!disjoint(q.x, q.y) || !disjoint(q.x, q.z) || !disjoint(q.y, q.z))
        throw InputError("separation query sets overlap");
}

// One step of a walk: from `from` to `to` with the endpoint marks it carries.
struct Step {
    VarId to;
    bool arrow_at_from;
    bool arrow_at_to;
};

template <class F>
void for_each_step(const MixedGraph& g, VarId v, F&& f) {
    for (VarId c : g.children(v)) f(Step{c, false, true});
    for (VarId p : g.parents(v)) f(Step{p, true, false});
    for (VarId s : g.spouses(v)) f(Step{s, true, true});
}

// Reachability over walks. A walk is open when every collider is in z and
// every non-collider is outside z; in sigma mode a conditioned non-collider
// stays open while each tail it emits on the walk stays inside its own SCC.
inline bool connected(const MixedGraph& g, const SepQuery& q, SepMode mode) {
    const std::size_t n = g.num_vars();
    std::vector<char> in_z(n, 0), in_y(n, 0);
    for (VarId v : q.z) in_z[v] = 1;
    for (VarId v : q.y) in_y[v] = 1;
    std::vector<std::size_t> scc;
    if (mode == SepMode::sigma) scc = scc_labels(g);

    // state: 0 = entered with arrowhead, 1 = entered with tail from same SCC,
    // 2 = entered with tail from another SCC
    std::vector<std::array<char, 3>> seen(n, {0, 0, 0});
    std::deque<std::pair<VarId, int>> queue;

    auto enter = [&](VarId from, const Step& s) -> bool {
        if (in_y[s.to]) return true;
        int state = s.arrow_at_to ? 0 : 1;
        if (state == 1 && mode == SepMode::sigma && scc[from] != scc[s.to]) state = 2;
        if (mode == SepMode::m && state == 2) state = 1;
        if (!seen[s.to][state]) {
            seen[s.to][state] = 1;
            queue.emplace_back(s.to, state);
        }
        return false;
    };

    for (VarId x : q.x) {
        bool hit = false;
        for_each_step(g, x, [&](const Step& s) { hit = hit || enter(x, s); });
        if (hit) return true;
    }
    while (!queue.empty()) {
        auto [v, state] = queue.front();
        queue.pop_front();
        bool hit = false;
        for_each_step(g, v, [&](const Step& s) {
            if (hit) return;
            const bool collider = state == 0 && s.arrow_at_from;
            bool pass;
            if (collider) {
                pass = in_z[v];
            } else if (!in_z[v]) {
                pass = true;
            } else if (mode == SepMode::m) {
                pass = false;
            } else {
                const bool tail_out_escapes = !s.arrow_at_from && scc[s.to] != scc[v];
                pass = state != 2 && !tail_out_escapes;
            }
            if (pass) hit = enter(v, s);
        });
        if (hit) return true;
    }
    return false;
}

}  // namespace detail

/// m-separation (Richardson): no path whose non-colliders avoid z and whose
/// colliders have a descendant in z.
inline bool m_separated(const MixedGraph& g, const SepQuery& q) {
    detail::validate(g, q);
    return !detail::connected(g, q, SepMode::m);
}

/// sigma-separation (Forre & Mooij): a conditioned non-collider only blocks
/// when it points, along the path, at a node outside its strongly connected
/// component. Identical to m-separation on acyclic graphs.
inline bool sigma_separated(const MixedGraph& g, const SepQuery& q) {
    detail::validate(g, q);
    return !detail::connected(g, q, SepMode::sigma);
}

inline bool separated(const MixedGraph& g, const SepQuery& q, SepMode mode) {
    return mode == SepMode::m ? m_separated(g, q) : sigma_separated(g, q);
}

/// Reference oracle: enumerates every simple path between x and y (choosing
/// every edge between consecutive nodes) and applies the blocking rules
/// verbatim. Exponential; limited to 12 variables.
inline bool brute_force_separated(const MixedGraph& g, const SepQuery& q, SepMode mode) {
    constexpr std::size_t max_vars = 12;
    if (g.num_vars() > max_vars)
        throw CapacityError("brute_force_separated supports at most 12 variables");
    detail::validate(g, q);
    const std::size_t n = g.num_vars();
    std::vector<char> in_z(n, 0);
    for (VarId v : q.z) in_z[v] = 1;
    std::vector<char> has_desc_in_z(n, 0);
    for (VarId v = 0; v < n; ++v) {
        for (VarId d : descendants(g, {v}))
            if (in_z[d]) has_desc_in_z[v] = 1;
    }
    std::vector<std::size_t> scc = scc_labels(g);

    std::vector<VarId> nodes;
    std::vector<detail::Step> steps;  // steps[i] enters nodes[i+1]
    std::vector<char> on_path(n, 0);

    auto interior_open = [&](std::size_t i) {
        // node nodes[i], entered by steps[i-1], left by steps[i]
        VarId v = nodes[i];
        const auto& in = steps[i - 1];
        const auto& out = steps[i];
        const bool arrow_in = in.arrow_at_to;
        const bool arrow_out = out.arrow_at_from;
        if (arrow_in && arrow_out) return static_cast<bool>(has_desc_in_z[v]);
        if (!in_z[v]) return true;
        if (mode == SepMode::m) return false;
        if (!arrow_in && scc[nodes[i - 1]] != scc[v]) return false;
        if (!arrow_out && scc[out.to] != scc[v]) return false;
        return true;
    };

    std::function<bool()> extend = [&]() -> bool {
        VarId v = nodes.back();
        if (nodes.size() > 1 && q.y.count(v)) {
            for (std::size_t i = 1; i + 1 < nodes.size(); ++i)
                if (!interior_open(i)) return false;
            return true;
        }
        bool found = false;
        detail::for_each_step(g, v, [&](const detail::Step& s) {
            if (found || on_path[s.to]) return;
            on_path[s.to] = 1;
            nodes.push_back(s.to);
            steps.push_back(s);
            // prune as soon as the newly interior node blocks
            bool ok = nodes.size() < 3 || interior_open(nodes.size() - 2);
            if (ok) found = extend();
            steps.pop_back();
            nodes.pop_back();
            on_path[s.to] = 0;
        });
        return found;
    };

    for (VarId x : q.x) {
        nodes = {x};
        steps.clear();
        std::fill(on_path.begin(), on_path.end(), 0);
        on_path[x] = 1;
        if (extend()) return false;
    }
    return true;
}

struct VStructure {
    VarId x;
    VarId z;
    VarId y;
    friend bool operator==(const VStructure&, const VStructure&) = default;
    friend auto operator<=>(const VStructure&, const VStructure&) = default;
};

/// Unshielded colliders x *-> z <-* y with x < y and x, y non-adjacent.
inline std::vector<VStructure> v_structures(const MarkedGraph& g) {
    std::vector<VStructure> out;
    for (VarId z = 0; z < g.num_vars(); ++z) {
        auto nb = g.neighbors(z);
        for (std::size_t i = 0; i < nb.size(); ++i) {
            if (g.mark(nb[i], z) != Mark::arrow) continue;
            for (std::size_t j = i + 1; j < nb.size(); ++j) {
                if (g.mark(nb[j], z) != Mark::arrow) continue;
                if (g.adjacent(nb[i], nb[j])) continue;
                out.push_back({nb[i], z, nb[j]});
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace l2c
