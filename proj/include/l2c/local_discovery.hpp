#pragma once

#include <atomic>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "l2c/ci.hpp"
#include "l2c/graph.hpp"
#include "l2c/separation.hpp"

namespace l2c {

struct DiscoveryOptions {
    std::optional<std::size_t> max_cond;  // cap on separating-set size; empty = unbounded
    bool possible_dsep = true;
    bool group_search = true;  // find blanket candidates by halving set-valued tests
    bool orient = true;        // propagate orientations beyond unshielded colliders
    std::size_t path_budget = 200000;
};

struct LocalStructure {
    VarId target = 0;
    NodeSet mmb;
    NodeSet direct_causes;
    NodeSet direct_effects;
    NodeSet undecided;
    NodeSet confounded;  // undecided neighbors seen with arrowheads at both ends
    std::vector<VStructure> v_structures;
    MarkedGraph local_graph;
};

namespace detail {

// Calls f on each size-l subset of `items` in lexicographic order until f returns true.
template <class F>
bool for_each_subset(const std::vector<VarId>& items, std::size_t l, F&& f) {
    if (l > items.size()) return false;
    std::vector<std::size_t> idx(l);
    for (std::size_t i = 0; i < l; ++i) idx[i] = i;
    NodeSet s;
    while (true) {
        s.clear();
        for (auto i : idx) s.insert(items[i]);
        if (f(s)) return true;
        std::size_t i = l;
        while (i > 0 && idx[i - 1] == items.size() - l + i - 1) --i;
        if (i == 0) return false;
        ++idx[i - 1];
        for (std::size_t j = i; j < l; ++j) idx[j] = idx[j - 1] + 1;
    }
}

inline NodeSet grow_shrink(VarId t, CiTester& ci, const NodeSet& all_vars, bool group) {
    NodeSet s;
    if (group) {
        while (true) {
            NodeSet rest;
            for (VarId v : all_vars)
                if (v != t && !s.count(v)) rest.insert(v);
            if (rest.empty() || ci.independent_set(t, rest, s)) break;
            // t depends on `rest`; by composition some member does. Halve until one is left.
            std::vector<VarId> cand(rest.begin(), rest.end());
            while (cand.size() > 1) {
                std::vector<VarId> lo(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(cand.size() / 2));
                if (!ci.independent_set(t, NodeSet(lo.begin(), lo.end()), s)) {
                    cand = std::move(lo);
                } else {
                    cand.erase(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(cand.size() / 2));
                }
            }
            s.insert(cand[0]);
        }
    } else {
        bool changed = true;
        while (changed) {
            changed = false;
            for (VarId v : all_vars) {
                if (v == t || s.count(v)) continue;
                if (!ci.independent(t, v, s)) {
                    s.insert(v);
                    changed = true;
                }
            }
        }
    }
    bool changed = true;
    while (changed) {
        changed = false;
        for (VarId v : NodeSet(s)) {
            NodeSet rest = s;
            rest.erase(v);
            if (ci.independent(t, v, rest)) {
                s = std::move(rest);
                changed = true;
            }
        }
    }
    return s;
}

// FCI over a small variable set W, using local indices 0..m-1 internally.
class LocalFci {
public:
    LocalFci(std::vector<VarId> w, CiTester& ci, const DiscoveryOptions& opt)
        : w_(std::move(w)), m_(w_.size()), ci_(ci), opt_(opt), mk_(m_, std::vector<Mark>(m_, Mark::none)) {}

    MarkedGraph run() {
        for (std::size_t i = 0; i < m_; ++i)
            for (std::size_t j = 0; j < m_; ++j)
                if (i != j) mk_[i][j] = Mark::circle;
        skeleton();
        if (opt_.possible_dsep) {
            orient_colliders();
            possible_dsep_phase();
            reset_circles();
        }
        orient_colliders();
        if (opt_.orient) propagate();
        MarkedGraph g(ci_.num_vars());
        for (std::size_t i = 0; i < m_; ++i)
            for (std::size_t j = i + 1; j < m_; ++j)
                if (adj(i, j)) g.add_edge(w_[i], w_[j], mk_[j][i], mk_[i][j]);
        return g;
    }

private:
    bool adj(std::size_t a, std::size_t b) const { return mk_[a][b] != Mark::none; }

    std::vector<VarId> neighbors(std::size_t a) const {
        std::vector<VarId> out;
        for (std::size_t b = 0; b < m_; ++b)
            if (b != a && adj(a, b)) out.push_back(static_cast<VarId>(b));
        return out;
    }

    NodeSet global(const NodeSet& local) const {
        NodeSet out;
        for (VarId v : local) out.insert(w_[v]);
        return out;
    }

    std::size_t cap() const { return opt_.max_cond.value_or(SIZE_MAX); }

    void cut(std::size_t a, std::size_t b, const NodeSet& sep) {
        mk_[a][b] = mk_[b][a] = Mark::none;
        sepset_[{std::min(a, b), std::max(a, b)}] = sep;
    }

    bool try_separate(std::size_t a, std::size_t b, const std::vector<VarId>& cand, std::size_t l) {
        return for_each_subset(cand, l, [&](const NodeSet& s) {
            if (ci_.independent(w_[a], w_[b], global(s))) {
                cut(a, b, s);
                return true;
            }
            return false;
        });
    }

    // PC-stable adjacency search: conditioning sets come from a per-level snapshot.
    void skeleton() {
        for (std::size_t l = 0; l <= cap(); ++l) {
            std::vector<std::vector<VarId>> snap(m_);
            for (std::size_t a = 0; a < m_; ++a) snap[a] = neighbors(a);
            bool any = false;
            for (std::size_t a = 0; a < m_; ++a) {
                for (std::size_t b = a + 1; b < m_; ++b) {
                    if (!adj(a, b)) continue;
                    for (auto [x, y] : {std::pair{a, b}, std::pair{b, a}}) {
                        std::vector<VarId> cand;
                        for (VarId c : snap[x])
                            if (c != y) cand.push_back(c);
                        if (cand.size() < l) continue;
                        any = true;
                        if (try_separate(x, y, cand, l)) break;
                    }
                }
            }
            if (!any) break;
        }
    }

    const NodeSet* sepset(std::size_t a, std::size_t b) const {
        auto it = sepset_.find({std::min(a, b), std::max(a, b)});
        return it == sepset_.end() ? nullptr : &it->second;
    }

    void orient_colliders() {
        for (std::size_t c = 0; c < m_; ++c) {
            auto nb = neighbors(c);
            for (std::size_t i = 0; i < nb.size(); ++i)
                for (std::size_t j = i + 1; j < nb.size(); ++j) {
                    std::size_t a = nb[i], b = nb[j];
                    if (adj(a, b)) continue;
                    const NodeSet* s = sepset(a, b);
                    if (s && !s->count(static_cast<VarId>(c))) {
                        mk_[a][c] = Mark::arrow;
                        mk_[b][c] = Mark::arrow;
                    }
                }
        }
    }

    void reset_circles() {
        for (std::size_t i = 0; i < m_; ++i)
            for (std::size_t j = 0; j < m_; ++j)
                if (adj(i, j)) mk_[i][j] = Mark::circle;
    }

    // Nodes reachable from a by paths whose interior nodes are colliders or
    // sit in a triangle with their path neighbors.
    std::vector<VarId> possible_dsep(std::size_t a, std::size_t b) const {
        std::vector<char> in(m_, 0);
        std::vector<std::vector<char>> seen(m_, std::vector<char>(m_, 0));
        std::deque<std::pair<std::size_t, std::size_t>> q;  // (prev, cur)
        for (VarId c : neighbors(a)) {
            in[c] = 1;
            seen[a][c] = 1;
            q.emplace_back(a, c);
        }
        while (!q.empty()) {
            auto [u, v] = q.front();
            q.pop_front();
            for (VarId x : neighbors(v)) {
                if (x == u || x == a || seen[v][x]) continue;
                bool collider = mk_[u][v] == Mark::arrow && mk_[x][v] == Mark::arrow;
                if (!collider && !adj(u, x)) continue;
                seen[v][x] = 1;
                in[x] = 1;
                q.emplace_back(v, x);
            }
        }
        std::vector<VarId> out;
        for (std::size_t x = 0; x < m_; ++x)
            if (in[x] && x != a && x != b) out.push_back(static_cast<VarId>(x));
        return out;
    }

    void possible_dsep_phase() {
        std::vector<std::pair<std::size_t, std::size_t>> edges;
        for (std::size_t a = 0; a < m_; ++a)
            for (std::size_t b = a + 1; b < m_; ++b)
                if (adj(a, b)) edges.emplace_back(a, b);
        for (auto [a, b] : edges) {
            if (!adj(a, b)) continue;
            for (auto [x, y] : {std::pair{a, b}, std::pair{b, a}}) {
                auto pds = possible_dsep(x, y);
                bool done = false;
                for (std::size_t l = 1; l <= std::min(cap(), pds.size()) && !done; ++l) {
                    done = for_each_subset(pds, l, [&](const NodeSet& s) {
                        // sets inside the adjacency were already tried in the skeleton phase
                        bool inside = std::all_of(s.begin(), s.end(), [&](VarId v) { return adj(x, v); });
                        if (inside && l <= cap()) return false;
                        if (ci_.independent(w_[x], w_[y], global(s))) {
                            cut(x, y, s);
                            return true;
                        }
                        return false;
                    });
                }
                if (done) break;
            }
        }
    }

    bool is_tail(std::size_t from, std::size_t at) const { return mk_[from][at] == Mark::tail; }
    bool is_arrow(std::size_t from, std::size_t at) const { return mk_[from][at] == Mark::arrow; }
    bool is_circle(std::size_t from, std::size_t at) const { return mk_[from][at] == Mark::circle; }
    bool directed(std::size_t a, std::size_t b) const { return is_tail(b, a) && is_arrow(a, b); }

    bool set(std::size_t from, std::size_t at, Mark m) {
        if (mk_[from][at] == m) return false;
        mk_[from][at] = m;
        return true;
    }

    void propagate() {
        bool changed = true;
        while (changed) {
            changed = false;
            changed |= rules_1_to_3();
            changed |= rule_4();
            changed |= rule_8();
            changed |= rules_9_10();
        }
    }

    bool rules_1_to_3() {
        bool changed = false;
        for (std::size_t b = 0; b < m_; ++b) {
            auto nb = neighbors(b);
            for (VarId a : nb)
                for (VarId c : nb) {
                    if (a == c) continue;
                    // R1: a *-> b o-* c, a and c apart  =>  b -> c
                    if (is_arrow(a, b) && is_circle(c, b) && !adj(a, c)) {
                        changed |= set(c, b, Mark::tail);
                        changed |= set(b, c, Mark::arrow);
                    }
                    // R2: a -> b *-> c or a *-> b -> c, with a *-o c  =>  a *-> c
                    if (adj(a, c) && is_circle(a, c) && is_arrow(a, b) && is_arrow(b, c) &&
                        (is_tail(b, a) || is_tail(c, b)))
                        changed |= set(a, c, Mark::arrow);
                }
            // R3: a *-> b <-* c, a *-o d o-* c, a and c apart, d *-o b  =>  d *-> b
            for (VarId d : nb) {
                if (!is_circle(d, b)) continue;
                for (VarId a : nb)
                    for (VarId c : nb) {
                        if (a >= c || a == d || c == d || adj(a, c)) continue;
                        if (is_arrow(a, b) && is_arrow(c, b) && adj(a, d) && adj(c, d) && is_circle(a, d) &&
                            is_circle(c, d))
                            changed |= set(d, b, Mark::arrow);
                    }
            }
        }
        return changed;
    }

    // R4 on discriminating paths <theta, ..., alpha, beta, gamma> with beta o-* gamma.
    bool rule_4() {
        bool changed = false;
        for (std::size_t beta = 0; beta < m_; ++beta)
            for (std::size_t gamma = 0; gamma < m_; ++gamma) {
                if (beta == gamma || !adj(beta, gamma) || !is_circle(gamma, beta)) continue;
                for (std::size_t alpha = 0; alpha < m_; ++alpha) {
                    if (alpha == beta || alpha == gamma) continue;
                    if (!adj(alpha, beta) || !is_arrow(beta, alpha) || !directed(alpha, gamma)) continue;
                    auto theta = discriminating_end(alpha, beta, gamma);
                    if (!theta) continue;
                    const NodeSet* s = sepset(*theta, gamma);
                    if (s && s->count(static_cast<VarId>(beta))) {
                        changed |= set(gamma, beta, Mark::tail);
                        changed |= set(beta, gamma, Mark::arrow);
                    } else if (s) {
                        changed |= set(alpha, beta, Mark::arrow);
                        changed |= set(beta, alpha, Mark::arrow);
                        changed |= set(gamma, beta, Mark::arrow);
                        changed |= set(beta, gamma, Mark::arrow);
                    }
                    if (changed) return true;
                }
            }
        return changed;
    }

    // Walk back from alpha through colliders that are parents of gamma until a
    // node non-adjacent to gamma is found.
    std::optional<std::size_t> discriminating_end(std::size_t alpha, std::size_t beta, std::size_t gamma) const {
        std::vector<char> visited(m_, 0);
        visited[beta] = visited[gamma] = visited[alpha] = 1;
        std::deque<std::pair<std::size_t, std::size_t>> q{{beta, alpha}};  // (prev, cur)
        while (!q.empty()) {
            auto [prev, cur] = q.front();
            q.pop_front();
            for (std::size_t x = 0; x < m_; ++x) {
                if (visited[x] || !adj(cur, x)) continue;
                // cur must be a collider between x and prev
                if (!is_arrow(x, cur) || !is_arrow(prev, cur)) continue;
                if (!adj(x, gamma)) return x;
                if (directed(x, gamma)) {
                    visited[x] = 1;
                    q.emplace_back(cur, x);
                }
            }
        }
        return std::nullopt;
    }

    // R8: a -> b -> c or a -o b -> c, with a o-> c  =>  a -> c
    bool rule_8() {
        bool changed = false;
        for (std::size_t a = 0; a < m_; ++a)
            for (std::size_t c = 0; c < m_; ++c) {
                if (a == c || !adj(a, c) || !is_circle(c, a) || !is_arrow(a, c)) continue;
                for (std::size_t b = 0; b < m_; ++b) {
                    if (b == a || b == c || !adj(a, b) || !adj(b, c)) continue;
                    if (!directed(b, c) || !is_tail(b, a)) continue;
                    if (is_arrow(a, b) || is_circle(a, b)) {
                        changed |= set(c, a, Mark::tail);
                        break;
                    }
                }
            }
        return changed;
    }

    bool potentially_directed(std::size_t x, std::size_t y) const {
        return adj(x, y) && !is_arrow(y, x) && !is_tail(x, y);
    }

    // Endpoints reachable from `a` by uncovered potentially directed paths
    // starting a, first, ... (first itself included). Exhaustive over simple
    // paths within a step budget; `complete` is false when the budget ran out.
    NodeSet upd_reach(std::size_t a, std::size_t first, std::size_t stop, bool& complete) const {
        NodeSet out{static_cast<VarId>(first)};
        std::vector<char> on(m_, 0);
        on[a] = on[first] = 1;
        std::size_t steps = 0;
        std::function<void(std::size_t, std::size_t)> dfs = [&](std::size_t prev, std::size_t cur) {
            for (std::size_t x = 0; x < m_; ++x) {
                if (on[x] || !potentially_directed(cur, x) || adj(prev, x)) continue;
                if (++steps > opt_.path_budget) {
                    complete = false;
                    return;
                }
                out.insert(static_cast<VarId>(x));
                if (x == stop) continue;
                on[x] = 1;
                dfs(cur, x);
                on[x] = 0;
            }
        };
        dfs(a, first);
        return out;
    }

    bool rules_9_10() {
        bool changed = false;
        for (std::size_t a = 0; a < m_; ++a)
            for (std::size_t c = 0; c < m_; ++c) {
                if (a == c || !adj(a, c) || !is_circle(c, a) || !is_arrow(a, c)) continue;
                std::map<std::size_t, NodeSet> reach;
                bool complete = true;
                for (std::size_t mu = 0; mu < m_; ++mu)
                    if (mu != c && potentially_directed(a, mu)) reach[mu] = upd_reach(a, mu, c, complete);
                // R9: uncovered p.d. path a, b, ..., c with b and c apart
                bool r9 = false;
                for (auto& [b, r] : reach)
                    if (!adj(b, c) && r.count(static_cast<VarId>(c))) r9 = true;
                bool r10 = false;
                if (!r9) {
                    std::vector<std::size_t> pa;
                    for (std::size_t b = 0; b < m_; ++b)
                        if (b != a && directed(b, c)) pa.push_back(b);
                    for (std::size_t i = 0; i < pa.size() && !r10; ++i)
                        for (std::size_t j = i + 1; j < pa.size() && !r10; ++j)
                            for (auto& [mu, rm] : reach) {
                                if (r10) break;
                                for (auto& [om, ro] : reach) {
                                    if (mu == om || adj(mu, om)) continue;
                                    if ((rm.count(static_cast<VarId>(pa[i])) && ro.count(static_cast<VarId>(pa[j]))) ||
                                        (rm.count(static_cast<VarId>(pa[j])) && ro.count(static_cast<VarId>(pa[i])))) {
                                        r10 = true;
                                        break;
                                    }
                                }
                            }
                }
                if (r9 || r10) changed |= set(c, a, Mark::tail);
            }
        return changed;
    }

    std::vector<VarId> w_;
    std::size_t m_;
    CiTester& ci_;
    DiscoveryOptions opt_;
    std::vector<std::vector<Mark>> mk_;  // mk_[from][at]
    std::map<std::pair<std::size_t, std::size_t>, NodeSet> sepset_;
};

}  // namespace detail

/// MAG Markov blanket of `target` by grow-shrink over `all_vars`.
inline NodeSet learn_mmb(VarId target, CiTester& tester, const NodeSet& all_vars, const DiscoveryOptions& opt = {}) {
    if (target >= tester.num_vars()) throw InputError("unknown target " + std::to_string(target));
    return detail::grow_shrink(target, tester, all_vars, opt.group_search);
}

inline NodeSet all_variables(std::size_t n) {
    NodeSet s;
    for (VarId v = 0; v < n; ++v) s.insert(v);
    return s;
}

/// FCI restricted to mmb + {target}. The returned graph is indexed by global
/// variable ids and only has edges inside that set.
inline MarkedGraph learn_local_mag(VarId target, CiTester& tester, const NodeSet& mmb, const DiscoveryOptions& opt = {}) {
    std::vector<VarId> w(mmb.begin(), mmb.end());
    if (!mmb.count(target)) w.insert(std::lower_bound(w.begin(), w.end(), target), target);
    return detail::LocalFci(std::move(w), tester, opt).run();
}

inline MarkedGraph learn_local_mag(VarId target, CiTester& tester, const DiscoveryOptions& opt = {}) {
    return learn_local_mag(target, tester, learn_mmb(target, tester, all_variables(tester.num_vars()), opt), opt);
}

inline LocalStructure extract_local_structure(const MarkedGraph& lg, VarId target, const NodeSet& mmb) {
    lg.check(target);
    LocalStructure ls;
    ls.target = target;
    ls.mmb = mmb;
    ls.local_graph = lg;
    for (VarId v : lg.neighbors(target)) {
        Mark at_t = lg.mark(v, target), at_v = lg.mark(target, v);
        if (at_v == Mark::tail && at_t == Mark::arrow) {
            ls.direct_causes.insert(v);
        } else if (at_v == Mark::arrow && at_t == Mark::tail) {
            ls.direct_effects.insert(v);
        } else {
            ls.undecided.insert(v);
            if (at_v == Mark::arrow && at_t == Mark::arrow) ls.confounded.insert(v);
        }
        ls.mmb.insert(v);
    }
    for (const auto& t : v_structures(lg))
        if (t.x == target || t.z == target || t.y == target) ls.v_structures.push_back(t);
    return ls;
}

inline LocalStructure extract_local_structure(const MarkedGraph& lg, VarId target) {
    NodeSet touched;
    for (const auto& e : lg.edges()) {
        touched.insert(e.a);
        touched.insert(e.b);
    }
    touched.erase(target);
    return extract_local_structure(lg, target, touched);
}

inline LocalStructure discover_local(VarId target, CiTester& tester, const DiscoveryOptions& opt = {}) {
    NodeSet mmb = learn_mmb(target, tester, all_variables(tester.num_vars()), opt);
    return extract_local_structure(learn_local_mag(target, tester, mmb, opt), target, mmb);
}

/// Runs `f(i)` for i in [0, n) on up to `threads` workers.
template <class F>
void parallel_for(std::size_t n, std::size_t threads, F&& f) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < n;) {
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard lock(err_mu);
                    if (!err) err = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

/// Local discovery for every variable; results are ordered by target.
inline std::vector<LocalStructure> discover_all(CiTester& tester, const DiscoveryOptions& opt = {}, std::size_t threads = 1) {
    std::vector<LocalStructure> out(tester.num_vars());
    parallel_for(out.size(), threads, [&](std::size_t v) { out[v] = discover_local(static_cast<VarId>(v), tester, opt); });
    return out;
}

// ---------------------------------------------------------------------------
// Combining the per-target views

struct MarkConflict {
    VarId a;
    VarId b;
    VarId at;  // endpoint whose mark disagreed
};

/// Merges target-incident edges of all local graphs. Per endpoint: arrow or
/// tail beats circle; tail against arrow becomes circle and is reported.
inline MarkedGraph merge_local_marks(const std::vector<LocalStructure>& locals, std::size_t num_vars,
                                     std::vector<MarkConflict>* conflicts = nullptr) {
    std::map<std::pair<VarId, VarId>, std::vector<std::pair<Mark, Mark>>> views;
    for (const auto& ls : locals)
        for (VarId v : ls.local_graph.neighbors(ls.target)) {
            VarId a = std::min(ls.target, v), b = std::max(ls.target, v);
            views[{a, b}].emplace_back(ls.local_graph.mark(b, a), ls.local_graph.mark(a, b));
        }
    auto combine = [](Mark x, Mark y, bool& conflict) {
        if (x == y) return x;
        if (x == Mark::circle) return y;
        if (y == Mark::circle) return x;
        conflict = true;
        return Mark::circle;
    };
    MarkedGraph g(num_vars);
    for (auto& [key, vs] : views) {
        Mark at_a = vs[0].first, at_b = vs[0].second;
        bool conf_a = false, conf_b = false;
        for (std::size_t i = 1; i < vs.size(); ++i) {
            at_a = combine(at_a, vs[i].first, conf_a);
            at_b = combine(at_b, vs[i].second, conf_b);
        }
        if (conflicts && conf_a) conflicts->push_back({key.first, key.second, key.first});
        if (conflicts && conf_b) conflicts->push_back({key.first, key.second, key.second});
        g.add_edge(key.first, key.second, at_a, at_b);
    }
    return g;
}

/// Re-derives every target's causes, effects and undecided neighbors from
/// the merged marks, so that a mark settled in one view reaches the others.
inline void reconcile(std::vector<LocalStructure>& locals, const MarkedGraph& merged) {
    for (auto& ls : locals) {
        ls.direct_causes.clear();
        ls.direct_effects.clear();
        ls.undecided.clear();
        ls.confounded.clear();
        for (VarId v : merged.neighbors(ls.target)) {
            Mark at_t = merged.mark(v, ls.target), at_v = merged.mark(ls.target, v);
            if (at_v == Mark::tail && at_t == Mark::arrow) {
                ls.direct_causes.insert(v);
            } else if (at_v == Mark::arrow && at_t == Mark::tail) {
                ls.direct_effects.insert(v);
            } else {
                ls.undecided.insert(v);
                if (at_v == Mark::arrow && at_t == Mark::arrow) ls.confounded.insert(v);
            }
        }
    }
}

/// a -> b in a marked graph is visible when some c not adjacent to b has an
/// arrowhead into a, directly or through a collider path into a whose interior
/// nodes are parents of b. Visible edges carry no hidden confounding.
inline bool visible_edge(const MarkedGraph& g, VarId a, VarId b) {
    if (!g.is_directed(a, b)) return false;
    std::set<std::pair<VarId, VarId>> seen;
    std::deque<std::pair<VarId, VarId>> q;  // (c, cur): c *-> cur, cur is a or a collider on the way to a
    for (VarId c : g.neighbors(a)) {
        if (c == b || g.mark(c, a) != Mark::arrow) continue;
        if (!g.adjacent(c, b)) return true;
        if (g.is_directed(c, b)) {
            seen.insert({c, a});
            q.emplace_back(c, a);
        }
    }
    while (!q.empty()) {
        auto [c, cur] = q.front();
        q.pop_front();
        // extend: d *-> c <-> cur, c a parent of b
        if (g.mark(cur, c) != Mark::arrow) continue;
        for (VarId d : g.neighbors(c)) {
            if (d == cur || d == a || d == b || g.mark(d, c) != Mark::arrow) continue;
            if (!g.adjacent(d, b)) return true;
            if (g.is_directed(d, b) && seen.insert({d, c}).second) q.emplace_back(d, c);
        }
    }
    return false;
}

/// Conservative micro graph from merged marks: every mark pattern is expanded
/// to all edge types it may stand for, and directed edges keep a bidirected
/// companion unless they are visible.
inline MixedGraph learned_graph(const MarkedGraph& merged) {
    MixedGraph g(merged.num_vars());
    for (const auto& e : merged.edges()) {
        VarId a = e.a, b = e.b;
        Mark ma = e.mark_at_a, mb = e.mark_at_b;
        if (mb == Mark::arrow && ma == Mark::arrow) {
            g.add_bidirected(a, b);
        } else if (ma == Mark::tail && mb == Mark::arrow) {
            g.add_directed(a, b);
            if (!visible_edge(merged, a, b)) g.add_bidirected(a, b);
        } else if (mb == Mark::tail && ma == Mark::arrow) {
            g.add_directed(b, a);
            if (!visible_edge(merged, b, a)) g.add_bidirected(a, b);
        } else if (ma == Mark::circle && mb == Mark::arrow) {
            g.add_directed(a, b);
            g.add_bidirected(a, b);
        } else if (mb == Mark::circle && ma == Mark::arrow) {
            g.add_directed(b, a);
            g.add_bidirected(a, b);
        } else if (ma == Mark::tail && mb == Mark::circle) {
            g.add_directed(a, b);
        } else if (mb == Mark::tail && ma == Mark::circle) {
            g.add_directed(b, a);
        } else {
            g.add_directed(a, b);
            g.add_directed(b, a);
            g.add_bidirected(a, b);
        }
    }
    return g;
}

/// Directed edges committed by the local views (tail at the cause, arrow at the effect).
inline std::set<Edge> committed_edges(const MarkedGraph& merged) {
    std::set<Edge> out;
    for (const auto& e : merged.edges()) {
        if (e.mark_at_a == Mark::tail && e.mark_at_b == Mark::arrow) out.insert({e.a, e.b});
        if (e.mark_at_b == Mark::tail && e.mark_at_a == Mark::arrow) out.insert({e.b, e.a});
    }
    return out;
}

/// Global PC-stable adjacency search over all variables (reference for test counts).
inline std::vector<Edge> pc_skeleton(CiTester& tester, std::optional<std::size_t> max_cond = std::nullopt) {
    const std::size_t n = tester.num_vars();
    std::vector<std::vector<char>> adj(n, std::vector<char>(n, 1));
    for (std::size_t v = 0; v < n; ++v) adj[v][v] = 0;
    for (std::size_t l = 0; l <= max_cond.value_or(SIZE_MAX); ++l) {
        std::vector<std::vector<VarId>> snap(n);
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b)
                if (adj[a][b]) snap[a].push_back(static_cast<VarId>(b));
        bool any = false;
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a + 1; b < n; ++b) {
                if (!adj[a][b]) continue;
                for (auto [x, y] : {std::pair{a, b}, std::pair{b, a}}) {
                    std::vector<VarId> cand;
                    for (VarId c : snap[x])
                        if (c != y) cand.push_back(c);
                    if (cand.size() < l) continue;
                    any = true;
                    bool cut = detail::for_each_subset(cand, l, [&](const NodeSet& s) {
                        return tester.independent(static_cast<VarId>(x), static_cast<VarId>(y), s);
                    });
                    if (cut) {
                        adj[a][b] = adj[b][a] = 0;
                        break;
                    }
                }
            }
        if (!any) break;
    }
    std::vector<Edge> out;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b)
            if (adj[a][b]) out.emplace_back(a, b);
    return out;
}

}  // namespace l2c
