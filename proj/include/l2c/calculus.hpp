#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "l2c/cluster.hpp"
#include "l2c/errors.hpp"
#include "l2c/graph.hpp"
#include "l2c/separation.hpp"

namespace l2c {

using ClusterSet = std::set<ClusterId>;

// ---------------------------------------------------------------------------
// Expressions

struct CausalExpr {
    enum class Kind { prob, sum, product, fraction };

    Kind kind = Kind::prob;
    ClusterSet outcome, given, intervened;  // prob
    ClusterSet bound;                       // sum
    std::vector<CausalExpr> children;       // sum: 1, product: any, fraction: numerator, denominator

    static CausalExpr prob(ClusterSet y, ClusterSet given = {}, ClusterSet intervened = {}) {
        CausalExpr e;
        e.outcome = std::move(y);
        e.given = std::move(given);
        e.intervened = std::move(intervened);
        e.validate();
        return e;
    }
    static CausalExpr sum(ClusterSet bound, CausalExpr child) {
        CausalExpr e;
        e.kind = Kind::sum;
        e.bound = std::move(bound);
        e.children.push_back(std::move(child));
        return e;
    }
    static CausalExpr product(std::vector<CausalExpr> factors) {
        CausalExpr e;
        e.kind = Kind::product;
        e.children = std::move(factors);
        return e;
    }
    static CausalExpr fraction(CausalExpr num, CausalExpr den) {
        CausalExpr e;
        e.kind = Kind::fraction;
        e.children.push_back(std::move(num));
        e.children.push_back(std::move(den));
        return e;
    }

    void validate() const {
        auto overlap = [](const ClusterSet& a, const ClusterSet& b) {
            for (auto c : a)
                if (b.count(c)) return true;
            return false;
        };
        if (kind == Kind::prob) {
            if (outcome.empty()) throw InputError("probability term needs an outcome");
            if (overlap(outcome, given) || overlap(outcome, intervened) || overlap(given, intervened))
                throw InputError("outcome, conditioning and intervention sets must be disjoint");
        }
        if (kind == Kind::sum && children.size() != 1) throw InputError("sum needs exactly one child");
        if (kind == Kind::fraction && children.size() != 2) throw InputError("fraction needs two children");
        for (const auto& c : children) c.validate();
    }

    bool do_free() const {
        if (kind == Kind::prob) return intervened.empty();
        return std::all_of(children.begin(), children.end(), [](const CausalExpr& c) { return c.do_free(); });
    }

    /// Clusters the expression is a distribution over.
    ClusterSet outcomes() const {
        switch (kind) {
            case Kind::prob:
                return outcome;
            case Kind::sum: {
                auto o = children[0].outcomes();
                for (auto c : bound) o.erase(c);
                return o;
            }
            case Kind::product: {
                ClusterSet o;
                for (const auto& c : children) {
                    auto s = c.outcomes();
                    o.insert(s.begin(), s.end());
                }
                return o;
            }
            case Kind::fraction: {
                auto o = children[0].outcomes();
                for (auto c : children[1].outcomes()) o.erase(c);
                return o;
            }
        }
        return {};
    }

    /// Clusters the expression is conditioned on from outside.
    ClusterSet free_inputs() const {
        ClusterSet in;
        switch (kind) {
            case Kind::prob:
                in = given;
                in.insert(intervened.begin(), intervened.end());
                break;
            case Kind::sum:
                in = children[0].free_inputs();
                for (auto c : bound) in.erase(c);
                break;
            case Kind::product:
            case Kind::fraction: {
                ClusterSet produced;
                for (const auto& c : children) {
                    auto s = c.free_inputs();
                    in.insert(s.begin(), s.end());
                    auto o = c.outcomes();
                    produced.insert(o.begin(), o.end());
                }
                for (auto c : produced) in.erase(c);
                break;
            }
        }
        return in;
    }

    friend bool operator==(const CausalExpr&, const CausalExpr&) = default;
};

inline std::string cluster_list(const ClusterSet& s, const std::vector<std::string>& names) {
    std::string out;
    for (auto c : s) {
        if (!out.empty()) out += ',';
        out += c < names.size() ? names[c] : "C" + std::to_string(c + 1);
    }
    return out;
}

inline std::string to_string(const CausalExpr& e, const std::vector<std::string>& names = {}) {
    switch (e.kind) {
        case CausalExpr::Kind::prob: {
            std::string s = "P(" + cluster_list(e.outcome, names);
            std::string rhs;
            if (!e.intervened.empty()) rhs = "do(" + cluster_list(e.intervened, names) + ")";
            if (!e.given.empty()) rhs += (rhs.empty() ? "" : ",") + cluster_list(e.given, names);
            return s + (rhs.empty() ? "" : "|" + rhs) + ")";
        }
        case CausalExpr::Kind::sum: {
            const auto& c = e.children[0];
            std::string inner = to_string(c, names);
            if (c.kind == CausalExpr::Kind::sum) inner = "[" + inner + "]";
            return "sum_{" + cluster_list(e.bound, names) + "} " + inner;
        }
        case CausalExpr::Kind::product: {
            std::string s;
            for (const auto& c : e.children) {
                if (!s.empty()) s += ' ';
                std::string t = to_string(c, names);
                s += c.kind == CausalExpr::Kind::prob ? t : "[" + t + "]";
            }
            return s;
        }
        case CausalExpr::Kind::fraction:
            return "[" + to_string(e.children[0], names) + "] / [" + to_string(e.children[1], names) + "]";
    }
    return {};
}

/// Flattens nested products, drops unit products, and orders factors by
/// their printed form so that equal expressions compare equal.
inline CausalExpr normalize(const CausalExpr& e) {
    CausalExpr out = e;
    out.children.clear();
    for (const auto& c : e.children) {
        CausalExpr n = normalize(c);
        if (e.kind == CausalExpr::Kind::product && n.kind == CausalExpr::Kind::product)
            for (auto& g : n.children) out.children.push_back(std::move(g));
        else
            out.children.push_back(std::move(n));
    }
    if (out.kind == CausalExpr::Kind::product) {
        std::sort(out.children.begin(), out.children.end(),
                  [](const CausalExpr& a, const CausalExpr& b) { return to_string(a) < to_string(b); });
        if (out.children.size() == 1) return out.children[0];
    }
    return out;
}

inline bool equivalent(const CausalExpr& a, const CausalExpr& b) { return normalize(a) == normalize(b); }

// ---------------------------------------------------------------------------
// Rule premises

enum class Rule { r1, r2, r3 };

inline const char* to_string(Rule r) {
    switch (r) {
        case Rule::r1: return "R1";
        case Rule::r2: return "R2";
        case Rule::r3: return "R3";
    }
    return "?";
}

inline Rule rule_from_string(const std::string& s) {
    if (s == "R1") return Rule::r1;
    if (s == "R2") return Rule::r2;
    if (s == "R3") return Rule::r3;
    throw InputError("unknown rule '" + s + "'");
}

/// One rule application: the separation premise and the mutilation it was checked in.
struct TraceStep {
    Rule rule = Rule::r1;
    SepQuery query;
    NodeSet remove_incoming;
    NodeSet remove_outgoing;
    friend bool operator==(const TraceStep&, const TraceStep&) = default;
};

inline bool cluster_sigma_separated(const ClusterGraph& cg, const SepQuery& q, const NodeSet& remove_incoming = {},
                                    const NodeSet& remove_outgoing = {}) {
    return sigma_separated(mutilate(cg.graph, remove_incoming, remove_outgoing), q);
}

namespace detail {

inline void check_clusters(const ClusterGraph& cg, const ClusterSet& s) {
    for (auto c : s)
        if (c >= cg.num_clusters()) throw InputError("unknown cluster " + std::to_string(c));
}

inline NodeSet to_nodes(const ClusterSet& s) { return NodeSet(s.begin(), s.end()); }

}  // namespace detail

/// Premise of `rule` for P(y | do(w), do(x) or x, z): the four sets must be
/// pairwise disjoint. R1: y _||_ x | w,z in G with w's incoming edges cut.
/// R2: additionally x's outgoing edges cut. R3: incoming edges cut at w and
/// at the members of x that are not ancestors of z in the w-cut graph.
inline TraceStep rule_premise(Rule rule, const ClusterGraph& cg, const ClusterSet& y, const ClusterSet& x,
                              const ClusterSet& z, const ClusterSet& w) {
    for (const auto* s : {&y, &x, &z, &w}) detail::check_clusters(cg, *s);
    const ClusterSet* sets[] = {&y, &x, &z, &w};
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            for (auto c : *sets[i])
                if (sets[j]->count(c)) throw InputError("rule sets must be pairwise disjoint");
    TraceStep t;
    t.rule = rule;
    t.query.x = detail::to_nodes(y);
    t.query.y = detail::to_nodes(x);
    t.query.z = detail::to_nodes(z);
    t.query.z.insert(w.begin(), w.end());
    t.remove_incoming = detail::to_nodes(w);
    if (rule == Rule::r2) t.remove_outgoing = detail::to_nodes(x);
    if (rule == Rule::r3) {
        NodeSet an = ancestors(mutilate(cg.graph, t.remove_incoming, {}), detail::to_nodes(z));
        for (auto c : x)
            if (!an.count(c)) t.remove_incoming.insert(c);
    }
    return t;
}

inline bool premise_holds(const ClusterGraph& cg, const TraceStep& t) {
    if (t.query.x.empty() || t.query.y.empty()) return true;
    return cluster_sigma_separated(cg, t.query, t.remove_incoming, t.remove_outgoing);
}

inline bool rule_applies(Rule rule, const ClusterGraph& cg, const ClusterSet& y, const ClusterSet& x,
                         const ClusterSet& z, const ClusterSet& w) {
    return premise_holds(cg, rule_premise(rule, cg, y, x, z, w));
}

// ---------------------------------------------------------------------------
// Identification

enum class IdStatus { identified, not_atomically_identifiable };

inline const char* to_string(IdStatus s) {
    return s == IdStatus::identified ? "identified" : "not_atomically_identifiable";
}

struct IdentifyResult {
    IdStatus status = IdStatus::not_atomically_identifiable;
    std::optional<CausalExpr> expression;
    std::vector<TraceStep> trace;
    std::uint64_t separation_checks = 0;

    bool identified() const { return status == IdStatus::identified; }
};

struct IdentifyOptions {
    std::size_t max_depth = 4;
};

namespace detail {

// Goal-directed rewrite search over terms P(y | do(x), w). Applying R2 or R3
// to intervened clusters is free; adjustment, splitting the outcome,
// turning an observation into an action (R2 backwards) and dropping an
// observation (R1) cost one level of depth each.
class IdSearch {
public:
    using Mask = std::uint32_t;

    IdSearch(const ClusterGraph& cg, std::size_t max_depth) : cg_(cg), k_(cg.num_clusters()), max_depth_(max_depth) {}

    struct Sol {
        CausalExpr expr;
        std::vector<TraceStep> trace;
    };

    std::optional<Sol> solve(Mask y, Mask x, Mask w, std::size_t d) {
        auto key = std::make_tuple(y, x, w, d);
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;
        auto r = search(y, x, w, d);
        memo_[key] = r;
        return r;
    }

    std::uint64_t checks() const { return checks_; }

private:
    ClusterSet set(Mask m) const {
        ClusterSet s;
        for (ClusterId c = 0; c < k_; ++c)
            if (m >> c & 1) s.insert(c);
        return s;
    }

    std::optional<TraceStep> rule(Rule r, Mask y, Mask x, Mask z, Mask w) {
        auto key = std::make_tuple(static_cast<int>(r), y, x, z, w);
        auto it = rule_memo_.find(key);
        if (it == rule_memo_.end()) {
            ++checks_;
            TraceStep t = rule_premise(r, cg_, set(y), set(x), set(z), set(w));
            bool ok = premise_holds(cg_, t);
            it = rule_memo_.emplace(key, ok ? std::optional<TraceStep>(t) : std::nullopt).first;
        }
        return it->second;
    }

    static std::optional<Sol> with_step(std::optional<Sol> s, const TraceStep& t) {
        if (s) s->trace.insert(s->trace.begin(), t);
        return s;
    }

    static Sol combine(ClusterSet bound, Sol a, Sol b) {
        Sol s;
        CausalExpr prod = CausalExpr::product({std::move(a.expr), std::move(b.expr)});
        s.expr = bound.empty() ? std::move(prod) : CausalExpr::sum(std::move(bound), std::move(prod));
        s.trace = std::move(a.trace);
        s.trace.insert(s.trace.end(), b.trace.begin(), b.trace.end());
        return s;
    }

    template <class F>
    static bool for_subsets(Mask m, F&& f) {
        // non-empty submasks in increasing popcount
        std::vector<Mask> subs;
        for (Mask s = m; s; s = (s - 1) & m) subs.push_back(s);
        std::stable_sort(subs.begin(), subs.end(), [](Mask a, Mask b) {
            int pa = __builtin_popcount(a), pb = __builtin_popcount(b);
            return pa != pb ? pa < pb : a < b;
        });
        for (Mask s : subs)
            if (f(s)) return true;
        return false;
    }

    std::optional<Sol> search(Mask y, Mask x, Mask w, std::size_t d) {
        if (!x) return Sol{CausalExpr::prob(set(y), set(w)), {}};
        if (auto t = rule(Rule::r3, y, x, w, 0)) return with_step(Sol{CausalExpr::prob(set(y), set(w)), {}}, *t);
        if (auto t = rule(Rule::r2, y, x, w, 0)) return with_step(Sol{CausalExpr::prob(set(y), set(w | x)), {}}, *t);
        for (ClusterId c = 0; c < k_; ++c) {
            Mask b = Mask{1} << c;
            if (!(x & b) || x == b) continue;
            if (auto t = rule(Rule::r3, y, b, w, x & ~b))
                if (auto s = with_step(solve(y, x & ~b, w, d), *t)) return s;
            if (auto t = rule(Rule::r2, y, b, w, x & ~b))
                if (auto s = with_step(solve(y, x & ~b, w | b, d), *t)) return s;
        }
        if (d == 0) return std::nullopt;
        const Mask all = k_ == 32 ? ~Mask{0} : (Mask{1} << k_) - 1;
        std::optional<Sol> found;
        // adjustment: sum_Z P(y | do(x), w, Z) P(Z | do(x), w)
        for_subsets(all & ~(y | x | w), [&](Mask z) {
            auto a = solve(y, x, w | z, d - 1);
            if (!a) return false;
            auto b = solve(z, x, w, d - 1);
            if (!b) return false;
            found = combine(set(z), std::move(*a), std::move(*b));
            return true;
        });
        if (found) return found;
        // observation to action
        for_subsets(w, [&](Mask s) {
            auto t = rule(Rule::r2, y, s, w & ~s, x);
            if (!t) return false;
            found = with_step(solve(y, x | s, w & ~s, d - 1), *t);
            return found.has_value();
        });
        if (found) return found;
        // drop observations
        for_subsets(w, [&](Mask s) {
            auto t = rule(Rule::r1, y, s, w & ~s, x);
            if (!t) return false;
            found = with_step(solve(y, x, w & ~s, d - 1), *t);
            return found.has_value();
        });
        if (found) return found;
        // chain rule on the outcome
        if (__builtin_popcount(y) > 1)
            for_subsets(y, [&](Mask s) {
                if (s == y) return false;
                auto a = solve(s, x, w | (y & ~s), d - 1);
                if (!a) return false;
                auto b = solve(y & ~s, x, w, d - 1);
                if (!b) return false;
                found = combine({}, std::move(*a), std::move(*b));
                return true;
            });
        return found;
    }

    const ClusterGraph& cg_;
    std::size_t k_;
    std::size_t max_depth_;
    std::uint64_t checks_ = 0;
    std::map<std::tuple<Mask, Mask, Mask, std::size_t>, std::optional<Sol>> memo_;
    std::map<std::tuple<int, Mask, Mask, Mask, Mask>, std::optional<TraceStep>> rule_memo_;
};

}  // namespace detail

/// Searches for a do-free expression of P(y | do(x)) using the three rules,
/// adjustment sums and the chain rule, up to `max_depth` non-free rewrites.
inline IdentifyResult identify(const ClusterGraph& cg, const ClusterSet& x, const ClusterSet& y,
                               const IdentifyOptions& opt = {}) {
    if (cg.num_clusters() > 12) throw CapacityError("identify supports at most 12 clusters");
    if (x.empty() || y.empty()) throw InputError("treatment and outcome sets must be non-empty");
    detail::check_clusters(cg, x);
    detail::check_clusters(cg, y);
    for (auto c : x)
        if (y.count(c)) throw InputError("treatment and outcome sets must be disjoint");
    auto mask = [](const ClusterSet& s) {
        detail::IdSearch::Mask m = 0;
        for (auto c : s) m |= detail::IdSearch::Mask{1} << c;
        return m;
    };
    detail::IdSearch search(cg, opt.max_depth);
    auto sol = search.solve(mask(y), mask(x), 0, opt.max_depth);
    IdentifyResult r;
    r.separation_checks = search.checks();
    if (sol) {
        r.status = IdStatus::identified;
        r.expression = std::move(sol->expr);
        r.trace = std::move(sol->trace);
        if (!r.expression->do_free()) throw ContractError("identified expression still contains an intervention");
    }
    return r;
}

/// Re-checks every premise of the trace on cg.
inline bool replay_trace(const ClusterGraph& cg, const IdentifyResult& r) {
    return std::all_of(r.trace.begin(), r.trace.end(), [&](const TraceStep& t) { return premise_holds(cg, t); });
}

}  // namespace l2c
