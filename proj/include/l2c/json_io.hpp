#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "l2c/calculus.hpp"
#include "l2c/cluster.hpp"
#include "l2c/errors.hpp"
#include "l2c/graph.hpp"
#include "l2c/local_discovery.hpp"
#include "l2c/metrics.hpp"
#include "l2c/partition.hpp"
#include "l2c/reduction.hpp"
#include "l2c/scm.hpp"

namespace l2c {

using Json = nlohmann::ordered_json;

namespace detail {

template <class F>
auto json_guard(const char* what, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed ") + what + " JSON: " + e.what());
    }
}

inline Json set_json(const NodeSet& s) { return Json(std::vector<VarId>(s.begin(), s.end())); }

inline NodeSet set_from_json(const Json& j) {
    NodeSet s;
    for (const auto& v : j) s.insert(v.get<VarId>());
    return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Graphs

inline Json to_json(const MixedGraph& g) {
    Json j;
    j["num_vars"] = g.num_vars();
    j["directed"] = Json::array();
    for (auto [t, h] : g.directed_edges()) j["directed"].push_back({t, h});
    j["bidirected"] = Json::array();
    for (auto [a, b] : g.bidirected_edges()) j["bidirected"].push_back({a, b});
    return j;
}

inline MixedGraph mixed_graph_from_json(const Json& j, bool allow_self_loops = false) {
    return detail::json_guard("graph", [&] {
        MixedGraph g(j.at("num_vars").get<std::size_t>(), allow_self_loops);
        if (j.contains("directed"))
            for (const auto& e : j["directed"]) g.add_directed(e.at(0).get<VarId>(), e.at(1).get<VarId>());
        if (j.contains("bidirected"))
            for (const auto& e : j["bidirected"]) g.add_bidirected(e.at(0).get<VarId>(), e.at(1).get<VarId>());
        return g;
    });
}

inline Json to_json(const MarkedGraph& g) {
    Json j;
    j["num_vars"] = g.num_vars();
    j["marks"] = Json::array();
    for (const auto& e : g.edges()) j["marks"].push_back({e.a, e.b, to_string(e.mark_at_a), to_string(e.mark_at_b)});
    return j;
}

inline MarkedGraph marked_graph_from_json(const Json& j) {
    return detail::json_guard("marked graph", [&] {
        MarkedGraph g(j.at("num_vars").get<std::size_t>());
        for (const auto& e : j.at("marks"))
            g.add_edge(e.at(0).get<VarId>(), e.at(1).get<VarId>(), mark_from_string(e.at(2).get<std::string>()),
                       mark_from_string(e.at(3).get<std::string>()));
        return g;
    });
}

// ---------------------------------------------------------------------------
// Partitions and cluster graphs

inline Json to_json(const Partition& p) {
    Json clusters = Json::object();
    for (ClusterId c = 0; c < p.num_clusters(); ++c) clusters[p.name(c)] = p.members(c);
    return Json{{"clusters", clusters}};
}

/// Clusters keep their order of appearance; every variable 0..n-1 must occur exactly once.
inline Partition partition_from_json(const Json& j) {
    return detail::json_guard("partition", [&] {
        const auto& cl = j.at("clusters");
        if (!cl.is_object()) throw InputError("partition 'clusters' must be an object");
        std::vector<std::string> names;
        std::map<VarId, ClusterId> seen;
        for (auto it = cl.begin(); it != cl.end(); ++it) {
            auto c = static_cast<ClusterId>(names.size());
            names.push_back(it.key());
            if (it.value().empty()) throw InputError("cluster '" + it.key() + "' is empty");
            for (const auto& v : it.value())
                if (!seen.emplace(v.get<VarId>(), c).second)
                    throw InputError("variable " + std::to_string(v.get<VarId>()) + " assigned twice");
        }
        std::vector<ClusterId> a(seen.size());
        for (auto [v, c] : seen) {
            if (v >= a.size()) throw InputError("partition variables must be 0..n-1 without gaps");
            a[v] = c;
        }
        return Partition(a, names);
    });
}

inline Json to_json(const ClusterGraph& cg) {
    Json j;
    j["clusters"] = Json::array();
    for (ClusterId c = 0; c < cg.num_clusters(); ++c) j["clusters"].push_back({{"name", cg.name(c)}, {"size", cg.sizes[c]}});
    j["directed"] = Json::array();
    for (auto [a, b] : cg.graph.directed_edges()) j["directed"].push_back({cg.name(a), cg.name(b)});
    j["bidirected"] = Json::array();
    for (auto [a, b] : cg.graph.bidirected_edges()) j["bidirected"].push_back({cg.name(a), cg.name(b)});
    return j;
}

inline ClusterGraph cluster_graph_from_json(const Json& j) {
    return detail::json_guard("cluster graph", [&] {
        std::vector<std::size_t> sizes;
        std::vector<std::string> names;
        for (const auto& c : j.at("clusters")) {
            names.push_back(c.at("name").get<std::string>());
            sizes.push_back(c.value("size", std::size_t{1}));
        }
        for (std::size_t a = 0; a < names.size(); ++a)
            for (std::size_t b = a + 1; b < names.size(); ++b)
                if (names[a] == names[b]) throw InputError("duplicate cluster name '" + names[a] + "'");
        ClusterGraph cg(sizes, names);
        if (j.contains("directed"))
            for (const auto& e : j["directed"])
                cg.graph.add_directed(cg.find(e.at(0).get<std::string>()), cg.find(e.at(1).get<std::string>()));
        if (j.contains("bidirected"))
            for (const auto& e : j["bidirected"]) {
                auto a = cg.find(e.at(0).get<std::string>()), b = cg.find(e.at(1).get<std::string>());
                if (a == b) throw InputError("bidirected self-loop on cluster " + cg.name(a));
                cg.graph.add_bidirected(a, b);
            }
        return cg;
    });
}

// ---------------------------------------------------------------------------
// Local structures

inline Json to_json(const LocalStructure& ls) {
    Json j;
    j["target"] = ls.target;
    j["mmb"] = detail::set_json(ls.mmb);
    j["direct_causes"] = detail::set_json(ls.direct_causes);
    j["direct_effects"] = detail::set_json(ls.direct_effects);
    j["undecided"] = detail::set_json(ls.undecided);
    j["confounded"] = detail::set_json(ls.confounded);
    j["v_structures"] = Json::array();
    for (const auto& v : ls.v_structures) j["v_structures"].push_back({v.x, v.z, v.y});
    j["local_graph"] = to_json(ls.local_graph);
    return j;
}

inline LocalStructure local_structure_from_json(const Json& j) {
    return detail::json_guard("local structure", [&] {
        LocalStructure ls;
        ls.target = j.at("target").get<VarId>();
        ls.mmb = detail::set_from_json(j.at("mmb"));
        ls.direct_causes = detail::set_from_json(j.at("direct_causes"));
        ls.direct_effects = detail::set_from_json(j.at("direct_effects"));
        ls.undecided = detail::set_from_json(j.at("undecided"));
        ls.confounded = detail::set_from_json(j.value("confounded", Json::array()));
        for (const auto& v : j.at("v_structures"))
            ls.v_structures.push_back({v.at(0).get<VarId>(), v.at(1).get<VarId>(), v.at(2).get<VarId>()});
        ls.local_graph = marked_graph_from_json(j.at("local_graph"));
        return ls;
    });
}

// ---------------------------------------------------------------------------
// Reduction

inline Json to_json(const ReducedGraph& r, const Partition& original) {
    Json j;
    j["graph"] = to_json(r.graph);
    j["partition"] = to_json(r.partition);
    j["original"] = r.original;
    j["representatives"] = Json::array();
    for (const auto& rep : r.reps) {
        Json e;
        e["cluster"] = original.name(rep.cluster);
        e["out"] = rep.out_rep ? Json(*rep.out_rep) : Json(nullptr);
        e["in"] = rep.in_rep ? Json(*rep.in_rep) : Json(nullptr);
        e["bi"] = rep.bi_rep ? Json(*rep.bi_rep) : Json(nullptr);
        e["kept"] = rep.kept;
        e["verbatim"] = rep.verbatim;
        j["representatives"].push_back(e);
    }
    return j;
}

// ---------------------------------------------------------------------------
// Expressions and identification

inline Json to_json(const CausalExpr& e) {
    auto ids = [](const ClusterSet& s) { return Json(std::vector<ClusterId>(s.begin(), s.end())); };
    Json j;
    switch (e.kind) {
        case CausalExpr::Kind::prob:
            j = {{"kind", "prob"}, {"outcome", ids(e.outcome)}, {"given", ids(e.given)}, {"do", ids(e.intervened)}};
            break;
        case CausalExpr::Kind::sum:
            j = {{"kind", "sum"}, {"over", ids(e.bound)}, {"child", to_json(e.children[0])}};
            break;
        case CausalExpr::Kind::product: {
            Json f = Json::array();
            for (const auto& c : e.children) f.push_back(to_json(c));
            j = {{"kind", "product"}, {"factors", f}};
            break;
        }
        case CausalExpr::Kind::fraction:
            j = {{"kind", "fraction"}, {"numerator", to_json(e.children[0])}, {"denominator", to_json(e.children[1])}};
            break;
    }
    return j;
}

inline CausalExpr expr_from_json(const Json& j) {
    return detail::json_guard("expression", [&]() -> CausalExpr {
        auto ids = [](const Json& a) {
            ClusterSet s;
            for (const auto& v : a) s.insert(v.get<ClusterId>());
            return s;
        };
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "prob") return CausalExpr::prob(ids(j.at("outcome")), ids(j.value("given", Json::array())), ids(j.value("do", Json::array())));
        if (kind == "sum") return CausalExpr::sum(ids(j.at("over")), expr_from_json(j.at("child")));
        if (kind == "product") {
            std::vector<CausalExpr> f;
            for (const auto& c : j.at("factors")) f.push_back(expr_from_json(c));
            return CausalExpr::product(std::move(f));
        }
        if (kind == "fraction") return CausalExpr::fraction(expr_from_json(j.at("numerator")), expr_from_json(j.at("denominator")));
        throw InputError("unknown expression kind '" + kind + "'");
    });
}

inline Json to_json(const IdentifyResult& r, const ClusterGraph& cg) {
    auto names = [&](const NodeSet& s) {
        Json a = Json::array();
        for (auto c : s) a.push_back(cg.name(c));
        return a;
    };
    std::vector<std::string> nm;
    for (ClusterId c = 0; c < cg.num_clusters(); ++c) nm.push_back(cg.name(c));
    Json j;
    j["status"] = to_string(r.status);
    if (r.expression) {
        j["expression"] = to_string(*r.expression, nm);
        j["expression_tree"] = to_json(*r.expression);
    }
    j["trace"] = Json::array();
    for (const auto& t : r.trace)
        j["trace"].push_back({{"rule", to_string(t.rule)},
                              {"separated", names(t.query.x)},
                              {"from", names(t.query.y)},
                              {"given", names(t.query.z)},
                              {"remove_incoming", names(t.remove_incoming)},
                              {"remove_outgoing", names(t.remove_outgoing)}});
    j["separation_checks"] = r.separation_checks;
    return j;
}

inline IdentifyResult identify_result_from_json(const Json& j, const ClusterGraph& cg) {
    return detail::json_guard("identify result", [&] {
        auto ids = [&](const Json& a) {
            NodeSet s;
            for (const auto& v : a) s.insert(cg.find(v.get<std::string>()));
            return s;
        };
        IdentifyResult r;
        const auto st = j.at("status").get<std::string>();
        if (st == "identified") r.status = IdStatus::identified;
        else if (st == "not_atomically_identifiable") r.status = IdStatus::not_atomically_identifiable;
        else throw InputError("unknown status '" + st + "'");
        if (j.contains("expression_tree")) r.expression = expr_from_json(j["expression_tree"]);
        for (const auto& t : j.at("trace")) {
            TraceStep s;
            s.rule = rule_from_string(t.at("rule").get<std::string>());
            s.query = {ids(t.at("separated")), ids(t.at("from")), ids(t.at("given"))};
            s.remove_incoming = ids(t.at("remove_incoming"));
            s.remove_outgoing = ids(t.at("remove_outgoing"));
            r.trace.push_back(std::move(s));
        }
        r.separation_checks = j.value("separation_checks", std::uint64_t{0});
        return r;
    });
}

// ---------------------------------------------------------------------------
// SCMs and metrics

inline Json to_json(const Scm& s) {
    Json j;
    j["graph"] = to_json(s.graph);
    j["latents"] = detail::set_json(s.latents);
    j["mechanism"] = s.mechanism == Mechanism::linear ? "linear" : "tanh";
    j["coefficients"] = Json::array();
    for (VarId v = 0; v < s.num_vars(); ++v)
        for (auto [p, w] : s.coef[v]) j["coefficients"].push_back({p, v, w});
    j["noise"] = Json::array();
    for (VarId v = 0; v < s.num_vars(); ++v) j["noise"].push_back({{"mean", s.noise_mean[v]}, {"var", s.noise_var[v]}});
    return j;
}

inline Scm scm_from_json(const Json& j) {
    return detail::json_guard("SCM", [&] {
        Scm s;
        s.graph = mixed_graph_from_json(j.at("graph"));
        s.latents = detail::set_from_json(j.value("latents", Json::array()));
        auto mech = j.value("mechanism", std::string("linear"));
        if (mech == "linear") s.mechanism = Mechanism::linear;
        else if (mech == "tanh") s.mechanism = Mechanism::tanh;
        else throw InputError("unknown mechanism '" + mech + "'");
        s.coef.assign(s.num_vars(), {});
        for (const auto& c : j.at("coefficients")) s.coef.at(c.at(1).get<VarId>()).emplace_back(c.at(0).get<VarId>(), c.at(2).get<double>());
        for (const auto& n : j.at("noise")) {
            s.noise_mean.push_back(n.at("mean").get<double>());
            s.noise_var.push_back(n.at("var").get<double>());
        }
        s.validate();
        return s;
    });
}

inline Json to_json(const MetricsReport& m) {
    Json j;
    const auto& cols = MetricsReport::csv_columns();
    auto v = m.values();
    for (std::size_t i = 0; i < cols.size(); ++i) j[cols[i]] = v[i];
    j["n_tests"] = m.n_tests;
    return j;
}

inline MetricsReport metrics_from_json(const Json& j) {
    return detail::json_guard("metrics", [&] {
        MetricsReport m;
        m.precision = j.at("precision").get<double>();
        m.recall = j.at("recall").get<double>();
        m.f1 = j.at("f1").get<double>();
        m.ari = j.at("ari").get<double>();
        m.nmi = j.at("nmi").get<double>();
        m.mse = j.at("mse").get<double>();
        m.n_tests = j.at("n_tests").get<std::uint64_t>();
        m.runtime_seconds = j.at("runtime_seconds").get<double>();
        m.check();
        return m;
    });
}

// ---------------------------------------------------------------------------
// Files

inline Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(path + ": " + e.what());
    }
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write " + path);
    out << text;
}

inline void write_json_file(const std::string& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

}  // namespace l2c
