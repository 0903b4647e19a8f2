#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "l2c/calculus.hpp"
#include "l2c/ci.hpp"
#include "l2c/cluster.hpp"
#include "l2c/estimate.hpp"
#include "l2c/json_io.hpp"
#include "l2c/local_discovery.hpp"
#include "l2c/metrics.hpp"
#include "l2c/reduction.hpp"
#include "l2c/scm.hpp"

namespace l2c {

/// Error raised inside one pipeline stage; what() carries the stage tag.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& msg)
        : std::runtime_error("[" + stage + "] " + msg), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

template <class F>
auto run_stage(const char* stage, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

/// splitmix64 over (seed, tag): independent streams for every random step.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace seed_tag {
inline constexpr std::uint64_t graph = 1, latents = 2, scm = 3, partition = 4, data = 5, planted = 6, bootstrap = 7;
}

struct RunConfig {
    std::uint64_t seed = 1;
    double alpha = 0.05;
    std::string backend = "oracle";  // oracle | fisher_z
    ClusterMethod clustering = ClusterMethod::components;
    double threshold = 0.3;
    SimilarityWeights weights{};
    bool reduction = true;
    std::size_t max_depth = 4;
    std::optional<std::size_t> max_cond;  // default: unbounded for oracle, 3 for fisher_z
    std::size_t threads = 1;
    // generator
    std::string model = "planted";  // planted | erdos_renyi | barabasi_albert
    std::size_t p = 40;
    double degree = 2.0;
    double latent_frac = 0.2;
    std::size_t n = 10000;
    std::size_t k = 4;
    // query over discovered cluster names; empty = no identification
    std::vector<std::string> x;
    std::vector<std::string> y;
    bool baseline = false;  // also count tests of a global skeleton search

    std::optional<std::size_t> effective_max_cond() const {
        if (max_cond) return max_cond;
        if (backend == "fisher_z") return 3;
        return std::nullopt;
    }

    void validate() const {
        if (backend != "oracle" && backend != "fisher_z") throw InputError("backend must be oracle or fisher_z");
        if (!(alpha > 0 && alpha < 1)) throw InputError("alpha must lie in (0,1)");
        if (!(threshold >= 0)) throw InputError("threshold must be >= 0");
        if (weights.parents < 0 || weights.children < 0 || weights.vpatterns < 0)
            throw InputError("similarity weights must be non-negative");
        if (model != "planted") graph_model_from_string(model);
        if (p < 1) throw InputError("p must be at least 1");
        if (k < 1 || k > p) throw InputError("k must lie in [1, p]");
        if (!(degree >= 0)) throw InputError("degree must be >= 0");
        if (!(latent_frac >= 0 && latent_frac < 1)) throw InputError("latent fraction must lie in [0,1)");
        if (backend == "fisher_z" && n < 4) throw InputError("fisher_z needs at least 4 samples");
        if (threads < 1) throw InputError("threads must be at least 1");
        if (x.empty() != y.empty()) throw InputError("a query needs both x and y clusters");
    }
};

inline Json to_json(const RunConfig& c) {
    Json j;
    j["seed"] = c.seed;
    j["alpha"] = c.alpha;
    j["backend"] = c.backend;
    j["clustering"] = to_string(c.clustering);
    j["threshold"] = c.threshold;
    j["w_parents"] = c.weights.parents;
    j["w_children"] = c.weights.children;
    j["w_vpatterns"] = c.weights.vpatterns;
    j["reduction"] = c.reduction;
    j["max_depth"] = c.max_depth;
    j["max_cond"] = c.max_cond ? Json(*c.max_cond) : Json(nullptr);
    j["threads"] = c.threads;
    j["model"] = c.model;
    j["p"] = c.p;
    j["degree"] = c.degree;
    j["latent_frac"] = c.latent_frac;
    j["n"] = c.n;
    j["k"] = c.k;
    j["x"] = c.x;
    j["y"] = c.y;
    j["baseline"] = c.baseline;
    return j;
}

/// Flat schema; keys present in `j` override `base`. Unknown keys are errors.
inline RunConfig run_config_from_json(const Json& j, RunConfig c = {}) {
    return detail::json_guard("config", [&] {
        if (!j.is_object()) throw InputError("config must be a JSON object");
        for (auto it = j.begin(); it != j.end(); ++it) {
            const auto& k = it.key();
            const auto& v = it.value();
            if (k == "seed") c.seed = v.get<std::uint64_t>();
            else if (k == "alpha") c.alpha = v.get<double>();
            else if (k == "backend") c.backend = v.get<std::string>();
            else if (k == "clustering") c.clustering = cluster_method_from_string(v.get<std::string>());
            else if (k == "threshold") c.threshold = v.get<double>();
            else if (k == "w_parents") c.weights.parents = v.get<double>();
            else if (k == "w_children") c.weights.children = v.get<double>();
            else if (k == "w_vpatterns") c.weights.vpatterns = v.get<double>();
            else if (k == "reduction") c.reduction = v.get<bool>();
            else if (k == "max_depth") c.max_depth = v.get<std::size_t>();
            else if (k == "max_cond") c.max_cond = v.is_null() ? std::nullopt : std::optional(v.get<std::size_t>());
            else if (k == "threads") c.threads = v.get<std::size_t>();
            else if (k == "model") c.model = v.get<std::string>();
            else if (k == "p") c.p = v.get<std::size_t>();
            else if (k == "degree") c.degree = v.get<double>();
            else if (k == "latent_frac") c.latent_frac = v.get<double>();
            else if (k == "n") c.n = v.get<std::size_t>();
            else if (k == "k") c.k = v.get<std::size_t>();
            else if (k == "x") c.x = v.get<std::vector<std::string>>();
            else if (k == "y") c.y = v.get<std::vector<std::string>>();
            else if (k == "baseline") c.baseline = v.get<bool>();
            else throw InputError("unknown config key '" + k + "'");
        }
        c.validate();
        return c;
    });
}

// ---------------------------------------------------------------------------
// Problem instances

struct Instance {
    Scm scm;
    MixedGraph truth;             // ADMG over observed variables
    std::vector<VarId> observed;  // observed id -> SCM id
    Partition partition;          // ground-truth clusters over observed ids
};

/// Near-equal cluster sizes summing to p.
inline std::vector<std::size_t> even_sizes(std::size_t p, std::size_t k) {
    std::vector<std::size_t> s(k, p / k);
    for (std::size_t i = 0; i < p % k; ++i) ++s[i];
    return s;
}

inline Instance generate_instance(const RunConfig& cfg) {
    cfg.validate();
    Instance inst;
    if (cfg.model == "planted") {
        PlantedConfig pc;
        pc.cluster_sizes = even_sizes(cfg.p, cfg.k);
        auto ps = planted_cluster_scm(pc, derive_seed(cfg.seed, seed_tag::planted));
        inst.scm = std::move(ps.scm);
        inst.truth = std::move(ps.truth.graph);
        inst.observed = std::move(ps.truth.observed);
        inst.partition = std::move(ps.partition);
        return inst;
    }
    // p counts observed variables; latents come on top
    auto total = static_cast<std::size_t>(std::lround(static_cast<double>(cfg.p) / (1.0 - cfg.latent_frac)));
    auto dag = gen_dag(total, cfg.degree, graph_model_from_string(cfg.model), derive_seed(cfg.seed, seed_tag::graph));
    auto proj = hide_latents(dag, cfg.latent_frac, derive_seed(cfg.seed, seed_tag::latents));
    inst.scm = make_scm(dag, proj.latents, derive_seed(cfg.seed, seed_tag::scm));
    inst.truth = std::move(proj.graph);
    inst.observed = std::move(proj.observed);
    inst.partition = planted_partition(inst.truth, std::min(cfg.k, inst.truth.num_vars()), PartitionMode::structural,
                                       derive_seed(cfg.seed, seed_tag::partition));
    return inst;
}

inline Dataset instance_data(const Instance& inst, const RunConfig& cfg) {
    return sample(inst.scm, cfg.n, derive_seed(cfg.seed, seed_tag::data));
}

// ---------------------------------------------------------------------------
// Stages

struct Discovery {
    std::vector<LocalStructure> locals;  // reconciled with the merged marks
    MarkedGraph merged;
    std::vector<MarkConflict> conflicts;
    std::uint64_t n_tests = 0;
};

inline DiscoveryOptions discovery_options(const RunConfig& cfg) {
    DiscoveryOptions o;
    o.max_cond = cfg.effective_max_cond();
    return o;
}

inline std::shared_ptr<const CiBackend> make_backend(const RunConfig& cfg, const MixedGraph* truth, const Dataset* data) {
    if (cfg.backend == "oracle") {
        if (!truth) throw InputError("oracle backend needs a graph");
        return std::make_shared<OracleBackend>(*truth);
    }
    if (!data) throw InputError("fisher_z backend needs data");
    return std::make_shared<FisherZBackend>(*data, cfg.alpha);
}

inline Discovery discover_stage(const std::shared_ptr<const CiBackend>& backend, const RunConfig& cfg) {
    return run_stage("discover-local", [&] {
        CiTester tester(backend);
        Discovery d;
        d.locals = discover_all(tester, discovery_options(cfg), cfg.threads);
        d.merged = merge_local_marks(d.locals, tester.num_vars(), &d.conflicts);
        reconcile(d.locals, d.merged);
        d.n_tests = tester.count();
        return d;
    });
}

inline Partition cluster_stage(const std::vector<LocalStructure>& locals, const RunConfig& cfg) {
    return run_stage("cluster", [&] {
        auto sim = build_similarity(locals, cfg.weights);
        return cluster(sim, cfg.threshold, cfg.clustering);
    });
}

struct Reduction {
    MixedGraph learned;            // conservative micro graph
    ClusterGraph cdag;             // cluster graph of the learned graph
    std::optional<ReducedGraph> reduced;
    ClusterGraph identify_graph;   // what identification runs on
};

inline Reduction reduce_stage(const MarkedGraph& merged, const Partition& p, const RunConfig& cfg) {
    return run_stage("reduce", [&] {
        Reduction r;
        r.learned = learned_graph(merged);
        if (p.num_vars() != r.learned.num_vars())
            throw InputError("partition covers " + std::to_string(p.num_vars()) + " variables, data has " +
                             std::to_string(r.learned.num_vars()));
        r.cdag = derive_cdag(r.learned, p);
        if (cfg.reduction) {
            r.reduced = reduce_graph(r.learned, p);
            r.identify_graph = derive_cdag(r.reduced->graph, r.reduced->partition);
        } else {
            r.identify_graph = r.cdag;
        }
        return r;
    });
}

inline IdentifyResult identify_stage(const ClusterGraph& cg, const std::vector<std::string>& x,
                                     const std::vector<std::string>& y, const RunConfig& cfg) {
    return run_stage("identify", [&] {
        ClusterSet xs, ys;
        for (const auto& n : x) xs.insert(cg.find(n));
        for (const auto& n : y) ys.insert(cg.find(n));
        IdentifyOptions o;
        o.max_depth = cfg.max_depth;
        return identify(cg, xs, ys, o);
    });
}

// ---------------------------------------------------------------------------
// End to end

struct PipelineReport {
    Instance instance;
    Discovery discovery;
    Partition partition;
    Reduction reduction;
    std::optional<IdentifyResult> result;
    std::optional<double> estimate;  // E[mean of y | do(x = 1)]
    std::optional<double> truth_effect;
    MetricsReport metrics;
    std::uint64_t baseline_tests = 0;
};

namespace detail {

inline std::set<Edge> directed_set(const MixedGraph& g) {
    auto e = g.directed_edges();
    return {e.begin(), e.end()};
}

}  // namespace detail

/// Runs every stage. A supplied partition replaces cluster discovery.
inline PipelineReport run_pipeline(const RunConfig& cfg, const std::optional<Partition>& partition = std::nullopt) {
    const auto start = std::chrono::steady_clock::now();
    cfg.validate();
    PipelineReport rep;
    rep.instance = run_stage("generate", [&] { return generate_instance(cfg); });
    std::optional<Dataset> data;
    const bool query = !cfg.x.empty();
    if (cfg.backend == "fisher_z" || (query && cfg.n > 0 && rep.instance.scm.mechanism == Mechanism::linear))
        data = run_stage("generate", [&] { return instance_data(rep.instance, cfg); });
    auto backend = make_backend(cfg, &rep.instance.truth, data ? &*data : nullptr);
    rep.discovery = discover_stage(backend, cfg);
    if (partition) {
        if (partition->num_vars() != rep.instance.truth.num_vars())
            throw StageError("cluster", "supplied partition does not cover the observed variables");
        rep.partition = *partition;
    } else {
        rep.partition = cluster_stage(rep.discovery.locals, cfg);
    }
    rep.reduction = reduce_stage(rep.discovery.merged, rep.partition, cfg);
    if (query) {
        rep.result = identify_stage(rep.reduction.identify_graph, cfg.x, cfg.y, cfg);
        if (rep.result->identified() && data) {
            run_stage("estimate", [&] {
                const auto& p = rep.partition;
                std::map<VarId, double> xv, do_scm;
                for (const auto& n : cfg.x)
                    for (VarId v : p.members(p.find(n))) {
                        xv[v] = 1.0;
                        do_scm[rep.instance.observed[v]] = 1.0;
                    }
                std::vector<VarId> yv;
                for (const auto& n : cfg.y)
                    for (VarId v : p.members(p.find(n))) yv.push_back(v);
                try {
                    rep.estimate = estimate(*rep.result->expression, *data, p, xv, yv);
                } catch (const NumericError&) {
                    return;  // unusable design; no effect reported
                }
                auto mu = linear_means(rep.instance.scm, do_scm);
                double t = 0;
                for (VarId v : yv) t += mu[rep.instance.observed[v]];
                rep.truth_effect = t / static_cast<double>(yv.size());
            });
        }
    }
    if (cfg.baseline) {
        CiTester tester(backend);
        pc_skeleton(tester, cfg.effective_max_cond());
        rep.baseline_tests = tester.count();
    }
    auto& m = rep.metrics;
    auto prf = edge_prf(committed_edges(rep.discovery.merged), detail::directed_set(rep.instance.truth));
    m.precision = prf.precision;
    m.recall = prf.recall;
    m.f1 = prf.f1;
    m.ari = ari(rep.partition, rep.instance.partition);
    m.nmi = nmi(rep.partition, rep.instance.partition);
    if (rep.estimate && rep.truth_effect) m.mse = effect_mse({*rep.estimate}, {*rep.truth_effect});
    m.n_tests = rep.discovery.n_tests;
    m.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    m.check();
    return rep;
}

// ---------------------------------------------------------------------------
// Artifacts. Every stage writes the same files whether it runs inside the
// pipeline or on its own.

namespace artifact {
inline const char* truth_graph = "graphs/truth.json";
inline const char* scm = "graphs/scm.json";
inline const char* truth_partition = "partitions/truth.json";
inline const char* data = "data.csv";
inline const char* locals = "graphs/local_structures.json";
inline const char* learned = "graphs/learned.json";
inline const char* learned_dot = "graphs/learned.dot";
inline const char* partition = "partitions/discovered.json";
inline const char* cdag = "graphs/cdag.json";
inline const char* reduced = "graphs/reduced.json";
inline const char* identify_graph = "graphs/identify_cdag.json";
inline const char* expression = "expressions/identify.json";
inline const char* metrics = "metrics/metrics.json";
inline const char* metrics_csv = "metrics/metrics.csv";
inline const char* manifest = "manifest.json";
}  // namespace artifact

namespace detail {

inline std::string out_path(const std::string& dir, const char* rel) {
    auto p = std::filesystem::path(dir) / rel;
    std::filesystem::create_directories(p.parent_path());
    return p.string();
}

}  // namespace detail

inline Json discovery_json(const Discovery& d) {
    Json j;
    j["num_vars"] = d.merged.num_vars();
    j["n_tests"] = d.n_tests;
    j["locals"] = Json::array();
    for (const auto& ls : d.locals) j["locals"].push_back(to_json(ls));
    j["merged"] = to_json(d.merged);
    j["conflicts"] = Json::array();
    for (const auto& c : d.conflicts) j["conflicts"].push_back({c.a, c.b, c.at});
    return j;
}

inline Discovery discovery_from_json(const Json& j) {
    return detail::json_guard("local structures", [&] {
        Discovery d;
        d.n_tests = j.value("n_tests", std::uint64_t{0});
        for (const auto& l : j.at("locals")) d.locals.push_back(local_structure_from_json(l));
        d.merged = marked_graph_from_json(j.at("merged"));
        for (const auto& c : j.value("conflicts", Json::array()))
            d.conflicts.push_back({c.at(0).get<VarId>(), c.at(1).get<VarId>(), c.at(2).get<VarId>()});
        return d;
    });
}

inline std::vector<std::string> write_generate_artifacts(const std::string& dir, const Instance& inst,
                                                         const RunConfig& cfg) {
    write_json_file(detail::out_path(dir, artifact::truth_graph), to_json(inst.truth));
    Json s = to_json(inst.scm);
    s["observed"] = inst.observed;
    write_json_file(detail::out_path(dir, artifact::scm), s);
    write_json_file(detail::out_path(dir, artifact::truth_partition), to_json(inst.partition));
    std::vector<std::string> files{artifact::truth_graph, artifact::scm, artifact::truth_partition};
    if (cfg.backend == "fisher_z") {
        std::ofstream f(detail::out_path(dir, artifact::data));
        if (!f) throw InputError("cannot write data file");
        write_csv(instance_data(inst, cfg), f);
        files.push_back(artifact::data);
    }
    return files;
}

inline std::vector<std::string> write_discovery_artifacts(const std::string& dir, const Discovery& d) {
    write_json_file(detail::out_path(dir, artifact::locals), discovery_json(d));
    write_json_file(detail::out_path(dir, artifact::learned), to_json(d.merged));
    write_text_file(detail::out_path(dir, artifact::learned_dot), to_dot(d.merged));
    return {artifact::locals, artifact::learned, artifact::learned_dot};
}

inline std::vector<std::string> write_partition_artifact(const std::string& dir, const Partition& p) {
    write_json_file(detail::out_path(dir, artifact::partition), to_json(p));
    return {artifact::partition};
}

inline std::vector<std::string> write_reduction_artifacts(const std::string& dir, const Reduction& r, const Partition& p) {
    write_json_file(detail::out_path(dir, artifact::cdag), to_json(r.cdag));
    write_json_file(detail::out_path(dir, artifact::identify_graph), to_json(r.identify_graph));
    std::vector<std::string> files{artifact::cdag, artifact::identify_graph};
    if (r.reduced) {
        write_json_file(detail::out_path(dir, artifact::reduced), to_json(*r.reduced, p));
        files.push_back(artifact::reduced);
    }
    return files;
}

inline std::vector<std::string> write_identify_artifact(const std::string& dir, const IdentifyResult& r, const ClusterGraph& cg) {
    write_json_file(detail::out_path(dir, artifact::expression), to_json(r, cg));
    return {artifact::expression};
}

inline std::string metrics_csv(const std::vector<MetricsReport>& rows) {
    std::ostringstream os;
    os << std::setprecision(10);
    const auto& cols = MetricsReport::csv_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
    os << '\n';
    for (const auto& m : rows) {
        auto v = m.values();
        for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
        os << '\n';
    }
    return os.str();
}

/// Writes every artifact of a finished run plus manifest.json.
inline void write_pipeline_artifacts(const std::string& dir, const PipelineReport& rep, const RunConfig& cfg) {
    std::vector<std::string> files = write_generate_artifacts(dir, rep.instance, cfg);
    auto add = [&](std::vector<std::string> f) { files.insert(files.end(), f.begin(), f.end()); };
    add(write_discovery_artifacts(dir, rep.discovery));
    add(write_partition_artifact(dir, rep.partition));
    add(write_reduction_artifacts(dir, rep.reduction, rep.partition));
    if (rep.result) add(write_identify_artifact(dir, *rep.result, rep.reduction.identify_graph));
    write_json_file(detail::out_path(dir, artifact::metrics), to_json(rep.metrics));
    write_text_file(detail::out_path(dir, artifact::metrics_csv), metrics_csv({rep.metrics}));
    files.push_back(artifact::metrics);
    files.push_back(artifact::metrics_csv);
    Json man;
    man["config"] = to_json(cfg);
    man["files"] = files;
    man["n_tests"] = rep.metrics.n_tests;
    if (cfg.baseline) man["baseline_n_tests"] = rep.baseline_tests;
    man["num_clusters"] = rep.partition.num_clusters();
    man["identify_nodes"] = std::accumulate(rep.reduction.identify_graph.sizes.begin(),
                                            rep.reduction.identify_graph.sizes.end(), std::size_t{0});
    if (rep.result) {
        man["status"] = to_string(rep.result->status);
        man["separation_checks"] = rep.result->separation_checks;
    }
    if (rep.estimate) man["estimate"] = *rep.estimate;
    if (rep.truth_effect) man["truth_effect"] = *rep.truth_effect;
    man["runtime_seconds"] = rep.metrics.runtime_seconds;
    write_json_file(detail::out_path(dir, artifact::manifest), man);
}

// ---------------------------------------------------------------------------
// Benchmark

struct BenchOptions {
    std::size_t replications = 100;
    std::uint64_t master_seed = 1;
    std::size_t threads = 1;
    bool timing = true;  // false drops runtime columns so output is reproducible
};

struct BenchCell {
    RunConfig config;
    std::vector<PipelineReport> runs;  // successful replications, ordered by replication
    std::vector<std::string> failures;
};

inline std::vector<BenchCell> bench_runs(const std::vector<RunConfig>& grid, const BenchOptions& opt) {
    if (grid.empty()) throw InputError("bench grid is empty");
    if (opt.replications < 1) throw InputError("bench needs at least one replication");
    std::vector<BenchCell> cells(grid.size());
    std::vector<std::optional<PipelineReport>> slots(grid.size() * opt.replications);
    std::vector<std::string> errors(slots.size());
    parallel_for(slots.size(), opt.threads, [&](std::size_t i) {
        const std::size_t c = i / opt.replications, r = i % opt.replications;
        RunConfig cfg = grid[c];
        cfg.seed = derive_seed(derive_seed(opt.master_seed, c), r);
        cfg.threads = 1;
        try {
            slots[i] = run_pipeline(cfg);
        } catch (const std::exception& e) {
            errors[i] = "replication " + std::to_string(r) + ": " + e.what();
        }
    });
    for (std::size_t i = 0; i < slots.size(); ++i) {
        auto& cell = cells[i / opt.replications];
        if (slots[i]) cell.runs.push_back(std::move(*slots[i]));
        else cell.failures.push_back(errors[i]);
    }
    for (std::size_t c = 0; c < grid.size(); ++c) cells[c].config = grid[c];
    return cells;
}

namespace detail {

inline std::pair<double, double> mean_sd(const std::vector<double>& v) {
    if (v.empty()) return {std::nan(""), std::nan("")};
    double m = 0, s = 0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    for (double x : v) s += (x - m) * (x - m);
    return {m, v.size() > 1 ? std::sqrt(s / static_cast<double>(v.size() - 1)) : 0.0};
}

}  // namespace detail

/// One row per grid cell: configuration, replication counts, mean and sd of each metric.
inline std::string bench_csv(const std::vector<BenchCell>& cells, const BenchOptions& opt) {
    std::ostringstream os;
    os << std::setprecision(10);
    std::vector<std::string> metrics;
    for (const auto& c : MetricsReport::csv_columns())
        if (opt.timing || c != "runtime_seconds") metrics.push_back(c);
    metrics.insert(metrics.end(), {"identify_checks", "identify_nodes", "num_clusters", "baseline_n_tests"});
    os << "model,p,k,degree,latent_frac,n,backend,replications,failures";
    for (const auto& m : metrics) os << ',' << m << "_mean," << m << "_sd";
    os << '\n';
    for (const auto& cell : cells) {
        const auto& c = cell.config;
        os << c.model << ',' << c.p << ',' << c.k << ',' << c.degree << ',' << c.latent_frac << ',' << c.n << ','
           << c.backend << ',' << cell.runs.size() << ',' << cell.failures.size();
        std::map<std::string, std::vector<double>> col;
        for (const auto& r : cell.runs) {
            auto v = r.metrics.values();
            for (std::size_t i = 0; i < v.size(); ++i) col[MetricsReport::csv_columns()[i]].push_back(v[i]);
            if (r.result) col["identify_checks"].push_back(static_cast<double>(r.result->separation_checks));
            const auto& sz = r.reduction.identify_graph.sizes;
            col["identify_nodes"].push_back(static_cast<double>(std::accumulate(sz.begin(), sz.end(), std::size_t{0})));
            col["num_clusters"].push_back(static_cast<double>(r.partition.num_clusters()));
            if (c.baseline) col["baseline_n_tests"].push_back(static_cast<double>(r.baseline_tests));
        }
        for (const auto& m : metrics) {
            auto [mean, sd] = detail::mean_sd(col[m]);
            os << ',' << mean << ',' << sd;
        }
        os << '\n';
    }
    return os.str();
}

inline std::string bench(const std::vector<RunConfig>& grid, const BenchOptions& opt = {}) {
    return bench_csv(bench_runs(grid, opt), opt);
}

}  // namespace l2c
