#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "l2c/pipeline.hpp"

using namespace l2c;

namespace {

constexpr int kNotIdentifiable = 2;

// Flags mirroring the flat config schema. Values are kept as text and typed
// through the JSON reader so that file and flag share one validation path.
struct ConfigFlags {
    std::string file;
    std::map<std::string, std::string> scalar;
    std::map<std::string, CLI::Option*> opts;
    std::vector<std::string> x, y;
    CLI::Option* x_opt = nullptr;
    CLI::Option* y_opt = nullptr;
    bool no_reduction = false;
    bool baseline = false;

    void add(CLI::App* app) {
        app->add_option("--config", file, "JSON config file (flags override it)")->check(CLI::ExistingFile);
        auto opt = [&](const std::string& key, const std::string& help) {
            std::string flag = "--" + key;
            std::replace(flag.begin(), flag.end(), '_', '-');
            opts[key] = app->add_option(flag, scalar[key], help);
        };
        opt("seed", "random seed");
        opt("alpha", "significance level for fisher_z");
        opt("backend", "oracle | fisher_z");
        opt("clustering", "components | label_propagation");
        opt("threshold", "similarity threshold");
        opt("w_parents", "similarity weight on shared causes");
        opt("w_children", "similarity weight on shared effects");
        opt("w_vpatterns", "similarity weight on shared v-structure patterns");
        opt("max_depth", "identification search depth");
        opt("max_cond", "largest conditioning set in local discovery");
        opt("threads", "worker threads");
        opt("model", "planted | erdos_renyi | barabasi_albert");
        opt("p", "observed variables");
        opt("degree", "expected degree of random graphs");
        opt("latent_frac", "fraction of latent variables in random graphs");
        opt("n", "samples");
        opt("k", "clusters");
        x_opt = app->add_option("--x", x, "intervened cluster names");
        y_opt = app->add_option("--y", y, "outcome cluster names");
        app->add_flag("--no-reduction", no_reduction, "identify on the unreduced cluster graph");
        app->add_flag("--baseline", baseline, "also count tests of a global skeleton search");
    }

    RunConfig resolve() const {
        RunConfig base;
        if (!file.empty()) base = run_config_from_json(read_json_file(file));
        Json over = Json::object();
        static const std::set<std::string> text{"backend", "clustering", "model"};
        for (const auto& [key, o] : opts) {
            if (!o->count()) continue;
            const auto& v = scalar.at(key);
            if (text.count(key)) {
                over[key] = v;
            } else {
                try {
                    over[key] = Json::parse(v);
                } catch (const nlohmann::json::exception&) {
                    throw InputError("--" + key + ": not a number: " + v);
                }
            }
        }
        if (x_opt->count()) over["x"] = x;
        if (y_opt->count()) over["y"] = y;
        if (no_reduction) over["reduction"] = false;
        if (baseline) over["baseline"] = true;
        return run_config_from_json(over, base);
    }
};

void print(const Json& j) { std::cout << j.dump(2) << '\n'; }

Json file_list(const std::vector<std::string>& files, const std::string& dir) {
    Json a = Json::array();
    for (const auto& f : files) a.push_back((std::filesystem::path(dir) / f).string());
    return a;
}

NodeSet id_set(const std::vector<VarId>& v) { return {v.begin(), v.end()}; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Local-to-cluster causal discovery and identification"};
    app.require_subcommand(1);

    // generate
    ConfigFlags gen_cfg;
    std::string gen_out;
    auto* gen = app.add_subcommand("generate", "Sample a ground-truth model (and data for fisher_z)");
    gen_cfg.add(gen);
    gen->add_option("--out", gen_out, "output directory")->required();

    // discover-local
    ConfigFlags disc_cfg;
    std::string disc_graph, disc_data, disc_out;
    std::vector<VarId> disc_targets;
    auto* disc = app.add_subcommand("discover-local", "Local structure around every variable");
    disc_cfg.add(disc);
    disc->add_option("--graph", disc_graph, "ADMG JSON answering oracle queries")->check(CLI::ExistingFile);
    disc->add_option("--data", disc_data, "CSV data for fisher_z")->check(CLI::ExistingFile);
    disc->add_option("--target", disc_targets, "only these targets; prints their structures");
    disc->add_option("--out", disc_out, "output directory");

    // cluster
    ConfigFlags clu_cfg;
    std::string clu_locals, clu_out;
    auto* clu = app.add_subcommand("cluster", "Group variables by local-structure similarity");
    clu_cfg.add(clu);
    clu->add_option("--locals", clu_locals, "local_structures.json")->required()->check(CLI::ExistingFile);
    clu->add_option("--out", clu_out, "output directory");

    // reduce
    ConfigFlags red_cfg;
    std::string red_locals, red_graph, red_partition, red_out;
    auto* red = app.add_subcommand("reduce", "Cluster graph and representative reduction");
    red_cfg.add(red);
    red->add_option("--locals", red_locals, "local_structures.json")->check(CLI::ExistingFile);
    red->add_option("--graph", red_graph, "micro graph JSON instead of learned structures")->check(CLI::ExistingFile);
    red->add_option("--partition", red_partition, "partition JSON")->required()->check(CLI::ExistingFile);
    red->add_option("--out", red_out, "output directory");

    // identify
    ConfigFlags id_cfg;
    std::string id_cdag, id_out;
    auto* idc = app.add_subcommand("identify", "Identify P(Y | do(X)) on a cluster graph");
    id_cfg.add(idc);
    idc->add_option("--cdag", id_cdag, "cluster graph JSON")->required()->check(CLI::ExistingFile);
    idc->add_option("--out", id_out, "output directory");

    // separate
    std::string sep_graph, sep_criterion = "m";
    std::vector<VarId> sep_x, sep_y, sep_z;
    auto* sep = app.add_subcommand("separate", "Separation query on a micro graph");
    sep->add_option("--graph", sep_graph, "graph JSON")->required()->check(CLI::ExistingFile);
    sep->add_option("--x", sep_x, "first variable set")->required();
    sep->add_option("--y", sep_y, "second variable set")->required();
    sep->add_option("--z", sep_z, "conditioning set");
    sep->add_option("--criterion", sep_criterion, "m | sigma | brute-m | brute-sigma")
        ->check(CLI::IsMember({"m", "sigma", "brute-m", "brute-sigma"}));

    // pipeline
    ConfigFlags pipe_cfg;
    std::string pipe_out, pipe_partition;
    auto* pipe = app.add_subcommand("pipeline", "All stages end to end");
    pipe_cfg.add(pipe);
    pipe->add_option("--out", pipe_out, "output directory")->required();
    pipe->add_option("--partition", pipe_partition, "use this partition instead of discovering one")
        ->check(CLI::ExistingFile);

    // bench
    ConfigFlags bench_cfg;
    std::string bench_grid, bench_out;
    std::vector<std::size_t> bench_ps;
    BenchOptions bench_opt;
    bool bench_no_timing = false;
    auto* ben = app.add_subcommand("bench", "Replicated runs over a grid of configurations");
    bench_cfg.add(ben);
    ben->add_option("--grid", bench_grid, "JSON array of config objects")->check(CLI::ExistingFile);
    ben->add_option("--p-grid", bench_ps, "vary p over these values");
    ben->add_option("--reps", bench_opt.replications, "replications per cell");
    ben->add_option("--master-seed", bench_opt.master_seed, "seed for derived replication seeds");
    ben->add_option("--jobs", bench_opt.threads, "concurrent replications");
    ben->add_flag("--no-timing", bench_no_timing, "omit runtime columns");
    ben->add_option("--out", bench_out, "CSV path (stdout when absent)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*gen) {
            auto cfg = gen_cfg.resolve();
            auto inst = run_stage("generate", [&] { return generate_instance(cfg); });
            auto files = run_stage("generate", [&] { return write_generate_artifacts(gen_out, inst, cfg); });
            print({{"observed", inst.truth.num_vars()},
                   {"latents", inst.scm.latents.size()},
                   {"clusters", inst.partition.num_clusters()},
                   {"files", file_list(files, gen_out)}});
            return 0;
        }
        if (*disc) {
            auto cfg = disc_cfg.resolve();
            std::optional<MixedGraph> g;
            std::optional<Dataset> data;
            if (cfg.backend == "oracle") {
                if (disc_graph.empty()) throw InputError("oracle backend needs --graph");
                g = mixed_graph_from_json(read_json_file(disc_graph));
            } else {
                if (disc_data.empty()) throw InputError("fisher_z backend needs --data");
                data = read_csv_file(disc_data);
            }
            auto backend = make_backend(cfg, g ? &*g : nullptr, data ? &*data : nullptr);
            if (!disc_targets.empty()) {
                CiTester tester(backend);
                Json a = Json::array();
                for (VarId t : disc_targets)
                    a.push_back(to_json(run_stage("discover-local", [&] { return discover_local(t, tester, discovery_options(cfg)); })));
                print({{"n_tests", tester.count()}, {"locals", a}});
                return 0;
            }
            if (disc_out.empty()) throw InputError("--out is required unless --target is given");
            auto d = discover_stage(backend, cfg);
            auto files = write_discovery_artifacts(disc_out, d);
            print({{"n_tests", d.n_tests}, {"conflicts", d.conflicts.size()}, {"files", file_list(files, disc_out)}});
            return 0;
        }
        if (*clu) {
            auto cfg = clu_cfg.resolve();
            auto d = discovery_from_json(read_json_file(clu_locals));
            auto p = cluster_stage(d.locals, cfg);
            if (clu_out.empty()) {
                print(to_json(p));
            } else {
                auto files = write_partition_artifact(clu_out, p);
                print({{"clusters", p.num_clusters()}, {"files", file_list(files, clu_out)}});
            }
            return 0;
        }
        if (*red) {
            auto cfg = red_cfg.resolve();
            auto p = partition_from_json(read_json_file(red_partition));
            Reduction r;
            if (!red_locals.empty()) {
                r = reduce_stage(discovery_from_json(read_json_file(red_locals)).merged, p, cfg);
            } else if (!red_graph.empty()) {
                auto g = mixed_graph_from_json(read_json_file(red_graph));
                r = run_stage("reduce", [&] {
                    Reduction out;
                    out.learned = g;
                    out.cdag = derive_cdag(g, p);
                    if (cfg.reduction) {
                        out.reduced = reduce_graph(g, p);
                        out.identify_graph = derive_cdag(out.reduced->graph, out.reduced->partition);
                    } else {
                        out.identify_graph = out.cdag;
                    }
                    return out;
                });
            } else {
                throw InputError("reduce needs --locals or --graph");
            }
            if (red_out.empty()) {
                print(to_json(r.identify_graph));
            } else {
                auto files = write_reduction_artifacts(red_out, r, p);
                print({{"clusters", r.cdag.num_clusters()},
                       {"reduced_nodes", r.reduced ? r.reduced->graph.num_vars() : r.learned.num_vars()},
                       {"files", file_list(files, red_out)}});
            }
            return 0;
        }
        if (*idc) {
            auto cfg = id_cfg.resolve();
            if (cfg.x.empty()) throw InputError("identify needs --x and --y");
            auto cg = cluster_graph_from_json(read_json_file(id_cdag));
            auto r = identify_stage(cg, cfg.x, cfg.y, cfg);
            if (id_out.empty()) print(to_json(r, cg));
            else {
                auto files = write_identify_artifact(id_out, r, cg);
                Json s{{"status", to_string(r.status)}, {"files", file_list(files, id_out)}};
                if (r.expression) {
                    std::vector<std::string> names;
                    for (ClusterId c = 0; c < cg.num_clusters(); ++c) names.push_back(cg.name(c));
                    s["expression"] = to_string(*r.expression, names);
                }
                print(s);
            }
            return r.identified() ? 0 : kNotIdentifiable;
        }
        if (*sep) {
            auto g = mixed_graph_from_json(read_json_file(sep_graph), true);
            SepQuery q{id_set(sep_x), id_set(sep_y), id_set(sep_z)};
            bool s = sep_criterion == "m"       ? m_separated(g, q)
                     : sep_criterion == "sigma" ? sigma_separated(g, q)
                     : brute_force_separated(g, q, sep_criterion == "brute-m" ? SepMode::m : SepMode::sigma);
            print({{"criterion", sep_criterion}, {"separated", s}});
            return 0;
        }
        if (*pipe) {
            auto cfg = pipe_cfg.resolve();
            std::optional<Partition> part;
            if (!pipe_partition.empty()) part = partition_from_json(read_json_file(pipe_partition));
            auto rep = run_pipeline(cfg, part);
            write_pipeline_artifacts(pipe_out, rep, cfg);
            auto man = read_json_file((std::filesystem::path(pipe_out) / artifact::manifest).string());
            print(man);
            return rep.result && !rep.result->identified() ? kNotIdentifiable : 0;
        }
        if (*ben) {
            auto base = bench_cfg.resolve();
            std::vector<RunConfig> grid;
            if (!bench_grid.empty()) {
                auto j = read_json_file(bench_grid);
                if (!j.is_array()) throw InputError("bench grid must be a JSON array");
                for (const auto& cell : j) grid.push_back(run_config_from_json(cell, base));
            } else {
                grid.push_back(base);
            }
            if (!bench_ps.empty()) {
                std::vector<RunConfig> expanded;
                for (const auto& c : grid)
                    for (auto p : bench_ps) {
                        auto e = c;
                        e.p = p;
                        e.validate();
                        expanded.push_back(e);
                    }
                grid = std::move(expanded);
            }
            bench_opt.timing = !bench_no_timing;
            auto cells = bench_runs(grid, bench_opt);
            auto csv = bench_csv(cells, bench_opt);
            for (const auto& c : cells)
                for (const auto& f : c.failures) std::cerr << "cell p=" << c.config.p << ": " << f << '\n';
            if (bench_out.empty()) std::cout << csv;
            else write_text_file(bench_out, csv);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
