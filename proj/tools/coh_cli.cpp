// Command-line front end for the Chain-of-History forecasting pipeline.

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "coh/pipeline.hpp"

namespace {

using namespace coh;

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;  // key=value pairs
    std::string transcript_log;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "flat key = value config file");
    cmd->add_option("--set", args.overrides,
                    "config override, key=value (repeatable; applied after --config)");
    cmd->add_option("--transcript-log", args.transcript_log, "append-only JSONL call log");
}

CoHConfig resolve_config(const CommonArgs& args) {
    CoHConfig cfg;
    std::string text;
    if (!args.config_path.empty()) {
        std::ifstream in(args.config_path);
        if (!in) throw Error("cannot open config: " + args.config_path);
        std::ostringstream ss;
        ss << in.rdbuf();
        text = ss.str();
    }
    for (const auto& kv : args.overrides) text += kv + "\n";
    if (!text.empty()) cfg = parse_config(text);
    return cfg;
}

Dataset load_from_config(const CoHConfig& cfg, bool augment = true) {
    if (cfg.train_path.empty() || cfg.valid_path.empty() || cfg.test_path.empty() ||
        cfg.entity_map_path.empty() || cfg.relation_map_path.empty())
        throw Error("config must name train/valid/test and entity/relation map paths");
    Dataset ds = load_dataset(cfg.train_path, cfg.valid_path, cfg.test_path,
                              cfg.entity_map_path, cfg.relation_map_path);
    if (!cfg.reversed_names_path.empty()) load_reversed_names(ds.vocab, cfg.reversed_names_path);
    if (!cfg.relation_phrases_path.empty())
        load_relation_phrases(ds.vocab, cfg.relation_phrases_path);
    if (augment) augment_reversed(ds.kg, ds.vocab);
    return ds;
}

std::unique_ptr<Gateway> make_gateway(const CoHConfig& cfg, const Dataset& ds,
                                      const std::string& log_path) {
    BackendConfig backend = cfg.backend;
    backend.seed = cfg.seed;
    if (backend.kind == BackendKind::oracle_mock && !backend.entity_pool)
        backend.entity_pool =
            std::make_shared<const std::vector<std::string>>(ds.vocab.entity_names);
    return std::make_unique<Gateway>(backend, cfg.gen, log_path);
}

int cmd_prepare(const CommonArgs& args, const std::string& dump_dir) {
    CoHConfig cfg = resolve_config(args);
    Dataset ds = load_from_config(cfg, /*augment=*/false);
    const SplitCounts raw = ds.kg.counts();
    std::cout << "entities: " << ds.vocab.num_entities() << "\n"
              << "relations: " << ds.vocab.num_base_relations() << "\n"
              << "train: " << raw.train << "\nvalid: " << raw.valid << "\ntest: " << raw.test
              << "\n";
    if (!dump_dir.empty()) {
        for (auto [split, name] : {std::pair{Split::train, "train"}, {Split::valid, "valid"},
                                   {Split::test, "test"}}) {
            std::ofstream out(dump_dir + "/" + name + ".canonical.txt");
            if (!out) throw Error("cannot write canonical dump to " + dump_dir);
            out << dump_canonical(ds.kg, split);
        }
        std::cout << "canonical dumps written to " << dump_dir << "\n";
    }
    augment_reversed(ds.kg, ds.vocab);
    const auto queries = queries_from_test(ds.kg, ds.vocab);
    std::cout << "queries (forward + reversed): " << queries.size() << "\n";
    return 0;
}

int cmd_run_coh(const CommonArgs& args, const std::string& records_path,
                const std::string& manifest_path, const std::string& run_id,
                const std::string& filter_path, int limit) {
    CoHConfig cfg = resolve_config(args);
    cfg.validate();
    Dataset ds = load_from_config(cfg);
    auto queries = queries_from_test(ds.kg, ds.vocab);
    if (!filter_path.empty())
        queries = apply_filter(queries, read_filter_list(filter_path), ds.kg);
    if (limit > 0 && static_cast<size_t>(limit) < queries.size())
        queries.resize(static_cast<size_t>(limit));

    auto gateway = make_gateway(cfg, ds, args.transcript_log);
    const auto records = run_coh(ds.kg, ds.vocab, queries, cfg, *gateway);
    write_run_records(records, records_path);
    if (!manifest_path.empty()) write_manifest(cfg, manifest_path, run_id);
    std::cout << "wrote " << records.size() << " run records to " << records_path << "\n";
    return 0;
}

int count_entities(const CoHConfig& cfg) {
    if (cfg.entity_map_path.empty())
        throw Error("entity_map_path required to size the entity space");
    std::ifstream in(cfg.entity_map_path);
    if (!in) throw Error("cannot open entity map: " + cfg.entity_map_path);
    int count = 0;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) ++count;
    return count;
}

void dump_per_query(const std::vector<RunRecord>& records, const GraphScoreTable& graph,
                    const FusionConfig& fusion, int num_entities, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write per-query dump: " + path);
    static const ScoreMap kEmpty;
    for (const auto& rec : records) {
        const ScoreMap llm = build_llm_scores(rec.answers, fusion.alpha);
        auto git = graph.per_query.find(rec.query_index);
        const FusedRanking fused =
            fuse(llm, git == graph.per_query.end() ? kEmpty : git->second, fusion, num_entities);
        nlohmann::json top = nlohmann::json::array();
        for (EntityId e : fused.top(10))
            top.push_back({{"entity", e}, {"score", fused.scores[static_cast<size_t>(e)]}});
        nlohmann::json j = {
            {"query_index", rec.query_index},
            {"query",
             {{"subject", rec.query.subject},
              {"relation", rec.query.relation},
              {"ground_truth", rec.query.ground_truth},
              {"time", rec.query.time}}},
            {"rank", rank_of_truth(fused, rec.query)},
            {"top10", std::move(top)},
        };
        out << j.dump() << '\n';
    }
}

int cmd_fuse_eval(const CommonArgs& args, const std::string& records_path,
                  const std::string& graph_path, const std::string& report_path,
                  const std::string& dump_path, const std::string& run_id,
                  const std::string& dataset, bool shuffle, uint64_t shuffle_seed) {
    CoHConfig cfg = resolve_config(args);
    const int num_entities = count_entities(cfg);
    const auto records = read_run_records(records_path);
    GraphScoreTable graph;
    if (!graph_path.empty()) graph = load_graph_scores(graph_path, num_entities);

    std::optional<IndexShuffle> shuffle_opt;
    if (shuffle) shuffle_opt = IndexShuffle{shuffle_seed};
    const EvalResult result =
        evaluate_records(records, graph, cfg.fusion, num_entities, shuffle_opt);

    const std::string csv =
        metrics_csv_header() + metrics_csv_row(run_id, dataset, shuffle ? "no_is" : "baseline",
                                               cfg.fusion.alpha, cfg.fusion.w, result);
    if (report_path.empty()) std::cout << csv;
    else {
        std::ofstream out(report_path);
        if (!out) throw Error("cannot write report: " + report_path);
        out << csv;
        std::cout << "MRR " << result.mrr << ", Hits@1 " << result.hits.at(1) << ", Hits@3 "
                  << result.hits.at(3) << ", Hits@10 " << result.hits.at(10) << " over "
                  << result.query_count << " queries\n";
    }
    if (!dump_path.empty())
        dump_per_query(records, graph, cfg.fusion, num_entities, dump_path);
    return 0;
}

int cmd_sweep(const CommonArgs& args, const std::string& records_path,
              const std::string& graph_path, const std::string& param_name,
              const std::string& values_csv, const std::string& out_path,
              const std::string& run_id, const std::string& dataset) {
    CoHConfig cfg = resolve_config(args);
    const int num_entities = count_entities(cfg);
    const auto records = read_run_records(records_path);
    GraphScoreTable graph;
    if (!graph_path.empty()) graph = load_graph_scores(graph_path, num_entities);

    SweepParam param;
    if (param_name == "alpha") param = SweepParam::alpha;
    else if (param_name == "w") param = SweepParam::w;
    else throw Error("sweep param must be alpha or w");

    std::vector<double> values;
    std::istringstream vs(values_csv);
    std::string tok;
    while (std::getline(vs, tok, ',')) values.push_back(std::stod(tok));
    if (values.empty()) throw Error("sweep: no values given");

    const std::string csv =
        sweep(records, graph, param, values, cfg.fusion, num_entities, run_id, dataset);
    if (out_path.empty()) std::cout << csv;
    else {
        std::ofstream out(out_path);
        if (!out) throw Error("cannot write sweep CSV: " + out_path);
        out << csv;
    }
    return 0;
}

int cmd_leakage(const CommonArgs& args, const std::string& out_path) {
    CoHConfig cfg = resolve_config(args);
    Dataset ds = load_from_config(cfg);
    auto gateway = make_gateway(cfg, ds, args.transcript_log);
    const Calendar calendar = Calendar::parse(cfg.calendar_origin);
    std::vector<int32_t> unchecked;
    const FilterList filter =
        run_leakage_check(ds.kg, ds.vocab, *gateway, calendar, cfg.max_in_flight, &unchecked);
    write_filter_list(filter, out_path);
    size_t test_count = ds.kg.counts().test / 2;  // originals only (store is augmented)
    std::cout << "known facts: " << filter.test_quad_indices.size() << " / " << test_count;
    if (test_count > 0)
        std::cout << " (" << 100.0 * filter.test_quad_indices.size() / test_count << "%)";
    std::cout << "\nunchecked (transport failures): " << unchecked.size() << "\n";
    return 0;
}

int cmd_explain(const CommonArgs& args, const std::string& records_path, int query_index) {
    CoHConfig cfg = resolve_config(args);
    Dataset ds = load_from_config(cfg);
    const auto records = read_run_records(records_path);
    for (const auto& rec : records) {
        if (rec.query_index != query_index) continue;
        auto gateway = make_gateway(cfg, ds, args.transcript_log);
        std::cout << explain(ds.kg, ds.vocab, rec, cfg, *gateway) << "\n";
        return 0;
    }
    throw Error("no run record for query index " + std::to_string(query_index));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Chain-of-History reasoning pipeline for temporal KG forecasting"};
    app.require_subcommand(1);

    CommonArgs common;
    std::string records = "records.jsonl", manifest, run_id = "run", dataset = "dataset";
    std::string graph_path, report_path, dump_path, out_path, dump_dir, filter_path;
    std::string param_name, values_csv, ablation_kind;
    int limit = 0, query_index = 0;
    uint64_t shuffle_seed = 0;

    auto* prepare = app.add_subcommand("prepare", "load, validate and report a dataset");
    add_common(prepare, common);
    prepare->add_option("--dump-dir", dump_dir, "write canonical per-split dumps here");

    auto* run = app.add_subcommand("run-coh", "run the k-step reasoning loop");
    add_common(run, common);
    run->add_option("--records", records, "output run-record JSONL");
    run->add_option("--manifest", manifest, "output run manifest JSON");
    run->add_option("--run-id", run_id, "identifier stamped into outputs");
    run->add_option("--filter", filter_path, "leakage filter list to apply");
    run->add_option("--limit", limit, "process only the first N queries");

    auto* abl = app.add_subcommand("ablate", "run an ablation variant");
    add_common(abl, common);
    abl->add_option("--kind", ablation_kind, "no_lr | no_is | anonymize")->required();
    abl->add_option("--records", records, "run-record JSONL (input for no_is, output otherwise)");
    abl->add_option("--manifest", manifest, "output run manifest JSON");
    abl->add_option("--run-id", run_id, "identifier stamped into outputs");
    abl->add_option("--graph-scores", graph_path, "graph score TSV (no_is)");
    abl->add_option("--report", report_path, "metrics CSV output (no_is)");
    abl->add_option("--shuffle-seed", shuffle_seed, "seed for the no_is permutation");
    abl->add_option("--limit", limit, "process only the first N queries");

    auto* fe = app.add_subcommand("fuse-eval", "score cached records and compute metrics");
    add_common(fe, common);
    fe->add_option("--records", records, "run-record JSONL")->required();
    fe->add_option("--graph-scores", graph_path, "TSV query_index<TAB>entity_id<TAB>score");
    fe->add_option("--report", report_path, "metrics CSV output");
    fe->add_option("--dump", dump_path, "per-query JSONL dump (rank + top-10)");
    fe->add_option("--run-id", run_id, "identifier stamped into outputs");
    fe->add_option("--dataset", dataset, "dataset label for the CSV");

    auto* sw = app.add_subcommand("sweep", "re-score cached records over a parameter grid");
    add_common(sw, common);
    sw->add_option("--records", records, "run-record JSONL")->required();
    sw->add_option("--graph-scores", graph_path, "graph score TSV");
    sw->add_option("--param", param_name, "alpha | w")->required();
    sw->add_option("--values", values_csv, "comma-separated values")->required();
    sw->add_option("--out", out_path, "CSV output path (stdout when omitted)");
    sw->add_option("--run-id", run_id, "identifier stamped into outputs");
    sw->add_option("--dataset", dataset, "dataset label for the CSV");

    auto* lk = app.add_subcommand("leakage-check", "ask the backend about every test fact");
    add_common(lk, common);
    lk->add_option("--out", out_path, "filter list output")->required();

    auto* ex = app.add_subcommand("explain", "request an explanation for a completed trace");
    add_common(ex, common);
    ex->add_option("--records", records, "run-record JSONL")->required();
    ex->add_option("--query-index", query_index, "query to explain")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (prepare->parsed()) return cmd_prepare(common, dump_dir);
        if (run->parsed()) return cmd_run_coh(common, records, manifest, run_id, filter_path, limit);
        if (abl->parsed()) {
            const AblationKind kind = ablation_from_string(ablation_kind);
            if (kind == AblationKind::no_is)
                return cmd_fuse_eval(common, records, graph_path, report_path, "", run_id,
                                     dataset, /*shuffle=*/true, shuffle_seed);
            CoHConfig derived = ablate(kind, resolve_config(common));
            CommonArgs derived_args = common;
            derived_args.config_path.clear();
            derived_args.overrides.clear();
            std::istringstream cfg_lines(serialize_config(derived));
            std::string line;
            while (std::getline(cfg_lines, line))
                if (!line.empty()) derived_args.overrides.push_back(line);
            return cmd_run_coh(derived_args, records, manifest, run_id, filter_path, limit);
        }
        if (fe->parsed())
            return cmd_fuse_eval(common, records, graph_path, report_path, dump_path, run_id,
                                 dataset, false, 0);
        if (sw->parsed())
            return cmd_sweep(common, records, graph_path, param_name, values_csv, out_path,
                             run_id, dataset);
        if (lk->parsed()) return cmd_leakage(common, out_path);
        if (ex->parsed()) return cmd_explain(common, records, query_index);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
