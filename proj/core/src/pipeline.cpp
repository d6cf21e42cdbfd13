#include "coh/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

namespace coh {

using json = nlohmann::json;

void CoHConfig::validate() const {
    if (k < 2) throw Error("config: k must be >= 2");
    if (n < 1) throw Error("config: n must be >= 1");
    if (first_order_limit < n) throw Error("config: first_order_limit must be >= n");
    if (per_chain_cap < 1) throw Error("config: per_chain_cap must be >= 1");
    if (max_in_flight < 1) throw Error("config: max_in_flight must be >= 1");
    if (fusion.alpha <= 0) throw Error("config: alpha must be > 0");
    if (fusion.w < 0 || fusion.w > 1) throw Error("config: w must be in [0,1]");
}

unsigned CoHConfig::history_split_mask() const {
    unsigned mask = 0x7;  // every split with time < t^q
    if (!include_valid_history)
        mask = 1u << static_cast<unsigned>(Split::train);
    return mask;
}

namespace {

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw Error("config: bad boolean for " + key + ": " + v);
}

BackendKind backend_from_string(const std::string& v) {
    if (v == "http") return BackendKind::http_chat;
    if (v == "scripted") return BackendKind::scripted_mock;
    if (v == "recency") return BackendKind::recency_mock;
    if (v == "oracle") return BackendKind::oracle_mock;
    throw Error("config: unknown backend: " + v);
}

std::string backend_to_string(BackendKind k) {
    switch (k) {
        case BackendKind::http_chat: return "http";
        case BackendKind::scripted_mock: return "scripted";
        case BackendKind::recency_mock: return "recency";
        default: return "oracle";
    }
}

GraphNorm norm_from_string(const std::string& v) {
    if (v == "none") return GraphNorm::none;
    if (v == "minmax") return GraphNorm::minmax;
    if (v == "softmax") return GraphNorm::softmax;
    throw Error("config: unknown graph_normalization: " + v);
}

std::string norm_to_string(GraphNorm n) {
    switch (n) {
        case GraphNorm::none: return "none";
        case GraphNorm::minmax: return "minmax";
        default: return "softmax";
    }
}

void apply_key(CoHConfig& c, const std::string& key, const std::string& value) {
    if (key == "k") c.k = std::stoi(value);
    else if (key == "n") c.n = std::stoi(value);
    else if (key == "first_order_limit") c.first_order_limit = std::stoi(value);
    else if (key == "per_chain_cap") c.per_chain_cap = std::stoi(value);
    else if (key == "time_style") {
        if (value == "ordinal_day") c.time_mode = TimeMode::ordinal_day;
        else if (value == "anonymized_integer") c.time_mode = TimeMode::anonymized_integer;
        else throw Error("config: unknown time_style: " + value);
    } else if (key == "anonymize") c.anonymize = parse_bool(value, key);
    else if (key == "fuzzy_resolution") c.fuzzy_resolution = parse_bool(value, key);
    else if (key == "include_valid_history") c.include_valid_history = parse_bool(value, key);
    else if (key == "recency_step1") c.recency_step1 = parse_bool(value, key);
    else if (key == "seed") c.seed = std::stoull(value);
    else if (key == "max_in_flight") c.max_in_flight = std::stoi(value);
    else if (key == "backend") c.backend.kind = backend_from_string(value);
    else if (key == "endpoint") c.backend.endpoint = value;
    else if (key == "endpoint_path") c.backend.path = value;
    else if (key == "model") c.backend.model = value;
    else if (key == "auth_env") c.backend.auth_env = value;
    else if (key == "timeout_s") c.backend.timeout_s = std::stod(value);
    else if (key == "retries") c.backend.retries = std::stoi(value);
    else if (key == "backoff_s") c.backend.backoff_initial_s = std::stod(value);
    else if (key == "script_path") c.backend.script_path = value;
    else if (key == "hit_probability") c.backend.hit_probability = std::stod(value);
    else if (key == "max_tokens") c.gen.max_tokens = std::stoi(value);
    else if (key == "temperature") c.gen.temperature = std::stod(value);
    else if (key == "top_p") c.gen.top_p = std::stod(value);
    else if (key == "alpha") c.fusion.alpha = std::stod(value);
    else if (key == "w") c.fusion.w = std::stod(value);
    else if (key == "graph_normalization") c.fusion.graph_normalization = norm_from_string(value);
    else if (key == "train_path") c.train_path = value;
    else if (key == "valid_path") c.valid_path = value;
    else if (key == "test_path") c.test_path = value;
    else if (key == "entity_map_path") c.entity_map_path = value;
    else if (key == "relation_map_path") c.relation_map_path = value;
    else if (key == "reversed_names_path") c.reversed_names_path = value;
    else if (key == "relation_phrases_path") c.relation_phrases_path = value;
    else if (key == "template_dir") c.template_dir = value;
    else if (key == "calendar_origin") c.calendar_origin = value;
    else throw Error("config: unknown key: " + key);
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

CoHConfig parse_config(const std::string& text) {
    CoHConfig c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw Error("config line " + std::to_string(lineno) + ": expected 'key = value'");
        apply_key(c, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
    c.validate();
    return c;
}

CoHConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const CoHConfig& c) {
    std::ostringstream out;
    out << "k = " << c.k << "\n";
    out << "n = " << c.n << "\n";
    out << "first_order_limit = " << c.first_order_limit << "\n";
    out << "per_chain_cap = " << c.per_chain_cap << "\n";
    out << "time_style = "
        << (c.time_mode == TimeMode::ordinal_day ? "ordinal_day" : "anonymized_integer") << "\n";
    out << "anonymize = " << (c.anonymize ? "true" : "false") << "\n";
    out << "fuzzy_resolution = " << (c.fuzzy_resolution ? "true" : "false") << "\n";
    out << "include_valid_history = " << (c.include_valid_history ? "true" : "false") << "\n";
    out << "recency_step1 = " << (c.recency_step1 ? "true" : "false") << "\n";
    out << "seed = " << c.seed << "\n";
    out << "max_in_flight = " << c.max_in_flight << "\n";
    out << "backend = " << backend_to_string(c.backend.kind) << "\n";
    if (!c.backend.endpoint.empty()) out << "endpoint = " << c.backend.endpoint << "\n";
    if (!c.backend.model.empty()) out << "model = " << c.backend.model << "\n";
    if (!c.backend.script_path.empty()) out << "script_path = " << c.backend.script_path << "\n";
    if (c.backend.kind == BackendKind::oracle_mock)
        out << "hit_probability = " << c.backend.hit_probability << "\n";
    out << "max_tokens = " << c.gen.max_tokens << "\n";
    out << "temperature = " << c.gen.temperature << "\n";
    out << "top_p = " << c.gen.top_p << "\n";
    out << "alpha = " << c.fusion.alpha << "\n";
    out << "w = " << c.fusion.w << "\n";
    out << "graph_normalization = " << norm_to_string(c.fusion.graph_normalization) << "\n";
    if (!c.train_path.empty()) out << "train_path = " << c.train_path << "\n";
    if (!c.valid_path.empty()) out << "valid_path = " << c.valid_path << "\n";
    if (!c.test_path.empty()) out << "test_path = " << c.test_path << "\n";
    if (!c.entity_map_path.empty()) out << "entity_map_path = " << c.entity_map_path << "\n";
    if (!c.relation_map_path.empty())
        out << "relation_map_path = " << c.relation_map_path << "\n";
    if (!c.reversed_names_path.empty())
        out << "reversed_names_path = " << c.reversed_names_path << "\n";
    if (!c.relation_phrases_path.empty())
        out << "relation_phrases_path = " << c.relation_phrases_path << "\n";
    if (!c.template_dir.empty()) out << "template_dir = " << c.template_dir << "\n";
    out << "calendar_origin = " << c.calendar_origin << "\n";
    return out.str();
}

namespace {

std::vector<int> recency_ids(int n, int item_count) {
    std::vector<int> ids(static_cast<size_t>(std::min(n, item_count)));
    std::iota(ids.begin(), ids.end(), 0);
    return ids;
}

// Extends chains at the current step order; flagged lower-order chains
// ride along unchanged, preserving the selection order.
std::vector<HistoryChain> extend_selected(const TemporalKG& kg,
                                          const std::vector<HistoryChain>& selected, int order,
                                          int per_chain_cap, unsigned splits) {
    std::vector<HistoryChain> out;
    for (const auto& chain : selected) {
        if (chain.order() != order) {
            out.push_back(chain);
            continue;
        }
        auto extended = extend_chains(kg, {chain}, per_chain_cap, splits);
        out.insert(out.end(), extended.begin(), extended.end());
    }
    return out;
}

}  // namespace

std::vector<RunRecord> run_coh(const TemporalKG& kg, const Vocabulary& vocab,
                               const std::vector<Query>& queries, const CoHConfig& config,
                               Gateway& gateway) {
    config.validate();
    if (!kg.augmented) throw Error("run_coh requires an augmented store");

    const TemplateSet templates = config.template_dir.empty()
                                      ? default_templates()
                                      : load_templates(config.template_dir);
    const Verbalizer verbalizer(vocab, {config.time_mode, 0}, config.anonymize, templates);

    std::vector<RunRecord> records(queries.size());
    std::vector<std::vector<HistoryChain>> chains(queries.size());
    for (size_t i = 0; i < queries.size(); ++i) {
        records[i].query_index = static_cast<int>(i);
        records[i].query = queries[i];
        auto refs = first_order_histories(kg, queries[i], config.first_order_limit,
                                          config.history_split_mask());
        for (const auto& ref : refs) chains[i].push_back({{ref.quad_index}, false});
        if (chains[i].empty()) records[i].errors.push_back("no history before query time");
    }

    // selection steps 1..k-1, one batch per step
    for (int step = 1; step <= config.k - 1; ++step) {
        std::vector<size_t> pending;
        std::vector<PromptBundle> bundles;
        std::vector<std::vector<int>> selections(queries.size());
        for (size_t i = 0; i < queries.size(); ++i) {
            if (chains[i].empty()) continue;
            if (step == 1 && config.recency_step1) {
                selections[i] = recency_ids(config.n, static_cast<int>(chains[i].size()));
                continue;
            }
            pending.push_back(i);
            bundles.push_back(
                verbalizer.build_select_prompt(kg, chains[i], queries[i], config.n, step));
        }

        auto results = gateway.complete_batch(bundles, config.max_in_flight);
        for (size_t b = 0; b < pending.size(); ++b) {
            const size_t i = pending[b];
            if (results[b].ok()) {
                try {
                    selections[i] =
                        parse_id_selection(results[b].text, bundles[b], config.n).local_ids;
                    continue;
                } catch (const EmptySelectionError&) {
                    records[i].errors.push_back("step " + std::to_string(step) +
                                                ": unparseable selection, recency fallback");
                }
            } else {
                records[i].errors.push_back("step " + std::to_string(step) + ": " +
                                            *results[b].error + ", recency fallback");
            }
            selections[i] = recency_ids(config.n, static_cast<int>(chains[i].size()));
        }

        for (size_t i = 0; i < queries.size(); ++i) {
            if (chains[i].empty()) continue;
            records[i].selected_ids.push_back(selections[i]);
            std::vector<HistoryChain> selected;
            selected.reserve(selections[i].size());
            for (int id : selections[i])
                selected.push_back(chains[i][static_cast<size_t>(id)]);
            chains[i] = extend_selected(kg, selected, step, config.per_chain_cap,
                                        config.history_split_mask());
        }
    }

    // answer step
    std::vector<size_t> pending;
    std::vector<PromptBundle> bundles;
    for (size_t i = 0; i < queries.size(); ++i) {
        if (chains[i].empty()) continue;
        records[i].final_chains = chains[i];
        auto bundle = verbalizer.build_answer_prompt(kg, chains[i], queries[i]);
        bundle.ground_truth_name = config.anonymize
                                       ? std::to_string(queries[i].ground_truth)
                                       : vocab.entity_surface(queries[i].ground_truth);
        pending.push_back(i);
        bundles.push_back(std::move(bundle));
    }
    auto results = gateway.complete_batch(bundles, config.max_in_flight);
    for (size_t b = 0; b < pending.size(); ++b) {
        const size_t i = pending[b];
        if (results[b].ok()) {
            try {
                records[i].answers =
                    parse_ranked_answers(results[b].text, vocab, config.fuzzy_resolution);
                continue;
            } catch (const EmptyAnswerError&) {
                records[i].errors.push_back("answer step: no parseable answers");
            }
        } else {
            records[i].errors.push_back("answer step: " + *results[b].error);
        }
        records[i].answers = {};  // zero LLM scores for this query
    }
    return records;
}

AblationKind ablation_from_string(const std::string& name) {
    if (name == "no_lr") return AblationKind::no_lr;
    if (name == "no_is") return AblationKind::no_is;
    if (name == "anonymize") return AblationKind::anonymize;
    throw Error("unknown ablation kind: " + name);
}

CoHConfig ablate(AblationKind kind, const CoHConfig& base) {
    CoHConfig derived = base;
    switch (kind) {
        case AblationKind::no_lr:
            derived.recency_step1 = true;
            break;
        case AblationKind::no_is:
            break;  // scoring-time transform; config unchanged
        case AblationKind::anonymize:
            derived.anonymize = true;
            break;
    }
    return derived;
}

void apply_index_shuffle(RankedAnswers& answers, const std::vector<int>& perm) {
    if (perm.size() != answers.entries.size())
        throw Error("index shuffle: permutation size mismatch");
    std::vector<bool> seen(perm.size(), false);
    for (int p : perm) {
        if (p < 0 || static_cast<size_t>(p) >= perm.size() || seen[static_cast<size_t>(p)])
            throw Error("index shuffle: not a permutation");
        seen[static_cast<size_t>(p)] = true;
    }
    for (size_t i = 0; i < perm.size(); ++i)
        answers.entries[i].position = perm[i] + 1;
}

GraphScoreTable load_graph_scores(const std::string& path, int num_entities) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open graph score table: " + path);
    GraphScoreTable table;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        int qi = 0, eid = 0;
        double score = 0;
        if (!(ls >> qi >> eid >> score))
            throw Error(path + ": line " + std::to_string(lineno) +
                        ": expected 'query_index entity_id score'");
        if (eid < 0 || eid >= num_entities)
            throw Error(path + ": line " + std::to_string(lineno) + ": entity id " +
                        std::to_string(eid) + " outside the entity space");
        auto [it, inserted] = table.per_query[qi].emplace(eid, score);
        if (!inserted)
            throw Error(path + ": line " + std::to_string(lineno) +
                        ": duplicate (query, entity) score");
    }
    return table;
}

EvalResult evaluate_records(const std::vector<RunRecord>& records, const GraphScoreTable& graph,
                            const FusionConfig& fusion, int num_entities,
                            const std::optional<IndexShuffle>& shuffle) {
    static const ScoreMap kEmpty;
    std::vector<std::pair<int, int>> ranks;
    ranks.reserve(records.size());
    for (const auto& rec : records) {
        RankedAnswers answers = rec.answers;
        if (shuffle && !answers.entries.empty()) {
            std::mt19937_64 rng(shuffle->seed ^
                                (0x9e3779b97f4a7c15ULL * (static_cast<uint64_t>(rec.query_index) + 1)));
            std::vector<int> perm(answers.entries.size());
            std::iota(perm.begin(), perm.end(), 0);
            std::shuffle(perm.begin(), perm.end(), rng);
            apply_index_shuffle(answers, perm);
        }
        const ScoreMap llm = build_llm_scores(answers, fusion.alpha);
        auto git = graph.per_query.find(rec.query_index);
        const ScoreMap& gscores = git == graph.per_query.end() ? kEmpty : git->second;
        const FusedRanking fused = fuse(llm, gscores, fusion, num_entities);
        ranks.emplace_back(rec.query_index, rank_of_truth(fused, rec.query));
    }
    return compute_metrics(ranks);
}

std::string sweep(const std::vector<RunRecord>& records, const GraphScoreTable& graph,
                  SweepParam param, const std::vector<double>& values,
                  const FusionConfig& base, int num_entities, const std::string& run_id,
                  const std::string& dataset) {
    if (records.empty()) throw Error("sweep: no cached run records; run run-coh first");
    std::string csv = metrics_csv_header();
    for (double v : values) {
        FusionConfig cfg = base;
        if (param == SweepParam::alpha) cfg.alpha = v;
        else cfg.w = v;
        const EvalResult r = evaluate_records(records, graph, cfg, num_entities);
        const std::string variant =
            (param == SweepParam::alpha ? "alpha=" : "w=") + std::to_string(v);
        csv += metrics_csv_row(run_id, dataset, variant, cfg.alpha, cfg.w, r);
    }
    return csv;
}

std::string explain(const TemporalKG& kg, const Vocabulary& vocab, const RunRecord& record,
                    const CoHConfig& config, Gateway& gateway) {
    if (record.final_chains.empty())
        throw Error("explain: record has no completed trace for this query");
    const TemplateSet templates = config.template_dir.empty()
                                      ? default_templates()
                                      : load_templates(config.template_dir);
    const Verbalizer verbalizer(vocab, {config.time_mode, 0}, config.anonymize, templates);
    auto bundle = verbalizer.build_explanation_prompt(kg, record.final_chains, record.query);
    auto result = gateway.complete(bundle);
    if (!result.ok()) throw Error("explain: " + *result.error);
    return result.text;
}

namespace {

json record_to_json(const RunRecord& r) {
    json jq = {{"subject", r.query.subject},
               {"relation", r.query.relation},
               {"ground_truth", r.query.ground_truth},
               {"time", r.query.time},
               {"direction", r.query.direction == Direction::forward ? "forward" : "reversed"},
               {"test_quad_index", r.query.test_quad_index},
               {"no_history", r.query.no_history}};
    json jchains = json::array();
    for (const auto& c : r.final_chains)
        jchains.push_back({{"links", c.links}, {"unextended", c.unextended}});
    json jentries = json::array();
    for (const auto& e : r.answers.entries) {
        json je = {{"surface", e.surface}, {"serial", e.serial}, {"position", e.position}};
        if (e.entity) je["entity"] = *e.entity;
        jentries.push_back(std::move(je));
    }
    json jdropped = json::array();
    for (const auto& [surface, reason] : r.answers.dropped)
        jdropped.push_back({surface, reason});
    return {{"query_index", r.query_index}, {"query", std::move(jq)},
            {"selected_ids", r.selected_ids}, {"final_chains", std::move(jchains)},
            {"answers", {{"entries", std::move(jentries)}, {"dropped", std::move(jdropped)}}},
            {"errors", r.errors}};
}

RunRecord record_from_json(const json& j) {
    RunRecord r;
    r.query_index = j.at("query_index").get<int>();
    const json& jq = j.at("query");
    r.query.subject = jq.at("subject").get<EntityId>();
    r.query.relation = jq.at("relation").get<RelationId>();
    r.query.ground_truth = jq.at("ground_truth").get<EntityId>();
    r.query.time = jq.at("time").get<Tick>();
    r.query.direction = jq.at("direction").get<std::string>() == "reversed"
                            ? Direction::reversed
                            : Direction::forward;
    r.query.test_quad_index = jq.at("test_quad_index").get<int32_t>();
    r.query.no_history = jq.value("no_history", false);
    r.selected_ids = j.at("selected_ids").get<std::vector<std::vector<int>>>();
    for (const auto& jc : j.at("final_chains"))
        r.final_chains.push_back(
            {jc.at("links").get<std::vector<int32_t>>(), jc.value("unextended", false)});
    for (const auto& je : j.at("answers").at("entries")) {
        AnswerEntry e;
        e.surface = je.at("surface").get<std::string>();
        if (je.contains("entity")) e.entity = je.at("entity").get<EntityId>();
        e.serial = je.at("serial").get<int>();
        e.position = je.at("position").get<int>();
        r.answers.entries.push_back(std::move(e));
    }
    for (const auto& jd : j.at("answers").at("dropped"))
        r.answers.dropped.emplace_back(jd.at(0).get<std::string>(), jd.at(1).get<std::string>());
    r.errors = j.at("errors").get<std::vector<std::string>>();
    return r;
}

}  // namespace

void write_run_records(const std::vector<RunRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write run records: " + path);
    for (const auto& r : records) out << record_to_json(r).dump() << '\n';
}

std::vector<RunRecord> read_run_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open run records: " + path);
    std::vector<RunRecord> records;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw Error(path + ": line " + std::to_string(lineno) + ": bad JSON");
        records.push_back(record_from_json(j));
    }
    return records;
}

uint64_t file_content_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot hash missing file: " + path);
    uint64_t h = 1469598103934665603ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
    }
    return h;
}

void write_manifest(const CoHConfig& config, const std::string& path,
                    const std::string& run_id) {
    json hashes = json::object();
    for (const std::string* p : {&config.train_path, &config.valid_path, &config.test_path,
                                 &config.entity_map_path, &config.relation_map_path}) {
        if (!p->empty()) {
            char hex[32];
            std::snprintf(hex, sizeof hex, "%016llx",
                          static_cast<unsigned long long>(file_content_hash(*p)));
            hashes[*p] = hex;
        }
    }
    json manifest = {{"run_id", run_id},
                     {"config", serialize_config(config)},
                     {"input_hashes", std::move(hashes)}};
    std::ofstream out(path);
    if (!out) throw Error("cannot write manifest: " + path);
    out << manifest.dump(2) << '\n';
}

}  // namespace coh
