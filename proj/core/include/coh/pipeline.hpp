#pragma once

#include <optional>
#include <string>
#include <vector>

#include "coh/eval.hpp"
#include "coh/gateway.hpp"
#include "coh/history.hpp"
#include "coh/parse.hpp"
#include "coh/scoring.hpp"
#include "coh/tkg.hpp"
#include "coh/verbalize.hpp"

namespace coh {

struct CoHConfig {
    int k = 2;                   // reasoning steps; steps 1..k-1 select, step k answers
    int n = 30;                  // selections per step
    int first_order_limit = 100;
    int per_chain_cap = 3;
    TimeMode time_mode = TimeMode::ordinal_day;
    bool anonymize = false;
    bool fuzzy_resolution = false;
    // when false, only training facts are visible as history
    bool include_valid_history = true;
    bool recency_step1 = false;  // the no-LR ablation
    uint64_t seed = 0;
    int max_in_flight = 4;

    BackendConfig backend;
    GenerationParams gen;
    FusionConfig fusion;

    // dataset paths; used by the CLI and recorded in manifests
    std::string train_path, valid_path, test_path;
    std::string entity_map_path, relation_map_path;
    std::string reversed_names_path, relation_phrases_path;
    std::string template_dir;
    std::string calendar_origin = "2014-01-01";

    void validate() const;
    unsigned history_split_mask() const;
};

// key = value, one per line, '#' comments; unknown keys are rejected.
CoHConfig parse_config(const std::string& text);
CoHConfig load_config(const std::string& path);
std::string serialize_config(const CoHConfig& config);

struct RunRecord {
    int query_index = -1;
    Query query;
    std::vector<std::vector<int>> selected_ids;  // one list per select step
    std::vector<HistoryChain> final_chains;      // input to the answer step
    RankedAnswers answers;
    std::vector<std::string> errors;  // per-step fallbacks, never fatal
};

// Runs the k-step loop for every query. Each step is dispatched as one
// bounded-concurrency batch; records come back in query order. Per-query
// failures fall back (recency selection / empty answers) and the failure
// is noted on the record.
std::vector<RunRecord> run_coh(const TemporalKG& kg, const Vocabulary& vocab,
                               const std::vector<Query>& queries, const CoHConfig& config,
                               Gateway& gateway);

enum class AblationKind : uint8_t { no_lr, no_is, anonymize };
AblationKind ablation_from_string(const std::string& name);

// no_lr and anonymize derive a config; no_is is a scoring-time transform
// (see IndexShuffle below).
CoHConfig ablate(AblationKind kind, const CoHConfig& base);

// Scoring-time answer-order shuffle, seeded per record.
struct IndexShuffle {
    uint64_t seed = 0;
};

// Reassigns positions: entry i gets position perm[i]+1. perm must be a
// permutation of 0..len-1; the identity leaves scoring untouched.
void apply_index_shuffle(RankedAnswers& answers, const std::vector<int>& perm);

struct GraphScoreTable {
    // query index -> sparse entity scores
    std::unordered_map<int, ScoreMap> per_query;
};

// TSV "query_index<TAB>entity_id<TAB>score"; sparse top-K exports are fine.
GraphScoreTable load_graph_scores(const std::string& path, int num_entities);

// Re-scores cached records: Eq.-style index-to-score conversion, fusion
// with graph scores, metric aggregation. Never touches the gateway.
EvalResult evaluate_records(const std::vector<RunRecord>& records,
                            const GraphScoreTable& graph, const FusionConfig& fusion,
                            int num_entities,
                            const std::optional<IndexShuffle>& shuffle = std::nullopt);

enum class SweepParam : uint8_t { alpha, w };

// One metrics CSV row per value, computed from cached records only.
std::string sweep(const std::vector<RunRecord>& records, const GraphScoreTable& graph,
                  SweepParam param, const std::vector<double>& values,
                  const FusionConfig& base, int num_entities, const std::string& run_id,
                  const std::string& dataset);

// Replays the record's final chains through the explanation prompt.
std::string explain(const TemporalKG& kg, const Vocabulary& vocab, const RunRecord& record,
                    const CoHConfig& config, Gateway& gateway);

// JSONL round trip for cached runs
void write_run_records(const std::vector<RunRecord>& records, const std::string& path);
std::vector<RunRecord> read_run_records(const std::string& path);

// config snapshot + content hashes of the input files
void write_manifest(const CoHConfig& config, const std::string& path,
                    const std::string& run_id);

uint64_t file_content_hash(const std::string& path);

}  // namespace coh
