#pragma once

#include <unordered_map>
#include <vector>

#include "coh/parse.hpp"
#include "coh/types.hpp"

namespace coh {

enum class GraphNorm : uint8_t { none, minmax, softmax };

struct FusionConfig {
    double alpha = 0.3;  // index-to-score decay
    double w = 0.35;     // graph-side weight in the convex combination
    GraphNorm graph_normalization = GraphNorm::minmax;
};

// Sparse per-query score map; entities absent from it score 0.
using ScoreMap = std::unordered_map<EntityId, double>;

// 1 / (1 + exp(alpha * position)); strictly decreasing in both arguments,
// bounded in (0, 0.5) for position >= 1.
double position_to_score(int position, double alpha);

// Resolved entries get position_to_score(position); unresolved entries
// contribute nothing.
ScoreMap build_llm_scores(const RankedAnswers& answers, double alpha);

// minmax maps the present scores affinely onto [0,1] (constant input maps
// to all-0.5); softmax exponent-normalizes; none passes through.
ScoreMap normalize_graph(const ScoreMap& table, GraphNorm mode);

struct FusedRanking {
    std::vector<double> scores;  // dense over the entity space

    // 1-based rank under the total order (score desc, entity id asc).
    int rank_of(EntityId e) const;
    std::vector<EntityId> top(int k) const;
    std::vector<EntityId> argsort() const;
};

// w * graph + (1-w) * llm over a dense entity space; graph scores are
// normalized per config first, absent entries count as 0 afterwards.
FusedRanking fuse(const ScoreMap& llm, const ScoreMap& graph, const FusionConfig& config,
                  int num_entities);

}  // namespace coh
