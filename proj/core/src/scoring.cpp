#include "coh/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace coh {

double position_to_score(int position, double alpha) {
    if (position < 1) throw Error("position_to_score: position must be >= 1");
    if (alpha <= 0) throw Error("position_to_score: alpha must be > 0");
    return 1.0 / (1.0 + std::exp(alpha * position));
}

ScoreMap build_llm_scores(const RankedAnswers& answers, double alpha) {
    ScoreMap scores;
    for (const auto& e : answers.entries) {
        if (!e.entity) continue;
        scores[*e.entity] = position_to_score(e.position, alpha);
    }
    return scores;
}

ScoreMap normalize_graph(const ScoreMap& table, GraphNorm mode) {
    if (mode == GraphNorm::none || table.empty()) return table;
    ScoreMap out;
    out.reserve(table.size());
    if (mode == GraphNorm::minmax) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto& [e, s] : table) {
            lo = std::min(lo, s);
            hi = std::max(hi, s);
        }
        if (hi == lo) {
            for (const auto& [e, s] : table) out[e] = 0.5;
        } else {
            for (const auto& [e, s] : table) out[e] = (s - lo) / (hi - lo);
        }
        return out;
    }
    // softmax, shifted by the max for stability
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& [e, s] : table) hi = std::max(hi, s);
    double denom = 0;
    for (const auto& [e, s] : table) denom += std::exp(s - hi);
    for (const auto& [e, s] : table) out[e] = std::exp(s - hi) / denom;
    return out;
}

int FusedRanking::rank_of(EntityId e) const {
    const double s = scores[static_cast<size_t>(e)];
    int before = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
        if (scores[i] > s) ++before;
        else if (scores[i] == s && static_cast<EntityId>(i) < e) ++before;
    }
    return before + 1;
}

std::vector<EntityId> FusedRanking::argsort() const {
    std::vector<EntityId> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](EntityId a, EntityId b) {
        const double sa = scores[static_cast<size_t>(a)], sb = scores[static_cast<size_t>(b)];
        if (sa != sb) return sa > sb;
        return a < b;
    });
    return order;
}

std::vector<EntityId> FusedRanking::top(int k) const {
    auto order = argsort();
    if (static_cast<int>(order.size()) > k) order.resize(static_cast<size_t>(k));
    return order;
}

FusedRanking fuse(const ScoreMap& llm, const ScoreMap& graph, const FusionConfig& config,
                  int num_entities) {
    if (config.alpha <= 0) throw Error("fuse: alpha must be > 0");
    if (config.w < 0 || config.w > 1) throw Error("fuse: w must be in [0,1]");
    FusedRanking r;
    r.scores.assign(static_cast<size_t>(num_entities), 0.0);

    const ScoreMap norm = normalize_graph(graph, config.graph_normalization);
    for (const auto& [e, s] : norm) {
        if (e < 0 || e >= num_entities)
            throw Error("fuse: graph score for entity id outside the entity space: " +
                        std::to_string(e));
        r.scores[static_cast<size_t>(e)] += config.w * s;
    }
    for (const auto& [e, s] : llm) {
        if (e < 0 || e >= num_entities)
            throw Error("fuse: llm score for entity id outside the entity space: " +
                        std::to_string(e));
        r.scores[static_cast<size_t>(e)] += (1.0 - config.w) * s;
    }
    return r;
}

}  // namespace coh
