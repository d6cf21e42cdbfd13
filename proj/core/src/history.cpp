#include "coh/history.hpp"

#include <algorithm>

namespace coh {

namespace {

// Newest first; within a tick keep ascending store order.
void sort_recency(const TemporalKG& kg, std::vector<int32_t>& idx) {
    std::stable_sort(idx.begin(), idx.end(), [&](int32_t a, int32_t b) {
        return kg.quads[static_cast<size_t>(a)].time > kg.quads[static_cast<size_t>(b)].time;
    });
}

}  // namespace

std::vector<HistoryRef> first_order_histories(const TemporalKG& kg, const Query& query,
                                              int limit, unsigned allowed_splits) {
    if (limit < 1) throw Error("first_order_histories: limit must be >= 1");
    auto idx = kg.subject_facts_before(query.subject, query.time, allowed_splits);
    sort_recency(kg, idx);
    if (static_cast<int>(idx.size()) > limit) idx.resize(static_cast<size_t>(limit));
    std::vector<HistoryRef> out;
    out.reserve(idx.size());
    for (size_t i = 0; i < idx.size(); ++i)
        out.push_back({idx[i], static_cast<int32_t>(i)});
    return out;
}

std::vector<HistoryChain> extend_chains(const TemporalKG& kg,
                                        const std::vector<HistoryChain>& chains,
                                        int per_chain_cap, unsigned allowed_splits) {
    if (per_chain_cap < 1) throw Error("extend_chains: per_chain_cap must be >= 1");
    if (!chains.empty()) {
        const int order = chains.front().order();
        for (const auto& c : chains)
            if (c.order() != order) throw Error("extend_chains: mixed-order input");
    }
    std::vector<HistoryChain> out;
    for (const auto& chain : chains) {
        const auto& tail = kg.quads[static_cast<size_t>(chain.links.back())];
        auto idx = kg.subject_facts_before(tail.object, tail.time, allowed_splits);
        sort_recency(kg, idx);
        if (static_cast<int>(idx.size()) > per_chain_cap)
            idx.resize(static_cast<size_t>(per_chain_cap));
        if (idx.empty()) {
            HistoryChain carried = chain;
            carried.unextended = true;
            out.push_back(std::move(carried));
            continue;
        }
        for (int32_t ext : idx) {
            HistoryChain extended = chain;
            extended.unextended = false;
            extended.links.push_back(ext);
            out.push_back(std::move(extended));
        }
    }
    return out;
}

bool chain_is_valid(const TemporalKG& kg, const HistoryChain& chain, const Query& query) {
    if (chain.links.empty()) return false;
    const auto& first = kg.quads[static_cast<size_t>(chain.links.front())];
    if (first.subject != query.subject || first.time >= query.time) return false;
    for (size_t i = 1; i < chain.links.size(); ++i) {
        const auto& prev = kg.quads[static_cast<size_t>(chain.links[i - 1])];
        const auto& cur = kg.quads[static_cast<size_t>(chain.links[i])];
        if (cur.subject != prev.object || cur.time >= prev.time) return false;
    }
    return true;
}

}  // namespace coh
