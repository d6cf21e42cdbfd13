#pragma once

#include <vector>

#include "coh/tkg.hpp"
#include "coh/types.hpp"

namespace coh {

struct HistoryRef {
    int32_t quad_index = -1;
    int32_t local_id = -1;
};

// Chain of store indices rooted at the query subject; link i+1's subject is
// link i's object and times strictly decrease along the chain.
struct HistoryChain {
    std::vector<int32_t> links;
    // Set when extend_chains found no earlier fact for the tail object and
    // carried the chain forward at its current order.
    bool unextended = false;

    int order() const { return static_cast<int>(links.size()); }

    friend bool operator==(const HistoryChain&, const HistoryChain&) = default;
};

// Facts with subject == query.subject and time < query.time, newest first
// (ties in ascending store order), truncated to limit. local_ids follow
// list order.
std::vector<HistoryRef> first_order_histories(const TemporalKG& kg, const Query& query,
                                              int limit, unsigned allowed_splits = 0x7);

// Extends each chain with up to per_chain_cap facts whose subject is the
// tail object and whose time precedes the tail time, newest first. Chains
// with no extension are carried forward flagged.
std::vector<HistoryChain> extend_chains(const TemporalKG& kg,
                                        const std::vector<HistoryChain>& chains,
                                        int per_chain_cap, unsigned allowed_splits = 0x7);

// Checks t_query > links[0].time > links[1].time > ... and the
// subject/object stitching; used as a cheap assert on every emitted chain.
bool chain_is_valid(const TemporalKG& kg, const HistoryChain& chain, const Query& query);

}  // namespace coh
