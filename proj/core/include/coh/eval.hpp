#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "coh/gateway.hpp"
#include "coh/scoring.hpp"
#include "coh/tkg.hpp"

namespace coh {

struct EvalResult {
    double mrr = 0;
    std::map<int, double> hits;  // k in {1, 3, 10}
    std::vector<std::pair<int, int>> per_query_ranks;  // (query index, rank)
    size_t query_count = 0;
};

// Test-fact identifiers are store indices of original-orientation test
// quadruples in the augmented store.
struct FilterList {
    std::set<int32_t> test_quad_indices;
};

// Maps dataset ticks onto real calendar dates, leakage prompts only.
struct Calendar {
    int origin_year = 2014, origin_month = 1, origin_day = 1;

    static Calendar parse(const std::string& yyyy_mm_dd);
    std::string date_for_tick(Tick tick) const;  // "YYYY-MM-DD"
};

// 1-based position of the ground truth under (score desc, id asc).
int rank_of_truth(const FusedRanking& ranking, const Query& query);

EvalResult compute_metrics(const std::vector<int>& ranks);
EvalResult compute_metrics(const std::vector<std::pair<int, int>>& indexed_ranks);

// Sends the leakage prompt for every original test fact and collects the
// ones the backend answers "yes" to. Transport failures leave a fact
// unchecked (kept) and are reported via `unchecked`.
FilterList run_leakage_check(const TemporalKG& kg, const Vocabulary& vocab, Gateway& gateway,
                             const Calendar& calendar, int max_in_flight = 4,
                             std::vector<int32_t>* unchecked = nullptr);

// Drops both queries derived from every filtered test fact.
std::vector<Query> apply_filter(const std::vector<Query>& queries, const FilterList& filter,
                                const TemporalKG& kg);

std::string metrics_csv_header();
std::string metrics_csv_row(const std::string& run_id, const std::string& dataset,
                            const std::string& variant, double alpha, double w,
                            const EvalResult& r);

void write_filter_list(const FilterList& filter, const std::string& path);
FilterList read_filter_list(const std::string& path);

}  // namespace coh
