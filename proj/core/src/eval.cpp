#include "coh/eval.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>

namespace coh {

Calendar Calendar::parse(const std::string& yyyy_mm_dd) {
    Calendar c;
    if (std::sscanf(yyyy_mm_dd.c_str(), "%d-%d-%d", &c.origin_year, &c.origin_month,
                    &c.origin_day) != 3)
        throw Error("bad calendar origin, expected YYYY-MM-DD: " + yyyy_mm_dd);
    return c;
}

std::string Calendar::date_for_tick(Tick tick) const {
    using namespace std::chrono;
    const year_month_day origin{year{origin_year}, month{static_cast<unsigned>(origin_month)},
                                day{static_cast<unsigned>(origin_day)}};
    if (!origin.ok()) throw Error("invalid calendar origin date");
    const year_month_day d{sys_days{origin} + days{tick}};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                  static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
    return buf;
}

int rank_of_truth(const FusedRanking& ranking, const Query& query) {
    if (query.ground_truth < 0 ||
        static_cast<size_t>(query.ground_truth) >= ranking.scores.size())
        throw Error("rank_of_truth: ground truth outside the entity space");
    return ranking.rank_of(query.ground_truth);
}

EvalResult compute_metrics(const std::vector<int>& ranks) {
    std::vector<std::pair<int, int>> indexed;
    indexed.reserve(ranks.size());
    for (size_t i = 0; i < ranks.size(); ++i) indexed.emplace_back(static_cast<int>(i), ranks[i]);
    return compute_metrics(indexed);
}

EvalResult compute_metrics(const std::vector<std::pair<int, int>>& indexed_ranks) {
    if (indexed_ranks.empty()) throw Error("compute_metrics: no ranks");
    EvalResult r;
    r.per_query_ranks = indexed_ranks;
    r.query_count = indexed_ranks.size();
    double rr_sum = 0;
    size_t h1 = 0, h3 = 0, h10 = 0;
    for (const auto& [qi, rank] : indexed_ranks) {
        if (rank < 1) throw Error("compute_metrics: rank must be >= 1");
        rr_sum += 1.0 / rank;
        if (rank <= 1) ++h1;
        if (rank <= 3) ++h3;
        if (rank <= 10) ++h10;
    }
    const double n = static_cast<double>(indexed_ranks.size());
    r.mrr = rr_sum / n;
    r.hits[1] = h1 / n;
    r.hits[3] = h3 / n;
    r.hits[10] = h10 / n;
    return r;
}

namespace {

bool reply_says_yes(const std::string& reply) {
    size_t i = 0;
    while (i < reply.size() && std::isspace(static_cast<unsigned char>(reply[i]))) ++i;
    std::string head;
    while (i < reply.size() && std::isalpha(static_cast<unsigned char>(reply[i])))
        head.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(reply[i++]))));
    return head == "yes";  // anything else counts as "no"
}

}  // namespace

FilterList run_leakage_check(const TemporalKG& kg, const Vocabulary& vocab, Gateway& gateway,
                             const Calendar& calendar, int max_in_flight,
                             std::vector<int32_t>* unchecked) {
    const int nr = vocab.num_base_relations();
    Verbalizer verbalizer(vocab, {});

    std::vector<int32_t> fact_indices;
    std::vector<PromptBundle> bundles;
    for (size_t i = 0; i < kg.quads.size(); ++i) {
        if (kg.splits[i] != Split::test) continue;
        if (kg.augmented && kg.quads[i].relation >= nr) continue;  // originals only
        fact_indices.push_back(static_cast<int32_t>(i));
        bundles.push_back(verbalizer.build_leakage_prompt(
            kg.quads[i], calendar.date_for_tick(kg.quads[i].time)));
    }

    auto results = gateway.complete_batch(bundles, max_in_flight);
    FilterList filter;
    for (size_t i = 0; i < results.size(); ++i) {
        if (!results[i].ok()) {
            if (unchecked) unchecked->push_back(fact_indices[i]);
            continue;
        }
        if (reply_says_yes(results[i].text)) filter.test_quad_indices.insert(fact_indices[i]);
    }
    return filter;
}

std::vector<Query> apply_filter(const std::vector<Query>& queries, const FilterList& filter,
                                const TemporalKG& kg) {
    for (int32_t idx : filter.test_quad_indices) {
        if (idx < 0 || static_cast<size_t>(idx) >= kg.quads.size() ||
            kg.splits[static_cast<size_t>(idx)] != Split::test)
            throw Error("filter entry " + std::to_string(idx) + " is not a test fact");
    }
    std::vector<Query> kept;
    kept.reserve(queries.size());
    for (const auto& q : queries)
        if (!filter.test_quad_indices.count(q.test_quad_index)) kept.push_back(q);
    return kept;
}

std::string metrics_csv_header() {
    return "run_id,dataset,variant,alpha,w,mrr,hits1,hits3,hits10,n_queries\n";
}

std::string metrics_csv_row(const std::string& run_id, const std::string& dataset,
                            const std::string& variant, double alpha, double w,
                            const EvalResult& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%s,%s,%s,%g,%g,%.6f,%.6f,%.6f,%.6f,%zu\n", run_id.c_str(),
                  dataset.c_str(), variant.c_str(), alpha, w, r.mrr, r.hits.at(1), r.hits.at(3),
                  r.hits.at(10), r.query_count);
    return buf;
}

void write_filter_list(const FilterList& filter, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write filter list: " + path);
    for (int32_t idx : filter.test_quad_indices) out << idx << '\n';
}

FilterList read_filter_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open filter list: " + path);
    FilterList f;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        int32_t idx = 0;
        auto [p, ec] = std::from_chars(line.data(), line.data() + line.size(), idx);
        if (ec != std::errc()) throw Error("bad filter list line: " + line);
        f.test_quad_indices.insert(idx);
    }
    return f;
}

}  // namespace coh
