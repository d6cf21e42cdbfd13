// Microbenchmarks for the hot paths: history retrieval, chain extension,
// score fusion and answer parsing.

#include <random>

#include <benchmark/benchmark.h>

#include "coh/history.hpp"
#include "coh/parse.hpp"
#include "coh/scoring.hpp"
#include "coh/tkg.hpp"

using namespace coh;

namespace {

// Synthetic in-memory store: `facts` quadruples over `entities` entities,
// sorted by time, with the subject index built.
TemporalKG make_store(int entities, int facts, std::mt19937_64& rng) {
    TemporalKG kg;
    std::uniform_int_distribution<int> epick(0, entities - 1);
    std::uniform_int_distribution<int> tpick(0, 364);
    for (int i = 0; i < facts; ++i)
        kg.quads.push_back({epick(rng), 0, epick(rng), tpick(rng)});
    std::sort(kg.quads.begin(), kg.quads.end(), [](const Quadruple& a, const Quadruple& b) {
        return a.time < b.time;
    });
    kg.splits.assign(kg.quads.size(), Split::train);
    kg.augmented = true;
    kg.build_subject_index(entities);
    return kg;
}

Vocabulary make_vocab(int entities) {
    Vocabulary v;
    for (int i = 0; i < entities; ++i)
        v.entity_names.push_back("Entity_" + std::to_string(i) + "_(Bench)");
    v.relation_names = {"relate"};
    v.rebuild_entity_lookup();
    return v;
}

void bm_position_to_score(benchmark::State& state) {
    double acc = 0;
    for (auto _ : state) {
        for (int idx = 1; idx <= 30; ++idx) acc += position_to_score(idx, 0.3);
        benchmark::DoNotOptimize(acc);
    }
}
BENCHMARK(bm_position_to_score);

void bm_first_order_histories(benchmark::State& state) {
    std::mt19937_64 rng(1);
    const int entities = static_cast<int>(state.range(0));
    TemporalKG kg = make_store(entities, entities * 50, rng);
    Query q;
    q.subject = 0;
    q.time = 300;
    for (auto _ : state) {
        auto h = first_order_histories(kg, q, 100);
        benchmark::DoNotOptimize(h);
    }
}
BENCHMARK(bm_first_order_histories)->Arg(100)->Arg(1000)->Arg(7000);

void bm_extend_chains(benchmark::State& state) {
    std::mt19937_64 rng(2);
    TemporalKG kg = make_store(1000, 50000, rng);
    Query q;
    q.subject = 0;
    q.time = 300;
    auto refs = first_order_histories(kg, q, 30);
    std::vector<HistoryChain> chains;
    for (const auto& r : refs) chains.push_back({{r.quad_index}, false});
    for (auto _ : state) {
        auto out = extend_chains(kg, chains, 3);
        benchmark::DoNotOptimize(out);
    }
}
BENCHMARK(bm_extend_chains);

void bm_fuse(benchmark::State& state) {
    std::mt19937_64 rng(3);
    const int entities = static_cast<int>(state.range(0));
    std::uniform_int_distribution<int> epick(0, entities - 1);
    std::uniform_real_distribution<double> val(0, 1);
    ScoreMap llm, graph;
    for (int i = 0; i < 30; ++i) llm[epick(rng)] = position_to_score(i + 1, 0.3);
    for (int i = 0; i < entities / 10; ++i) graph[epick(rng)] = val(rng);
    FusionConfig cfg;
    for (auto _ : state) {
        auto fused = fuse(llm, graph, cfg, entities);
        benchmark::DoNotOptimize(fused.rank_of(0));
    }
}
BENCHMARK(bm_fuse)->Arg(1000)->Arg(7000);

void bm_parse_ranked_answers(benchmark::State& state) {
    Vocabulary v = make_vocab(1000);
    std::string reply = "Possible answers:\n";
    for (int i = 0; i < 30; ++i)
        reply += std::to_string(i + 1) + ". Entity_" + std::to_string(i * 7) + "_(Bench)\n";
    for (auto _ : state) {
        auto ans = parse_ranked_answers(reply, v);
        benchmark::DoNotOptimize(ans);
    }
}
BENCHMARK(bm_parse_ranked_answers);

}  // namespace

BENCHMARK_MAIN();
