#include <doctest.h>

#include "coh/tkg.hpp"
#include "fixtures.hpp"

using namespace coh;
using namespace coh::test;

TEST_CASE("load_dataset: toy file preserves facts and sorts the store") {
    TempDir dir;
    ToyBuilder b;
    for (int i = 0; i < 4; ++i) b.entity("E" + std::to_string(i));
    b.relation("R0");
    b.fact(0, 0, 1, 5);
    b.fact(1, 0, 2, 3);
    b.fact(2, 0, 3, 7);
    b.fact(0, 0, 2, 9, Split::valid);
    b.fact(0, 0, 3, 10, Split::test);
    Dataset ds = b.load(dir, /*augment=*/false);

    REQUIRE(ds.kg.quads.size() == 5);
    CHECK(ds.kg.counts().train == 3);
    CHECK(ds.kg.counts().valid == 1);
    CHECK(ds.kg.counts().test == 1);
    for (size_t i = 1; i < ds.kg.quads.size(); ++i)
        CHECK(ds.kg.quads[i - 1].time <= ds.kg.quads[i].time);
    CHECK(ds.kg.time_origin == 3);
}

TEST_CASE("load_dataset: malformed line reports the line number") {
    TempDir dir;
    dir.file("e.txt", "A\t0\nB\t1\n");
    dir.file("r.txt", "r\t0\n");
    dir.file("train.txt", "0\t0\t1\t1\n0\t0\tnotanint\t2\n");
    dir.file("empty.txt", "");
    CHECK_THROWS_WITH_AS(load_dataset(dir.path("train.txt"), dir.path("empty.txt"),
                                      dir.path("empty.txt"), dir.path("e.txt"),
                                      dir.path("r.txt")),
                         doctest::Contains("line 2"), Error);
}

TEST_CASE("load_dataset: unknown entity id is named in the error") {
    TempDir dir;
    dir.file("e.txt", "A\t0\nB\t1\n");
    dir.file("r.txt", "r\t0\n");
    dir.file("train.txt", "0\t0\t9\t1\n");
    dir.file("empty.txt", "");
    CHECK_THROWS_WITH_AS(load_dataset(dir.path("train.txt"), dir.path("empty.txt"),
                                      dir.path("empty.txt"), dir.path("e.txt"),
                                      dir.path("r.txt")),
                         doctest::Contains("unknown entity id 9"), Error);
}

TEST_CASE("load_dataset: empty train split is rejected") {
    TempDir dir;
    dir.file("e.txt", "A\t0\n");
    dir.file("r.txt", "r\t0\n");
    dir.file("empty.txt", "");
    CHECK_THROWS_WITH_AS(load_dataset(dir.path("empty.txt"), dir.path("empty.txt"),
                                      dir.path("empty.txt"), dir.path("e.txt"),
                                      dir.path("r.txt")),
                         doctest::Contains("empty split"), Error);
}

TEST_CASE("load_dataset: duplicate within a split rejected, across splits allowed") {
    TempDir dir;
    ToyBuilder b;
    b.entity("A");
    b.entity("B");
    b.relation("r");
    b.fact(0, 0, 1, 1);
    b.fact(0, 0, 1, 1, Split::test);  // recurrence across splits is fine
    CHECK_NOTHROW(b.load(dir, false));

    TempDir dir2;
    ToyBuilder b2;
    b2.entity("A");
    b2.entity("B");
    b2.relation("r");
    b2.fact(0, 0, 1, 1);
    b2.fact(0, 0, 1, 1);
    CHECK_THROWS_WITH_AS(b2.load(dir2, false), doctest::Contains("duplicate"), Error);
}

TEST_CASE("facts_before equals a brute-force filter") {
    TempDir dir;
    std::mt19937_64 rng(7);
    Dataset ds = make_random_dataset(dir, rng);
    for (Tick t = 0; t <= 50; t += 5) {
        const size_t end = ds.kg.facts_before(t);
        size_t brute = 0;
        for (const auto& q : ds.kg.quads)
            if (q.time < t) ++brute;
        CHECK(end == brute);
        for (size_t i = 0; i < end; ++i) CHECK(ds.kg.quads[i].time < t);
    }
}

TEST_CASE("augment_reversed: mirror definition and involution") {
    TempDir dir;
    ToyBuilder b;
    for (int i = 0; i < 10; ++i) b.entity("E" + std::to_string(i));
    for (int i = 0; i < 230; ++i) b.relation("R" + std::to_string(i));
    b.fact(2, 5, 9, 10);
    Dataset ds = b.load(dir, /*augment=*/false);
    const auto original = ds.kg.quads;
    augment_reversed(ds.kg, ds.vocab);

    REQUIRE(ds.kg.quads.size() == 2);
    const Quadruple mirror{9, 235, 2, 10};
    CHECK((ds.kg.quads[0] == mirror || ds.kg.quads[1] == mirror));

    // un-reversing every mirror reproduces the original multiset
    std::vector<Quadruple> recovered;
    for (const auto& q : ds.kg.quads)
        if (q.relation >= ds.vocab.num_base_relations())
            recovered.push_back(unreverse(q, ds.vocab.num_base_relations()));
    CHECK(recovered == original);

    CHECK_THROWS_AS(augment_reversed(ds.kg, ds.vocab), Error);
}

TEST_CASE("augment_reversed: overlay names and synthesized fallback") {
    TempDir dir;
    ToyBuilder b;
    b.entity("A");
    b.entity("B");
    b.relation("Express intent to cooperate");
    b.relation("Threaten");
    b.fact(0, 0, 1, 1);
    Dataset ds = b.load(dir, false);
    load_reversed_names(ds.vocab, dir.file("rev.txt", "0\tReceive intent to cooperate\n"));
    augment_reversed(ds.kg, ds.vocab);
    CHECK(ds.vocab.relation_surface(2) == "Receive intent to cooperate");
    CHECK(ds.vocab.relation_surface(3) == "[inverse] Threaten");
}

TEST_CASE("queries_from_test doubles the test set") {
    TempDir dir;
    ToyBuilder b;
    b.entity("A");
    b.entity("B");
    b.relation("r");
    b.fact(0, 0, 1, 1);
    b.fact(0, 0, 1, 5, Split::test);
    Dataset ds = b.load(dir);

    auto queries = queries_from_test(ds.kg, ds.vocab);
    REQUIRE(queries.size() == 2);
    CHECK(queries[0].direction == Direction::forward);
    CHECK(queries[0].subject == 0);
    CHECK(queries[0].ground_truth == 1);
    CHECK(queries[1].direction == Direction::reversed);
    CHECK(queries[1].subject == 1);
    CHECK(queries[1].ground_truth == 0);
    CHECK(queries[1].relation == queries[0].relation + ds.vocab.num_base_relations());
}

TEST_CASE("queries_from_test: empty test split yields no queries") {
    TempDir dir;
    ToyBuilder b;
    b.entity("A");
    b.entity("B");
    b.relation("r");
    b.fact(0, 0, 1, 1);
    Dataset ds = b.load(dir);
    CHECK(queries_from_test(ds.kg, ds.vocab).empty());
}

TEST_CASE("canonical dump round-trips through the loader byte-identically") {
    TempDir dir;
    ToyBuilder b;
    std::mt19937_64 rng(13);
    const int ne = 12, nr = 4;
    for (int i = 0; i < ne; ++i) b.entity("E" + std::to_string(i));
    for (int i = 0; i < nr; ++i) b.relation("R" + std::to_string(i));
    std::uniform_int_distribution<int> epick(0, ne - 1), rpick(0, nr - 1), tpick(0, 20);
    std::set<std::tuple<int, int, int, int>> seen;
    for (int i = 0; i < 60; ++i) {
        const int s = epick(rng), r = rpick(rng), o = epick(rng), t = tpick(rng);
        if (!seen.insert({s, r, o, t}).second) continue;
        b.fact(s, r, o, t);
    }
    b.fact(0, 0, 1, 25, Split::test);
    Dataset first = b.load(dir, /*augment=*/false);

    const std::string dump_train = dump_canonical(first.kg, Split::train);
    const std::string dump_test = dump_canonical(first.kg, Split::test);

    TempDir dir2;
    std::string emap, rmap;
    for (int i = 0; i < ne; ++i) emap += "E" + std::to_string(i) + "\t" + std::to_string(i) + "\n";
    for (int i = 0; i < nr; ++i) rmap += "R" + std::to_string(i) + "\t" + std::to_string(i) + "\n";
    Dataset reloaded = load_dataset(
        dir2.file("train.txt", dump_train), dir2.file("valid.txt", ""),
        dir2.file("test.txt", dump_test), dir2.file("e.txt", emap), dir2.file("r.txt", rmap));
    CHECK(dump_canonical(reloaded.kg, Split::train) == dump_train);
    CHECK(dump_canonical(reloaded.kg, Split::test) == dump_test);
}

TEST_CASE("vocabulary rejects colliding normalized surfaces") {
    Vocabulary v;
    v.entity_names = {"Citizen_(Nigeria)", "citizen nigeria"};
    CHECK_THROWS_AS(v.rebuild_entity_lookup(), Error);
}

TEST_CASE("normalize_surface folds case, underscores and parentheses") {
    CHECK(normalize_surface("Citizen_(Nigeria)") == "citizen nigeria");
    CHECK(normalize_surface("  Thailand ") == "thailand");
    CHECK(normalize_surface("A__B") == "a b");
}
