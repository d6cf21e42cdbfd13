#pragma once

// Shared test fixtures: on-disk toy datasets (exercising the loaders), the
// Nigeria replay scenario, and brute-force oracles the implementation is
// checked against.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <unistd.h>

#include "coh/history.hpp"
#include "coh/tkg.hpp"

namespace coh::test {

class TempDir {
  public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("coh_test_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string file(const std::string& name, const std::string& content) const {
        const auto p = path_ / name;
        std::ofstream out(p);
        out << content;
        return p.string();
    }
    std::string path(const std::string& name) const { return (path_ / name).string(); }

  private:
    std::filesystem::path path_;
};

// Accumulates names and facts, writes ICEWS-style files, loads them back.
class ToyBuilder {
  public:
    EntityId entity(const std::string& name) {
        for (size_t i = 0; i < entities_.size(); ++i)
            if (entities_[i] == name) return static_cast<EntityId>(i);
        entities_.push_back(name);
        return static_cast<EntityId>(entities_.size() - 1);
    }
    RelationId relation(const std::string& name, const std::string& phrase = "") {
        for (size_t i = 0; i < relations_.size(); ++i)
            if (relations_[i] == name) return static_cast<RelationId>(i);
        relations_.push_back(name);
        phrases_.push_back(phrase);
        return static_cast<RelationId>(relations_.size() - 1);
    }
    void fact(EntityId s, RelationId r, EntityId o, Tick t, Split split = Split::train) {
        lines_[static_cast<int>(split)] += std::to_string(s) + "\t" + std::to_string(r) + "\t" +
                                           std::to_string(o) + "\t" + std::to_string(t) + "\n";
    }

    Dataset load(const TempDir& dir, bool augment = true) const {
        std::string emap, rmap, phrases;
        for (size_t i = 0; i < entities_.size(); ++i)
            emap += entities_[i] + "\t" + std::to_string(i) + "\n";
        for (size_t i = 0; i < relations_.size(); ++i)
            rmap += relations_[i] + "\t" + std::to_string(i) + "\n";
        for (size_t i = 0; i < relations_.size(); ++i)
            if (!phrases_[i].empty()) phrases += std::to_string(i) + "\t" + phrases_[i] + "\n";

        Dataset ds = load_dataset(dir.file("train.txt", lines_[0]),
                                  dir.file("valid.txt", lines_[1]),
                                  dir.file("test.txt", lines_[2]),
                                  dir.file("entity2id.txt", emap),
                                  dir.file("relation2id.txt", rmap));
        if (!phrases.empty())
            load_relation_phrases(ds.vocab, dir.file("phrases.txt", phrases));
        if (augment) augment_reversed(ds.kg, ds.vocab);
        return ds;
    }

  private:
    std::vector<std::string> entities_, relations_, phrases_;
    std::string lines_[3];
};

// The worked Nigeria scenario: 11 named first-order histories on the days
// shown in the transcripts, filler history to make ids up to 56 valid, and
// the second-order facts each chain extends into.
struct NigeriaFixture {
    Dataset ds;
    Query query;  // forward query, ground truth Member_of_the_Judiciary_(Nigeria)
    EntityId member_judiciary;
    std::string step1_reply;
    std::string step2_reply;
};

inline NigeriaFixture make_nigeria_fixture(const TempDir& dir) {
    ToyBuilder b;
    const EntityId gov = b.entity("Government_(Nigeria)");
    const EntityId icpc = b.entity("Independent_Corrupt_Practices_Commission");
    const EntityId edu = b.entity("Education_(Nigeria)");
    const EntityId boko = b.entity("Boko_Haram");
    const EntityId citizen = b.entity("Citizen_(Nigeria)");
    const EntityId obama = b.entity("Barack_Obama");
    const EntityId muslim = b.entity("Muslim_(Nigeria)");
    const EntityId judiciary = b.entity("Member_of_the_Judiciary_(Nigeria)");
    b.entity("Xi_Jinping");
    b.entity("Head_of_Government_(Nigeria)");
    b.entity("Court_Judge_(Nigeria)");

    // relation ids ordered so same-day histories appear in transcript order
    const RelationId criticize = b.relation("Criticize_or_denounce");
    const RelationId threaten = b.relation("Threaten");
    const RelationId provide_aid = b.relation("Provide_aid", "Provide_aid for");
    const RelationId accuse = b.relation("Accuse");
    const RelationId express_dc =
        b.relation("Express_intent_to_engage_in_diplomatic_cooperation",
                   "Express_intent_to_engage_in_diplomatic_cooperation to");
    const RelationId engage_dc = b.relation("Engage_in_diplomatic_cooperation",
                                            "Engage_in_diplomatic_cooperation with");
    const RelationId optimistic =
        b.relation("Make_optimistic_comment", "Make_optimistic_comment on");
    const RelationId military = b.relation("Use_conventional_military_force",
                                           "Use_conventional_military_force to");
    const RelationId statement = b.relation("Make_statement", "Make_statement to");
    const RelationId appeal =
        b.relation("Make_an_appeal_or_request", "Make_an_appeal_or_request to");
    const RelationId arrest =
        b.relation("Arrest_or_detain_or_charge_with_legal_action",
                   "Arrest_or_detain_or_charge_with_legal_action to");
    const RelationId filler_rel = b.relation("Consult");

    // tick T renders as day T+1
    b.fact(gov, engage_dc, icpc, 338);     // id 0, 339th day
    b.fact(gov, threaten, edu, 337);       // id 1, 338th day
    b.fact(gov, criticize, boko, 336);     // id 2, 337th day
    b.fact(gov, threaten, edu, 336);       // id 3
    b.fact(gov, provide_aid, citizen, 336);  // id 4
    b.fact(gov, optimistic, citizen, 335);   // id 5, 336th day
    b.fact(gov, military, boko, 334);        // id 6, 335th day
    b.fact(gov, statement, obama, 332);      // id 7, 333rd day
    b.fact(gov, accuse, boko, 331);          // id 8, 332nd day
    b.fact(gov, express_dc, citizen, 331);   // id 9
    b.fact(gov, engage_dc, citizen, 330);    // id 10, 331st day

    // second-order facts behind the transcript's chains
    b.fact(icpc, arrest, citizen, 307);      // 308th day
    b.fact(boko, military, citizen, 335);    // 336th day
    b.fact(edu, statement, muslim, 331);     // 332nd day
    b.fact(citizen, appeal, judiciary, 330); // 331st day

    // filler history so selection ids up to 56 resolve
    for (int i = 0; i < 50; ++i) {
        const EntityId filler = b.entity("Filler_Actor_" + std::to_string(i));
        b.fact(gov, filler_rel, filler, 300 - i);
    }
    b.fact(gov, filler_rel, obama, 100, Split::valid);
    b.fact(gov, appeal, judiciary, 339, Split::test);

    NigeriaFixture f{b.load(dir), {}, judiciary, "", ""};
    auto queries = queries_from_test(f.ds.kg, f.ds.vocab);
    f.query = queries.front();  // forward orientation

    f.step1_reply =
        "0, 1, 2, 5, 7, 8, 9, 10, 11, 14, 17, 21, 24, 25, 26, 27, 28, 30, 31, 32, 33, 34, 36, "
        "37, 38, 39, 45, 49, 50, 56";
    f.step2_reply =
        "Possible answers:\n"
        "1. Citizen_(Nigeria)\n"
        "2. Education_(Nigeria)\n"
        "3. Member_of_the_Judiciary_(Nigeria)\n"
        "4. Barack_Obama\n"
        "5. Xi_Jinping\n"
        "6. Boko_Haram\n"
        "7. Head_of_Government_(Nigeria)\n"
        "8. Court_Judge_(Nigeria)\n";
    return f;
}

// Random toy dataset for oracle-equivalence sweeps.
inline Dataset make_random_dataset(const TempDir& dir, std::mt19937_64& rng,
                                   int max_entities = 50, int max_facts = 200) {
    ToyBuilder b;
    std::uniform_int_distribution<int> ecount(3, max_entities);
    const int ne = ecount(rng);
    for (int i = 0; i < ne; ++i) b.entity("E" + std::to_string(i));
    std::uniform_int_distribution<int> rcount(1, 8);
    const int nr = rcount(rng);
    for (int i = 0; i < nr; ++i) b.relation("R" + std::to_string(i));

    std::uniform_int_distribution<int> fcount(1, max_facts);
    std::uniform_int_distribution<int> epick(0, ne - 1), rpick(0, nr - 1), tpick(0, 40);
    const int nf = fcount(rng);
    std::set<std::tuple<int, int, int, int>> seen;
    for (int i = 0; i < nf; ++i) {
        const int s = epick(rng), r = rpick(rng), o = epick(rng), t = tpick(rng);
        if (!seen.insert({s, r, o, t}).second) continue;
        b.fact(s, r, o, t, Split::train);
    }
    // one test fact late enough to have history
    b.fact(epick(rng), rpick(rng), epick(rng), 45, Split::test);
    return b.load(dir);
}

// -- brute-force oracles ----------------------------------------------------

inline std::vector<int32_t> brute_first_order(const TemporalKG& kg, EntityId subject, Tick t,
                                              int limit) {
    std::vector<int32_t> idx;
    for (size_t i = 0; i < kg.quads.size(); ++i)
        if (kg.quads[i].subject == subject && kg.quads[i].time < t)
            idx.push_back(static_cast<int32_t>(i));
    std::stable_sort(idx.begin(), idx.end(), [&](int32_t a, int32_t b) {
        return kg.quads[static_cast<size_t>(a)].time > kg.quads[static_cast<size_t>(b)].time;
    });
    if (static_cast<int>(idx.size()) > limit) idx.resize(static_cast<size_t>(limit));
    return idx;
}

inline std::vector<HistoryChain> brute_extend(const TemporalKG& kg,
                                              const std::vector<HistoryChain>& chains,
                                              int cap) {
    std::vector<HistoryChain> out;
    for (const auto& chain : chains) {
        const auto& tail = kg.quads[static_cast<size_t>(chain.links.back())];
        auto exts = brute_first_order(kg, tail.object, tail.time, cap);
        if (exts.empty()) {
            auto carried = chain;
            carried.unextended = true;
            out.push_back(carried);
            continue;
        }
        for (int32_t e : exts) {
            auto extended = chain;
            extended.links.push_back(e);
            out.push_back(extended);
        }
    }
    return out;
}

inline std::string brute_ordinal_suffix(long n) {
    if (n % 100 == 11 || n % 100 == 12 || n % 100 == 13) return "th";
    if (n % 10 == 1) return "st";
    if (n % 10 == 2) return "nd";
    if (n % 10 == 3) return "rd";
    return "th";
}

}  // namespace coh::test
