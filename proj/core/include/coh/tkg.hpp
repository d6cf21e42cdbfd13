#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "coh/types.hpp"

namespace coh {

// Surface-form normalization used for entity resolution: lowercase,
// underscores to spaces, parentheses stripped, whitespace collapsed.
std::string normalize_surface(std::string_view s);

struct Vocabulary {
    std::vector<std::string> entity_names;    // id -> surface
    std::vector<std::string> relation_names;  // base relation space only
    // Reversed surfaces, indexed by base relation id. Filled during
    // augmentation from the overlay file or synthesized as "[inverse] name".
    std::vector<std::string> reversed_relation_names;
    // Optional phrases carrying prepositions, keyed in the augmented
    // relation space ("Sign agreement" -> "Sign agreement with").
    std::unordered_map<RelationId, std::string> relation_phrases;

    int num_base_relations() const { return static_cast<int>(relation_names.size()); }
    int num_entities() const { return static_cast<int>(entity_names.size()); }

    const std::string& entity_surface(EntityId e) const;
    // Surface for any id in the augmented relation space.
    std::string relation_surface(RelationId r) const;
    // Phrase overlay if present, else relation_surface.
    std::string relation_phrase(RelationId r) const;

    std::optional<EntityId> resolve_entity(std::string_view surface) const;

    void rebuild_entity_lookup();

  private:
    std::unordered_map<std::string, EntityId> entity_lookup_;  // normalized -> id
};

struct SplitCounts {
    size_t train = 0, valid = 0, test = 0;
};

struct TemporalKG {
    // Sorted by (time, subject, relation, object); splits parallel to quads.
    std::vector<Quadruple> quads;
    std::vector<Split> splits;
    bool augmented = false;
    Tick time_origin = 0;

    // Index range [0, n) of quadruples with time < t.
    size_t facts_before(Tick t) const;
    // Store indices of facts with the given subject and time < t,
    // ascending store order. `allowed` masks splits (bit per Split value).
    std::vector<int32_t> subject_facts_before(EntityId subject, Tick t,
                                              unsigned allowed_splits = 0x7) const;

    SplitCounts counts() const;
    void build_subject_index(int num_entities);

  private:
    // per-entity store indices, ascending
    std::vector<std::vector<int32_t>> by_subject_;
};

struct Dataset {
    TemporalKG kg;
    Vocabulary vocab;
};

// Quadruple files: whitespace-separated "s r o t" integers per line,
// columns beyond the fourth ignored. Mapping files: "name<TAB>id".
Dataset load_dataset(const std::string& train_path, const std::string& valid_path,
                     const std::string& test_path, const std::string& entity_map_path,
                     const std::string& relation_map_path);

// Overlay file "relation_id<TAB>reversed surface"; must be loaded before
// augmentation to take effect.
void load_reversed_names(Vocabulary& vocab, const std::string& path);

// Overlay file "relation_id<TAB>phrase" (augmented id space).
void load_relation_phrases(Vocabulary& vocab, const std::string& path);

// Adds the mirror (o, r+|R|, s, t) for every stored fact.
void augment_reversed(TemporalKG& kg, Vocabulary& vocab);

// Maps an augmented-space quadruple back to its original orientation.
Quadruple unreverse(const Quadruple& q, int num_base_relations);

// One forward and one reversed query per original test quadruple.
std::vector<Query> queries_from_test(const TemporalKG& kg, const Vocabulary& vocab);

// Canonical per-split dump, one "s\tr\to\tt" line per fact, store order.
std::string dump_canonical(const TemporalKG& kg, Split split);

}  // namespace coh
