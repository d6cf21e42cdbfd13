#include "coh/tkg.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

namespace coh {

std::string normalize_surface(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == '(' || c == ')') continue;
        if (c == '_') c = ' ';
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    // collapse runs of spaces and trim
    std::string collapsed;
    collapsed.reserve(out.size());
    bool in_space = true;  // trims leading
    for (char c : out) {
        if (c == ' ' || c == '\t') {
            if (!in_space) collapsed.push_back(' ');
            in_space = true;
        } else {
            collapsed.push_back(c);
            in_space = false;
        }
    }
    while (!collapsed.empty() && collapsed.back() == ' ') collapsed.pop_back();
    return collapsed;
}

const std::string& Vocabulary::entity_surface(EntityId e) const {
    if (e < 0 || e >= num_entities())
        throw Error("unresolvable entity id " + std::to_string(e));
    return entity_names[static_cast<size_t>(e)];
}

std::string Vocabulary::relation_surface(RelationId r) const {
    const int base = num_base_relations();
    if (r >= 0 && r < base) return relation_names[static_cast<size_t>(r)];
    if (r >= base && r < 2 * base) {
        const size_t i = static_cast<size_t>(r - base);
        if (i < reversed_relation_names.size() && !reversed_relation_names[i].empty())
            return reversed_relation_names[i];
        return "[inverse] " + relation_names[i];
    }
    throw Error("unresolvable relation id " + std::to_string(r));
}

std::string Vocabulary::relation_phrase(RelationId r) const {
    if (auto it = relation_phrases.find(r); it != relation_phrases.end()) return it->second;
    return relation_surface(r);
}

std::optional<EntityId> Vocabulary::resolve_entity(std::string_view surface) const {
    auto it = entity_lookup_.find(normalize_surface(surface));
    if (it == entity_lookup_.end()) return std::nullopt;
    return it->second;
}

void Vocabulary::rebuild_entity_lookup() {
    entity_lookup_.clear();
    entity_lookup_.reserve(entity_names.size());
    for (EntityId i = 0; i < num_entities(); ++i) {
        auto norm = normalize_surface(entity_names[static_cast<size_t>(i)]);
        auto [it, inserted] = entity_lookup_.emplace(std::move(norm), i);
        if (!inserted)
            throw Error("entity surfaces collide after normalization: '" +
                        entity_names[static_cast<size_t>(i)] + "' and '" +
                        entity_names[static_cast<size_t>(it->second)] + "'");
    }
}

namespace {

bool quad_less(const Quadruple& a, const Quadruple& b) {
    return std::tie(a.time, a.subject, a.relation, a.object) <
           std::tie(b.time, b.subject, b.relation, b.object);
}

struct NameMap {
    std::vector<std::string> names;  // dense id -> name
};

NameMap load_name_map(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw Error(std::string("cannot open ") + what + " map: " + path);
    std::vector<std::pair<std::string, int>> rows;
    std::string line;
    int lineno = 0;
    int max_id = -1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw Error(std::string(what) + " map " + path + ": line " +
                        std::to_string(lineno) + ": expected 'name<TAB>id'");
        std::string name = line.substr(0, tab);
        int id = 0;
        auto rest = std::string_view(line).substr(tab + 1);
        auto [p, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), id);
        if (ec != std::errc() || id < 0)
            throw Error(std::string(what) + " map " + path + ": line " +
                        std::to_string(lineno) + ": bad id");
        rows.emplace_back(std::move(name), id);
        max_id = std::max(max_id, id);
    }
    if (rows.empty()) throw Error(std::string("empty ") + what + " map: " + path);
    NameMap m;
    m.names.resize(static_cast<size_t>(max_id) + 1);
    std::vector<bool> seen(m.names.size(), false);
    for (auto& [name, id] : rows) {
        if (seen[static_cast<size_t>(id)])
            throw Error(std::string(what) + " map " + path + ": duplicate id " +
                        std::to_string(id));
        seen[static_cast<size_t>(id)] = true;
        m.names[static_cast<size_t>(id)] = std::move(name);
    }
    for (size_t i = 0; i < seen.size(); ++i)
        if (!seen[i])
            throw Error(std::string(what) + " map " + path + ": ids not dense, missing " +
                        std::to_string(i));
    return m;
}

void load_split(const std::string& path, Split split, int num_entities, int num_relations,
                std::vector<Quadruple>& quads, std::vector<Split>& splits) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open split file: " + path);
    std::string line;
    int lineno = 0;
    size_t added = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ls(line);
        long f[4];
        for (int i = 0; i < 4; ++i) {
            if (!(ls >> f[i]))
                throw Error(path + ": line " + std::to_string(lineno) +
                            ": expected 4 integer fields");
        }
        Quadruple q{static_cast<EntityId>(f[0]), static_cast<RelationId>(f[1]),
                    static_cast<EntityId>(f[2]), static_cast<Tick>(f[3])};
        if (q.subject < 0 || q.subject >= num_entities)
            throw Error(path + ": line " + std::to_string(lineno) + ": unknown entity id " +
                        std::to_string(q.subject));
        if (q.object < 0 || q.object >= num_entities)
            throw Error(path + ": line " + std::to_string(lineno) + ": unknown entity id " +
                        std::to_string(q.object));
        if (q.relation < 0 || q.relation >= num_relations)
            throw Error(path + ": line " + std::to_string(lineno) + ": unknown relation id " +
                        std::to_string(q.relation));
        if (q.time < 0)
            throw Error(path + ": line " + std::to_string(lineno) + ": negative timestamp");
        quads.push_back(q);
        splits.push_back(split);
        ++added;
    }
    if (split == Split::train && added == 0) throw Error("empty split: " + path);
}

void sort_store(TemporalKG& kg) {
    std::vector<size_t> perm(kg.quads.size());
    std::iota(perm.begin(), perm.end(), size_t{0});
    std::stable_sort(perm.begin(), perm.end(), [&](size_t a, size_t b) {
        if (quad_less(kg.quads[a], kg.quads[b])) return true;
        if (quad_less(kg.quads[b], kg.quads[a])) return false;
        return kg.splits[a] < kg.splits[b];
    });
    std::vector<Quadruple> q2(kg.quads.size());
    std::vector<Split> s2(kg.splits.size());
    for (size_t i = 0; i < perm.size(); ++i) {
        q2[i] = kg.quads[perm[i]];
        s2[i] = kg.splits[perm[i]];
    }
    kg.quads = std::move(q2);
    kg.splits = std::move(s2);
}

const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::valid: return "valid";
        default: return "test";
    }
}

}  // namespace

size_t TemporalKG::facts_before(Tick t) const {
    auto it = std::lower_bound(quads.begin(), quads.end(), t,
                               [](const Quadruple& q, Tick v) { return q.time < v; });
    return static_cast<size_t>(it - quads.begin());
}

std::vector<int32_t> TemporalKG::subject_facts_before(EntityId subject, Tick t,
                                                      unsigned allowed_splits) const {
    std::vector<int32_t> out;
    if (!by_subject_.empty()) {
        if (subject < 0 || static_cast<size_t>(subject) >= by_subject_.size()) return out;
        for (int32_t idx : by_subject_[static_cast<size_t>(subject)]) {
            const auto& q = quads[static_cast<size_t>(idx)];
            if (q.time >= t) break;  // index is time-ascending
            if (allowed_splits & (1u << static_cast<unsigned>(splits[static_cast<size_t>(idx)])))
                out.push_back(idx);
        }
        return out;
    }
    const size_t end = facts_before(t);
    for (size_t i = 0; i < end; ++i) {
        if (quads[i].subject != subject) continue;
        if (allowed_splits & (1u << static_cast<unsigned>(splits[i])))
            out.push_back(static_cast<int32_t>(i));
    }
    return out;
}

SplitCounts TemporalKG::counts() const {
    SplitCounts c;
    for (Split s : splits) {
        if (s == Split::train) ++c.train;
        else if (s == Split::valid) ++c.valid;
        else ++c.test;
    }
    return c;
}

void TemporalKG::build_subject_index(int num_entities) {
    by_subject_.assign(static_cast<size_t>(num_entities), {});
    for (size_t i = 0; i < quads.size(); ++i)
        by_subject_[static_cast<size_t>(quads[i].subject)].push_back(static_cast<int32_t>(i));
}

Dataset load_dataset(const std::string& train_path, const std::string& valid_path,
                     const std::string& test_path, const std::string& entity_map_path,
                     const std::string& relation_map_path) {
    Dataset ds;
    auto ents = load_name_map(entity_map_path, "entity");
    auto rels = load_name_map(relation_map_path, "relation");
    ds.vocab.entity_names = std::move(ents.names);
    ds.vocab.relation_names = std::move(rels.names);
    ds.vocab.rebuild_entity_lookup();

    const int ne = ds.vocab.num_entities();
    const int nr = ds.vocab.num_base_relations();
    load_split(train_path, Split::train, ne, nr, ds.kg.quads, ds.kg.splits);
    load_split(valid_path, Split::valid, ne, nr, ds.kg.quads, ds.kg.splits);
    load_split(test_path, Split::test, ne, nr, ds.kg.quads, ds.kg.splits);

    sort_store(ds.kg);

    // intra-split duplicates are a data bug; cross-split recurrence is fine
    for (size_t i = 1; i < ds.kg.quads.size(); ++i) {
        if (ds.kg.quads[i] == ds.kg.quads[i - 1] && ds.kg.splits[i] == ds.kg.splits[i - 1]) {
            const auto& q = ds.kg.quads[i];
            throw Error(std::string("duplicate quadruple within split ") +
                        split_name(ds.kg.splits[i]) + ": " + std::to_string(q.subject) + " " +
                        std::to_string(q.relation) + " " + std::to_string(q.object) + " " +
                        std::to_string(q.time));
        }
    }

    ds.kg.time_origin = ds.kg.quads.empty() ? 0 : ds.kg.quads.front().time;
    ds.kg.build_subject_index(ne);
    return ds;
}

void load_reversed_names(Vocabulary& vocab, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open reversed-name overlay: " + path);
    vocab.reversed_relation_names.assign(static_cast<size_t>(vocab.num_base_relations()), "");
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw Error(path + ": line " + std::to_string(lineno) +
                        ": expected 'relation_id<TAB>surface'");
        int id = std::stoi(line.substr(0, tab));
        if (id < 0 || id >= vocab.num_base_relations())
            throw Error(path + ": line " + std::to_string(lineno) + ": unknown relation id " +
                        std::to_string(id));
        vocab.reversed_relation_names[static_cast<size_t>(id)] = line.substr(tab + 1);
    }
}

void load_relation_phrases(Vocabulary& vocab, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open relation-phrase overlay: " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw Error(path + ": line " + std::to_string(lineno) +
                        ": expected 'relation_id<TAB>phrase'");
        int id = std::stoi(line.substr(0, tab));
        if (id < 0 || id >= 2 * vocab.num_base_relations())
            throw Error(path + ": line " + std::to_string(lineno) + ": unknown relation id " +
                        std::to_string(id));
        vocab.relation_phrases[id] = line.substr(tab + 1);
    }
}

void augment_reversed(TemporalKG& kg, Vocabulary& vocab) {
    if (kg.augmented) throw Error("store already augmented with reversed relations");
    const int nr = vocab.num_base_relations();
    if (vocab.reversed_relation_names.empty())
        vocab.reversed_relation_names.assign(static_cast<size_t>(nr), "");

    const size_t n = kg.quads.size();
    kg.quads.reserve(2 * n);
    kg.splits.reserve(2 * n);
    for (size_t i = 0; i < n; ++i) {
        const Quadruple& q = kg.quads[i];
        kg.quads.push_back({q.object, q.relation + nr, q.subject, q.time});
        kg.splits.push_back(kg.splits[i]);
    }
    sort_store(kg);
    kg.augmented = true;
    kg.build_subject_index(vocab.num_entities());
}

Quadruple unreverse(const Quadruple& q, int num_base_relations) {
    if (q.relation < num_base_relations) return q;
    return {q.object, q.relation - num_base_relations, q.subject, q.time};
}

std::vector<Query> queries_from_test(const TemporalKG& kg, const Vocabulary& vocab) {
    if (!kg.augmented) throw Error("queries_from_test requires an augmented store");
    const int nr = vocab.num_base_relations();
    std::vector<Query> out;
    for (size_t i = 0; i < kg.quads.size(); ++i) {
        if (kg.splits[i] != Split::test) continue;
        const Quadruple& q = kg.quads[i];
        if (q.relation >= nr) continue;  // mirrors handled with their originals
        const bool no_hist = kg.facts_before(q.time) == 0;
        out.push_back({q.subject, q.relation, q.object, q.time, Direction::forward,
                       static_cast<int32_t>(i), no_hist});
        out.push_back({q.object, q.relation + nr, q.subject, q.time, Direction::reversed,
                       static_cast<int32_t>(i), no_hist});
    }
    return out;
}

std::string dump_canonical(const TemporalKG& kg, Split split) {
    std::string out;
    for (size_t i = 0; i < kg.quads.size(); ++i) {
        if (kg.splits[i] != split) continue;
        const Quadruple& q = kg.quads[i];
        out += std::to_string(q.subject);
        out += '\t';
        out += std::to_string(q.relation);
        out += '\t';
        out += std::to_string(q.object);
        out += '\t';
        out += std::to_string(q.time);
        out += '\n';
    }
    return out;
}

}  // namespace coh
