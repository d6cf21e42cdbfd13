#include "coh/parse.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <regex>
#include <unordered_set>

namespace coh {

namespace {

bool all_digits(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
        return std::isdigit(c) != 0;
    });
}

size_t edit_distance_capped(std::string_view a, std::string_view b, size_t cap) {
    if (a.size() > b.size()) std::swap(a, b);
    if (b.size() - a.size() > cap) return cap + 1;
    std::vector<size_t> prev(a.size() + 1), cur(a.size() + 1);
    for (size_t i = 0; i <= a.size(); ++i) prev[i] = i;
    for (size_t j = 1; j <= b.size(); ++j) {
        cur[0] = j;
        size_t row_min = cur[0];
        for (size_t i = 1; i <= a.size(); ++i) {
            const size_t sub = prev[i - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[i] = std::min({prev[i] + 1, cur[i - 1] + 1, sub});
            row_min = std::min(row_min, cur[i]);
        }
        if (row_min > cap) return cap + 1;
        std::swap(prev, cur);
    }
    return prev[a.size()];
}

std::optional<EntityId> resolve(const Vocabulary& vocab, const std::string& surface,
                                bool fuzzy) {
    if (auto e = vocab.resolve_entity(surface)) return e;
    // anonymized runs print bare numeric ids
    if (all_digits(surface)) {
        int id = 0;
        std::from_chars(surface.data(), surface.data() + surface.size(), id);
        if (id >= 0 && id < vocab.num_entities()) return id;
    }
    if (!fuzzy) return std::nullopt;
    const std::string norm = normalize_surface(surface);
    std::optional<EntityId> hit;
    for (EntityId i = 0; i < vocab.num_entities(); ++i) {
        const std::string cand = normalize_surface(vocab.entity_names[static_cast<size_t>(i)]);
        if (edit_distance_capped(norm, cand, 2) <= 2) {
            if (hit) return std::nullopt;  // ambiguous, refuse
            hit = i;
        }
    }
    return hit;
}

}  // namespace

IdSelection parse_id_selection(const std::string& reply, const PromptBundle& bundle, int n) {
    if (bundle.step_kind != StepKind::select_first_order &&
        bundle.step_kind != StepKind::select_chain)
        throw Error("parse_id_selection: bundle is not a select prompt");

    const int item_count = static_cast<int>(bundle.items.size());
    IdSelection sel;
    std::unordered_set<int> seen;

    static const std::regex int_token("\\d+");
    for (auto it = std::sregex_iterator(reply.begin(), reply.end(), int_token);
         it != std::sregex_iterator(); ++it) {
        const std::string tok = it->str();
        int id = 0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), id);
        if (ec != std::errc()) {
            sel.dropped.emplace_back(tok, "not an integer");
            continue;
        }
        if (id < 0 || id >= item_count) {
            sel.dropped.emplace_back(tok, "out of range");
            continue;
        }
        if (!seen.insert(id).second) {
            sel.dropped.emplace_back(tok, "duplicate");
            continue;
        }
        if (static_cast<int>(sel.local_ids.size()) < n) sel.local_ids.push_back(id);
        else sel.dropped.emplace_back(tok, "beyond limit");
    }
    if (sel.local_ids.empty()) throw EmptySelectionError("no valid ids in reply");
    return sel;
}

RankedAnswers parse_ranked_answers(const std::string& reply, const Vocabulary& vocab,
                                   bool fuzzy_resolution) {
    RankedAnswers out;
    std::unordered_set<EntityId> seen_ids;
    std::unordered_set<std::string> seen_unresolved;

    static const std::regex line_re("^\\s*(\\d+)[.):]\\s*(.+?)\\s*$");
    std::istringstream in(reply);
    std::string line;
    bool any_numbered = false;
    int position = 0;
    while (std::getline(in, line)) {
        std::smatch m;
        if (!std::regex_match(line, m, line_re)) continue;
        any_numbered = true;
        const int serial = std::stoi(m[1].str());
        const std::string surface = m[2].str();

        auto entity = resolve(vocab, surface, fuzzy_resolution);
        if (entity) {
            if (!seen_ids.insert(*entity).second) {
                out.dropped.emplace_back(surface, "duplicate entity");
                continue;
            }
        } else {
            out.dropped.emplace_back(surface, "unresolved");
            if (!seen_unresolved.insert(normalize_surface(surface)).second) continue;
        }
        out.entries.push_back({surface, entity, serial, ++position});
    }
    if (!any_numbered) throw EmptyAnswerError("no numbered answer lines in reply");
    return out;
}

}  // namespace coh
