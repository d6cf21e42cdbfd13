#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "coh/tkg.hpp"
#include "coh/types.hpp"
#include "coh/verbalize.hpp"

namespace coh {

struct IdSelection {
    std::vector<int> local_ids;
    std::vector<std::pair<std::string, std::string>> dropped;  // (token, reason)
};

struct AnswerEntry {
    std::string surface;              // as printed by the model
    std::optional<EntityId> entity;   // unresolved answers carry nullopt
    int serial = 0;                   // serial number as printed
    int position = 0;                 // 1-based index after dedup; feeds scoring
};

struct RankedAnswers {
    std::vector<AnswerEntry> entries;
    std::vector<std::pair<std::string, std::string>> dropped;  // (surface, reason)
};

// Extracts integer tokens in order, tolerating commas, newlines and prose;
// out-of-range and duplicate ids are dropped with reasons, the rest is
// truncated to n. Throws EmptySelectionError when nothing valid remains.
IdSelection parse_id_selection(const std::string& reply, const PromptBundle& bundle, int n);

// Captures "<int>. <surface>" lines in order, resolves surfaces against the
// vocabulary (normalized exact match; optionally bounded edit distance),
// dedups by resolved id keeping the first occurrence, and assigns 1-based
// positions. Throws EmptyAnswerError when no numbered line is found.
RankedAnswers parse_ranked_answers(const std::string& reply, const Vocabulary& vocab,
                                   bool fuzzy_resolution = false);

}  // namespace coh
