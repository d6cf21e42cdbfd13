#pragma once

#include <string>
#include <vector>

#include "coh/history.hpp"
#include "coh/tkg.hpp"
#include "coh/types.hpp"

namespace coh {

enum class TimeMode : uint8_t { ordinal_day, anonymized_integer };

struct TimeStyle {
    TimeMode mode = TimeMode::ordinal_day;
    Tick origin = 0;
};

enum class StepKind : uint8_t { select_first_order, select_chain, answer, leakage, explain };

struct PromptBundle {
    std::string text;
    StepKind step_kind = StepKind::select_first_order;
    // local_id == position in this vector; first-order items are one-link chains
    std::vector<HistoryChain> items;
    int select_n = 0;
    // Tail-object surfaces per item, as rendered in the prompt. Lets mock
    // backends answer without re-parsing the text.
    std::vector<std::string> candidate_objects;
    // Filled by the pipeline for answer prompts; consumed by the oracle mock.
    std::string ground_truth_name;
};

// Prompt wording for each step kind; "{n}", "{query_subject}",
// "{query_relation}", "{query_time}" and "{history_block}" are substituted,
// any other braced token is passed through literally.
struct TemplateSet {
    std::string select_first_order;
    std::string select_chain;
    std::string answer;
    std::string explain_suffix;
    std::string leakage;
};

TemplateSet default_templates();
// Loads one template per file from a directory with fixed file names
// (select_first_order.txt, select_chain.txt, answer.txt,
//  explain_suffix.txt, leakage.txt); missing files keep the default.
TemplateSet load_templates(const std::string& dir);

// "153rd day" for day index 153 (day index = tick+1); anonymized mode
// renders the bare day index.
std::string format_time(Tick tick, const TimeStyle& style);

class Verbalizer {
  public:
    Verbalizer(const Vocabulary& vocab, TimeStyle style, bool anonymized = false,
               TemplateSet templates = default_templates());

    std::string format_time(Tick tick) const;
    // "Germany Sign agreement with Denmark on the 153rd day"
    std::string verbalize_fact(const Quadruple& q) const;
    // "Germany, Sign agreement with, Denmark, on the 153rd day"
    std::string verbalize_fact_comma(const Quadruple& q) const;

    PromptBundle build_select_prompt(const TemporalKG& kg, const std::vector<HistoryChain>& items,
                                     const Query& query, int n, int step_index) const;
    PromptBundle build_answer_prompt(const TemporalKG& kg, const std::vector<HistoryChain>& chains,
                                     const Query& query) const;
    PromptBundle build_explanation_prompt(const TemporalKG& kg,
                                          const std::vector<HistoryChain>& chains,
                                          const Query& query) const;
    // Leakage checks deliberately use the real calendar date.
    PromptBundle build_leakage_prompt(const Quadruple& q, const std::string& raw_date) const;

    const Vocabulary& vocab() const { return *vocab_; }
    bool anonymized() const { return anonymized_; }

  private:
    std::string entity(EntityId e) const;
    std::string relation(RelationId r) const;
    std::string query_line(const Query& q, bool commas) const;

    const Vocabulary* vocab_;
    TimeStyle style_;
    bool anonymized_;
    TemplateSet templates_;
};

}  // namespace coh
