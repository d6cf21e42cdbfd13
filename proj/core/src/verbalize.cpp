#include "coh/verbalize.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace coh {

namespace {

const char* kSelectFirstOrder =
    "There is a given text consisting of multiple historical events in the form of "
    "\"{id}:[{subject} {relation} {object} {time}];\". And there is a query in the form of: "
    "\"{subject} {relation} {whom} time}?\" If you must infer several {object} that you think "
    "may be the answer to the given query based on the given historical events, what important "
    "historical events do you base your predictions on? Please list the top {n} most important "
    "histories and output their {id}.\n"
    "\n"
    "Here are the given historical events:\n"
    "{history_block}\n"
    "\n"
    "Here is the query:\n"
    "{query_subject}, {query_relation}, whom, on the {query_time}?\n"
    "\n"
    "Please only output {id} of the historical events that your inferred answers are based on. "
    "Note that you must only output no more than {n} {id} without any explanation. Please "
    "strictly follow the above demands for output.\n";

const char* kSelectChain =
    "There is a given text consisting of multiple history chains in the form of "
    "\"{id}:[{subject} {relation} {object} {time}, {subject} {relation} {object} {time}, "
    "...];\". And there is a query in the form of: \"{subject} {relation} {whom} time}?\" If "
    "you must infer several {object} that you think may be the answer to the given query based "
    "on the given historical events, what important history chains do you base your predictions "
    "on? Please list the top {n} most important history chains and output their {id}.\n"
    "\n"
    "Here are the given history chains:\n"
    "{history_block}\n"
    "\n"
    "Here is the query:\n"
    "{query_subject}, {query_relation}, whom, on the {query_time}?\n"
    "\n"
    "Please only output {id} of the history chains that your inferred answers are based on. "
    "Note that you must only output no more than {n} {id} without any explanation. Please "
    "strictly follow the above demands for output.\n";

const char* kAnswer =
    "You must be able to correctly predict the {whom} of the given query from a given text "
    "consisting of multiple historical events in the form of \"{subject} {relation} {object} "
    "{time}\" and the query in the form of \"{subject} {relation} {whom} {time}?\" You must "
    "output several {object} that you think may be the answer to the given query based on the "
    "given historical events. Please list all possible {object} which may be answers to the "
    "query. Please assign each answer a serial number to represent its probability of being "
    "the correct answer. Note that answers with a high probability of being correct should be "
    "listed first.\n"
    "\n"
    "Here are the given historical events:\n"
    "{history_block}\n"
    "\n"
    "Here is the query:\n"
    "{query_subject}, {query_relation}, whom, on the {query_time}?\n"
    "\n"
    "Please list all possible {object} which may be answers (one per line) without "
    "explanations. Note that answers with high probability should be listed first.\n"
    "For example:\n"
    "\"\"\"\n"
    "Possible answers:\n"
    "1. XXX\n"
    "2. XXX\n"
    "3. XXX\n"
    "...\n"
    "\"\"\"\n"
    "Please strictly follow the above demands for output.\n";

const char* kExplainSuffix =
    "\n"
    "After the possible answers, please explain each answer in order: repeat its serial number "
    "and name followed by a colon, then describe the historical events you based that answer "
    "on and why it may be the answer to the query \"{query_subject} {query_relation} whom on "
    "the {query_time}?\".\n";

const char* kLeakage =
    "Do you know the fact that {query_subject} {query_relation} {query_object} on "
    "{query_time}?";

void replace_all(std::string& text, std::string_view token, std::string_view value) {
    size_t pos = 0;
    while ((pos = text.find(token, pos)) != std::string::npos) {
        text.replace(pos, token.size(), value);
        pos += value.size();
    }
}

std::string ordinal_suffix(long n) {
    const long mod100 = n % 100;
    if (mod100 >= 11 && mod100 <= 13) return "th";
    switch (n % 10) {
        case 1: return "st";
        case 2: return "nd";
        case 3: return "rd";
        default: return "th";
    }
}

std::string read_file_if_present(const std::filesystem::path& p, const char* fallback) {
    std::ifstream in(p);
    if (!in) return fallback;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TemplateSet default_templates() {
    return {kSelectFirstOrder, kSelectChain, kAnswer, kExplainSuffix, kLeakage};
}

TemplateSet load_templates(const std::string& dir) {
    std::filesystem::path d(dir);
    TemplateSet t;
    t.select_first_order = read_file_if_present(d / "select_first_order.txt", kSelectFirstOrder);
    t.select_chain = read_file_if_present(d / "select_chain.txt", kSelectChain);
    t.answer = read_file_if_present(d / "answer.txt", kAnswer);
    t.explain_suffix = read_file_if_present(d / "explain_suffix.txt", kExplainSuffix);
    t.leakage = read_file_if_present(d / "leakage.txt", kLeakage);
    return t;
}

std::string format_time(Tick tick, const TimeStyle& style) {
    if (tick < 0) throw Error("format_time: negative tick");
    const long day = static_cast<long>(tick - style.origin) + 1;  // first day renders "1st"
    if (style.mode == TimeMode::anonymized_integer) return std::to_string(day);
    return std::to_string(day) + ordinal_suffix(day) + " day";
}

Verbalizer::Verbalizer(const Vocabulary& vocab, TimeStyle style, bool anonymized,
                       TemplateSet templates)
    : vocab_(&vocab), style_(style), anonymized_(anonymized), templates_(std::move(templates)) {}

std::string Verbalizer::format_time(Tick tick) const { return coh::format_time(tick, style_); }

std::string Verbalizer::entity(EntityId e) const {
    if (anonymized_) {
        vocab_->entity_surface(e);  // id validation only
        return std::to_string(e);
    }
    return vocab_->entity_surface(e);
}

std::string Verbalizer::relation(RelationId r) const {
    if (anonymized_) {
        vocab_->relation_surface(r);
        return std::to_string(r);
    }
    return vocab_->relation_phrase(r);
}

std::string Verbalizer::verbalize_fact(const Quadruple& q) const {
    return entity(q.subject) + " " + relation(q.relation) + " " + entity(q.object) +
           " on the " + format_time(q.time);
}

std::string Verbalizer::verbalize_fact_comma(const Quadruple& q) const {
    return entity(q.subject) + ", " + relation(q.relation) + ", " + entity(q.object) +
           ", on the " + format_time(q.time);
}

std::string Verbalizer::query_line(const Query& q, bool commas) const {
    if (commas)
        return entity(q.subject) + ", " + relation(q.relation) + ", whom, on the " +
               format_time(q.time) + "?";
    return entity(q.subject) + " " + relation(q.relation) + " whom on the " +
           format_time(q.time) + "?";
}

PromptBundle Verbalizer::build_select_prompt(const TemporalKG& kg,
                                             const std::vector<HistoryChain>& items,
                                             const Query& query, int n, int step_index) const {
    if (items.empty()) throw Error("nothing to select from");
    if (n < 1) throw Error("build_select_prompt: n must be >= 1");

    const bool first_order = step_index <= 1;
    std::string block;
    PromptBundle bundle;
    bundle.step_kind = first_order ? StepKind::select_first_order : StepKind::select_chain;
    bundle.items = items;
    bundle.select_n = n;
    for (size_t i = 0; i < items.size(); ++i) {
        block += std::to_string(i);
        block += ":[";
        for (size_t j = 0; j < items[i].links.size(); ++j) {
            if (j) block += ", ";
            block += verbalize_fact(kg.quads[static_cast<size_t>(items[i].links[j])]);
        }
        block += "];";
        if (i + 1 < items.size()) block += '\n';
        const auto& tail = kg.quads[static_cast<size_t>(items[i].links.back())];
        bundle.candidate_objects.push_back(entity(tail.object));
    }

    std::string text = first_order ? templates_.select_first_order : templates_.select_chain;
    replace_all(text, "{n}", std::to_string(n));
    replace_all(text, "{history_block}", block);
    replace_all(text, "{query_subject}", entity(query.subject));
    replace_all(text, "{query_relation}", relation(query.relation));
    replace_all(text, "{query_time}", format_time(query.time));
    bundle.text = std::move(text);
    return bundle;
}

PromptBundle Verbalizer::build_answer_prompt(const TemporalKG& kg,
                                             const std::vector<HistoryChain>& chains,
                                             const Query& query) const {
    if (chains.empty()) throw Error("build_answer_prompt: empty chains");

    std::string block;
    PromptBundle bundle;
    bundle.step_kind = StepKind::answer;
    bundle.items = chains;
    for (size_t i = 0; i < chains.size(); ++i) {
        for (size_t j = 0; j < chains[i].links.size(); ++j) {
            if (j) block += ' ';
            block += verbalize_fact_comma(kg.quads[static_cast<size_t>(chains[i].links[j])]);
            block += ';';
        }
        if (i + 1 < chains.size()) block += '\n';
        const auto& tail = kg.quads[static_cast<size_t>(chains[i].links.back())];
        bundle.candidate_objects.push_back(entity(tail.object));
    }

    std::string text = templates_.answer;
    replace_all(text, "{history_block}", block);
    replace_all(text, "{query_subject}", entity(query.subject));
    replace_all(text, "{query_relation}", relation(query.relation));
    replace_all(text, "{query_time}", format_time(query.time));
    bundle.text = std::move(text);
    return bundle;
}

PromptBundle Verbalizer::build_explanation_prompt(const TemporalKG& kg,
                                                  const std::vector<HistoryChain>& chains,
                                                  const Query& query) const {
    PromptBundle bundle = build_answer_prompt(kg, chains, query);
    std::string suffix = templates_.explain_suffix;
    replace_all(suffix, "{query_subject}", entity(query.subject));
    replace_all(suffix, "{query_relation}", relation(query.relation));
    replace_all(suffix, "{query_time}", format_time(query.time));
    bundle.text += suffix;
    bundle.step_kind = StepKind::explain;
    return bundle;
}

PromptBundle Verbalizer::build_leakage_prompt(const Quadruple& q,
                                              const std::string& raw_date) const {
    if (raw_date.empty()) throw Error("build_leakage_prompt: no calendar mapping for tick");
    PromptBundle bundle;
    bundle.step_kind = StepKind::leakage;
    std::string text = templates_.leakage;
    // Leakage prompts keep the real surfaces and date regardless of anon mode.
    replace_all(text, "{query_subject}", vocab_->entity_surface(q.subject));
    replace_all(text, "{query_relation}", vocab_->relation_phrase(q.relation));
    replace_all(text, "{query_object}", vocab_->entity_surface(q.object));
    replace_all(text, "{query_time}", raw_date);
    bundle.text = std::move(text);
    return bundle;
}

}  // namespace coh
