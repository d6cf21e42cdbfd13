#include "coh/gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <random>
#include <thread>
#include <unordered_set>

#include <json.hpp>

#include <httplib.h>

namespace coh {

namespace {

using json = nlohmann::json;

uint64_t now_ns() {
    return static_cast<uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(
            std::chrono::steady_clock::now().time_since_epoch())
            .count());
}

// FNV-1a; stable across platforms, unlike std::hash
uint64_t fnv1a(std::string_view s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::vector<std::string> load_script(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open script file: " + path);
    std::vector<std::string> replies;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("reply"))
            throw Error(path + ": line " + std::to_string(lineno) +
                        ": expected {\"reply\": ...}");
        replies.push_back(j["reply"].get<std::string>());
    }
    return replies;
}

}  // namespace

Gateway::Gateway(BackendConfig config, GenerationParams params, std::string transcript_log_path)
    : config_(std::move(config)), params_(params), log_path_(std::move(transcript_log_path)) {
    if (config_.kind == BackendKind::scripted_mock) {
        script_ = config_.script_path.empty() ? config_.script_replies
                                              : load_script(config_.script_path);
    }
    if (config_.kind == BackendKind::oracle_mock &&
        (config_.hit_probability < 0 || config_.hit_probability > 1))
        throw Error("oracle hit probability must be in [0,1]");
}

std::string Gateway::scripted_reply(size_t index) const {
    if (index >= script_.size())
        throw Error("scripted backend exhausted after " + std::to_string(script_.size()) +
                    " replies");
    return script_[index];
}

std::string Gateway::recency_reply(const PromptBundle& bundle) const {
    switch (bundle.step_kind) {
        case StepKind::select_first_order:
        case StepKind::select_chain: {
            const int count = std::min<int>(bundle.select_n,
                                            static_cast<int>(bundle.items.size()));
            std::string out;
            for (int i = 0; i < count; ++i) {
                if (i) out += ", ";
                out += std::to_string(i);
            }
            return out;
        }
        case StepKind::leakage:
            return "No.";
        default: {
            // answers: tail objects in given (newest-first) order, deduped
            std::string out = "Possible answers:\n";
            std::unordered_set<std::string> seen;
            int serial = 0;
            for (const auto& obj : bundle.candidate_objects) {
                if (!seen.insert(obj).second) continue;
                out += std::to_string(++serial) + ". " + obj + "\n";
            }
            return out;
        }
    }
}

std::string Gateway::oracle_reply(const PromptBundle& bundle) const {
    if (bundle.step_kind == StepKind::select_first_order ||
        bundle.step_kind == StepKind::select_chain || bundle.step_kind == StepKind::leakage)
        return recency_reply(bundle);

    // seed from the prompt text so the draw is schedule-independent
    std::mt19937_64 rng(fnv1a(bundle.text) ^ config_.seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < config_.hit_probability && !bundle.ground_truth_name.empty())
        return "Possible answers:\n1. " + bundle.ground_truth_name + "\n";

    if (!config_.entity_pool || config_.entity_pool->empty())
        return "Possible answers:\n";  // nothing to miss with
    std::uniform_int_distribution<size_t> pick(0, config_.entity_pool->size() - 1);
    std::string name = (*config_.entity_pool)[pick(rng)];
    for (int guard = 0; name == bundle.ground_truth_name && guard < 64; ++guard)
        name = (*config_.entity_pool)[pick(rng)];
    return "Possible answers:\n1. " + name + "\n";
}

CompletionResult Gateway::run_http(const PromptBundle& bundle) {
    CompletionResult result;
    result.transcript.backend = BackendKind::http_chat;
    result.transcript.request = bundle.text;

    json body = {
        {"model", config_.model},
        {"messages", json::array({{{"role", "user"}, {"content", bundle.text}}})},
        {"max_tokens", params_.max_tokens},
        {"temperature", params_.temperature},
        {"top_p", params_.top_p},
    };
    const std::string payload = body.dump();

    httplib::Client client(config_.endpoint);
    client.set_connection_timeout(std::chrono::duration<double>(config_.timeout_s));
    client.set_read_timeout(std::chrono::duration<double>(config_.timeout_s));
    httplib::Headers headers;
    if (!config_.auth_env.empty()) {
        if (const char* token = std::getenv(config_.auth_env.c_str()))
            headers.emplace("Authorization", std::string("Bearer ") + token);
    }

    double backoff = config_.backoff_initial_s;
    std::string last_error;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
        result.transcript.attempts = attempt + 1;
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
            backoff *= 2;
        }
        auto res = client.Post(config_.path, headers, payload, "application/json");
        if (!res) {
            last_error = "transport: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500 || res->status == 429) {
            last_error = "transport: HTTP " + std::to_string(res->status);
            continue;
        }
        result.transcript.response = res->body;
        if (res->status != 200) {
            result.error = "protocol: HTTP " + std::to_string(res->status);
            return result;
        }
        json j = json::parse(res->body, nullptr, false);
        if (j.is_discarded() || !j.contains("choices") || j["choices"].empty() ||
            !j["choices"][0].contains("message")) {
            result.error = "protocol: unparseable chat completion reply";
            return result;
        }
        result.text = j["choices"][0]["message"].value("content", "");
        return result;
    }
    result.error = "retries exhausted: " + last_error;
    return result;
}

CompletionResult Gateway::dispatch(const PromptBundle& bundle, size_t script_index) {
    calls_.fetch_add(1);
    CompletionResult result;
    result.transcript.started_ns = now_ns();
    result.transcript.backend = config_.kind;
    result.transcript.request = bundle.text;
    try {
        switch (config_.kind) {
            case BackendKind::http_chat: {
                auto r = run_http(bundle);
                r.transcript.started_ns = result.transcript.started_ns;
                result = std::move(r);
                break;
            }
            case BackendKind::scripted_mock:
                result.text = scripted_reply(script_index);
                result.transcript.attempts = 1;
                break;
            case BackendKind::recency_mock:
                result.text = recency_reply(bundle);
                result.transcript.attempts = 1;
                break;
            case BackendKind::oracle_mock:
                result.text = oracle_reply(bundle);
                result.transcript.attempts = 1;
                break;
        }
    } catch (const Error& e) {
        result.error = e.what();
    }
    if (result.transcript.response.empty()) result.transcript.response = result.text;
    result.transcript.finished_ns = now_ns();
    result.transcript.latency_ms =
        static_cast<double>(result.transcript.finished_ns - result.transcript.started_ns) / 1e6;
    log_transcript(result);
    return result;
}

void Gateway::log_transcript(const CompletionResult& r) {
    if (log_path_.empty()) return;
    json rec = {
        {"request", r.transcript.request},
        {"response", r.transcript.response},
        {"latency_ms", r.transcript.latency_ms},
        {"backend", static_cast<int>(r.transcript.backend)},
        {"attempts", r.transcript.attempts},
    };
    if (r.error) rec["error"] = *r.error;
    std::lock_guard<std::mutex> lock(log_mutex_);
    std::ofstream out(log_path_, std::ios::app);
    out << rec.dump() << '\n';
}

CompletionResult Gateway::complete(const PromptBundle& bundle) {
    return dispatch(bundle, script_cursor_.fetch_add(1));
}

std::vector<CompletionResult> Gateway::complete_batch(const std::vector<PromptBundle>& bundles,
                                                      int max_in_flight) {
    if (max_in_flight < 1) throw Error("complete_batch: max_in_flight must be >= 1");
    std::vector<CompletionResult> results(bundles.size());
    if (bundles.empty()) return results;

    // script replies are bound to input positions up front so that batch
    // output is identical to a sequential run
    const size_t script_base = script_cursor_.fetch_add(bundles.size());

    const int workers = std::min<int>(max_in_flight, static_cast<int>(bundles.size()));
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&] {
            for (size_t i = next.fetch_add(1); i < bundles.size(); i = next.fetch_add(1))
                results[i] = dispatch(bundles[i], script_base + i);
        });
    }
    for (auto& th : pool) th.join();
    return results;
}

}  // namespace coh
