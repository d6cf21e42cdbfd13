#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "coh/verbalize.hpp"

namespace coh {

struct GenerationParams {
    int max_tokens = 8000;
    double temperature = 0.0;
    double top_p = 1.0;
};

enum class BackendKind : uint8_t { http_chat, scripted_mock, recency_mock, oracle_mock };

struct BackendConfig {
    BackendKind kind = BackendKind::recency_mock;

    // http_chat
    std::string endpoint;                       // base URL, e.g. http://host:port
    std::string path = "/v1/chat/completions";  // chat route
    std::string model;
    std::string auth_env;  // env var holding the bearer token
    double timeout_s = 120.0;
    int retries = 3;
    double backoff_initial_s = 1.0;  // doubles per attempt

    // scripted_mock
    std::string script_path;                 // JSONL, one {"reply": "..."} per line
    std::vector<std::string> script_replies; // alternative in-process source

    // oracle_mock
    double hit_probability = 1.0;
    uint64_t seed = 0;
    // entity surfaces drawn for the miss case
    std::shared_ptr<const std::vector<std::string>> entity_pool;
};

struct Transcript {
    std::string request;
    std::string response;
    double latency_ms = 0;
    BackendKind backend = BackendKind::recency_mock;
    int attempts = 0;
    // steady-clock stamps, for ordering assertions
    uint64_t started_ns = 0;
    uint64_t finished_ns = 0;
};

struct CompletionResult {
    std::string text;
    Transcript transcript;
    std::optional<std::string> error;  // transport/protocol failure, in-slot

    bool ok() const { return !error.has_value(); }
};

// Dispatches prompt bundles to the configured backend. Mock replies are
// pure functions of (bundle, config, seed), so concurrent schedules cannot
// change results; the scripted mock consumes its script in call order.
class Gateway {
  public:
    Gateway(BackendConfig config, GenerationParams params, std::string transcript_log_path = "");

    CompletionResult complete(const PromptBundle& bundle);
    // Responses align positionally with inputs; at most max_in_flight
    // requests are outstanding at once and per-item errors stay in-slot.
    std::vector<CompletionResult> complete_batch(const std::vector<PromptBundle>& bundles,
                                                 int max_in_flight);

    uint64_t call_count() const { return calls_.load(); }
    const BackendConfig& config() const { return config_; }

  private:
    CompletionResult dispatch(const PromptBundle& bundle, size_t script_index);
    CompletionResult run_http(const PromptBundle& bundle);
    std::string scripted_reply(size_t index) const;
    std::string recency_reply(const PromptBundle& bundle) const;
    std::string oracle_reply(const PromptBundle& bundle) const;
    void log_transcript(const CompletionResult& r);

    BackendConfig config_;
    GenerationParams params_;
    std::string log_path_;
    std::mutex log_mutex_;
    std::atomic<uint64_t> calls_{0};
    std::atomic<size_t> script_cursor_{0};
    std::vector<std::string> script_;
};

}  // namespace coh
