#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "coh/gateway.hpp"
#include "fixtures.hpp"

using namespace coh;
using namespace coh::test;

namespace {

PromptBundle select_bundle(int item_count, int n) {
    PromptBundle b;
    b.step_kind = StepKind::select_first_order;
    b.items.resize(static_cast<size_t>(item_count));
    b.select_n = n;
    b.text = "select prompt over " + std::to_string(item_count) + " items";
    return b;
}

PromptBundle answer_bundle(std::vector<std::string> objects, std::string gt = "",
                           std::string text = "answer prompt") {
    PromptBundle b;
    b.step_kind = StepKind::answer;
    b.items.resize(objects.size());
    b.candidate_objects = std::move(objects);
    b.ground_truth_name = std::move(gt);
    b.text = std::move(text);
    return b;
}

struct FlakyServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::atomic<int> requests{0};
    int failures_before_success = 0;

    explicit FlakyServer(int failures) : failures_before_success(failures) {
        server.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                   httplib::Response& res) {
            const int n = requests.fetch_add(1);
            if (n < failures_before_success) {
                res.status = 500;
                res.set_content("backend hiccup", "text/plain");
                return;
            }
            nlohmann::json body = nlohmann::json::parse(req.body);
            nlohmann::json reply = {
                {"choices",
                 nlohmann::json::array(
                     {{{"message",
                        {{"role", "assistant"},
                         {"content", "echo: " + body["model"].get<std::string>()}}}}})},
            };
            res.set_content(reply.dump(), "application/json");
        });
        server.Post("/auth-check", [](const httplib::Request& req, httplib::Response& res) {
            nlohmann::json reply = {
                {"choices",
                 nlohmann::json::array(
                     {{{"message",
                        {{"role", "assistant"},
                         {"content", req.get_header_value("Authorization")}}}}})},
            };
            res.set_content(reply.dump(), "application/json");
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~FlakyServer() {
        server.stop();
        thread.join();
    }
};

}  // namespace

TEST_CASE("scripted mock consumes replies in call order and errors in-slot when exhausted") {
    BackendConfig cfg;
    cfg.kind = BackendKind::scripted_mock;
    cfg.script_replies = {"first", "second"};
    Gateway gw(cfg, {});
    auto b = select_bundle(3, 2);
    CHECK(gw.complete(b).text == "first");
    CHECK(gw.complete(b).text == "second");
    auto third = gw.complete(b);
    CHECK_FALSE(third.ok());
    CHECK(third.error->find("exhausted") != std::string::npos);
    CHECK(gw.call_count() == 3);
}

TEST_CASE("scripted mock loads JSONL scripts from disk") {
    TempDir dir;
    BackendConfig cfg;
    cfg.kind = BackendKind::scripted_mock;
    cfg.script_path = dir.file("script.jsonl",
                               "{\"reply\": \"alpha\"}\n{\"reply\": \"beta\"}\n");
    Gateway gw(cfg, {});
    auto b = select_bundle(3, 2);
    CHECK(gw.complete(b).text == "alpha");
    CHECK(gw.complete(b).text == "beta");

    BackendConfig bad = cfg;
    bad.script_path = dir.file("bad.jsonl", "not json\n");
    CHECK_THROWS_AS(Gateway(bad, {}), Error);
    bad.script_path = dir.path("missing.jsonl");
    CHECK_THROWS_AS(Gateway(bad, {}), Error);
}

TEST_CASE("scripted batch replies align with input positions under any concurrency") {
    std::vector<std::string> replies;
    for (int i = 0; i < 40; ++i) replies.push_back("reply " + std::to_string(i));
    std::vector<PromptBundle> bundles;
    for (int i = 0; i < 40; ++i) bundles.push_back(select_bundle(3, 2));

    for (int workers : {1, 4, 16}) {
        BackendConfig cfg;
        cfg.kind = BackendKind::scripted_mock;
        cfg.script_replies = replies;
        Gateway gw(cfg, {});
        auto results = gw.complete_batch(bundles, workers);
        REQUIRE(results.size() == 40);
        for (int i = 0; i < 40; ++i) CHECK(results[static_cast<size_t>(i)].text == replies[static_cast<size_t>(i)]);
    }
}

TEST_CASE("recency mock emits leading ids, deduped tail objects, and denies leakage") {
    BackendConfig cfg;
    cfg.kind = BackendKind::recency_mock;
    Gateway gw(cfg, {});

    CHECK(gw.complete(select_bundle(5, 3)).text == "0, 1, 2");
    CHECK(gw.complete(select_bundle(2, 30)).text == "0, 1");

    auto ans = gw.complete(answer_bundle({"A", "B", "A", "C"}));
    CHECK(ans.text == "Possible answers:\n1. A\n2. B\n3. C\n");

    PromptBundle leak;
    leak.step_kind = StepKind::leakage;
    CHECK(gw.complete(leak).text == "No.");
}

TEST_CASE("oracle mock is a pure function of prompt text and seed") {
    auto pool = std::make_shared<std::vector<std::string>>();
    for (int i = 0; i < 20; ++i) pool->push_back("Entity_" + std::to_string(i));

    BackendConfig cfg;
    cfg.kind = BackendKind::oracle_mock;
    cfg.hit_probability = 0.5;
    cfg.seed = 7;
    cfg.entity_pool = pool;

    std::vector<PromptBundle> bundles;
    for (int i = 0; i < 60; ++i)
        bundles.push_back(answer_bundle({"X"}, "Entity_3", "prompt " + std::to_string(i)));

    Gateway a(cfg, {});
    Gateway b(cfg, {});
    auto ra = a.complete_batch(bundles, 16);
    auto rb = b.complete_batch(bundles, 1);  // different schedule, same replies
    REQUIRE(ra.size() == rb.size());
    for (size_t i = 0; i < ra.size(); ++i) CHECK(ra[i].text == rb[i].text);

    // a different seed changes at least one reply
    BackendConfig other = cfg;
    other.seed = 8;
    Gateway c(other, {});
    auto rc = c.complete_batch(bundles, 4);
    bool any_diff = false;
    for (size_t i = 0; i < ra.size(); ++i) any_diff |= ra[i].text != rc[i].text;
    CHECK(any_diff);
}

TEST_CASE("oracle mock hit and miss behavior at the endpoints") {
    auto pool = std::make_shared<std::vector<std::string>>(
        std::vector<std::string>{"Right", "Wrong_A", "Wrong_B"});
    BackendConfig cfg;
    cfg.kind = BackendKind::oracle_mock;
    cfg.entity_pool = pool;

    cfg.hit_probability = 1.0;
    Gateway always(cfg, {});
    for (int i = 0; i < 20; ++i) {
        auto r = always.complete(answer_bundle({"X"}, "Right", "p" + std::to_string(i)));
        CHECK(r.text == "Possible answers:\n1. Right\n");
    }

    cfg.hit_probability = 0.0;
    Gateway never(cfg, {});
    for (int i = 0; i < 20; ++i) {
        auto r = never.complete(answer_bundle({"X"}, "Right", "p" + std::to_string(i)));
        CHECK(r.text != "Possible answers:\n1. Right\n");
        CHECK(r.text.find("Possible answers:\n1. Wrong_") == 0);
    }

    // select steps defer to recency regardless of probability
    CHECK(never.complete(select_bundle(4, 2)).text == "0, 1");

    cfg.hit_probability = 1.5;
    CHECK_THROWS_AS(Gateway(cfg, {}), Error);
}

TEST_CASE("sequential batch transcripts do not overlap in time") {
    BackendConfig cfg;
    cfg.kind = BackendKind::recency_mock;
    Gateway gw(cfg, {});
    std::vector<PromptBundle> bundles(8, select_bundle(3, 2));
    auto results = gw.complete_batch(bundles, 1);
    for (size_t i = 1; i < results.size(); ++i)
        CHECK(results[i].transcript.started_ns >= results[i - 1].transcript.finished_ns);
    CHECK_THROWS_AS(gw.complete_batch(bundles, 0), Error);
}

TEST_CASE("transcript log captures one JSONL line per call") {
    TempDir dir;
    BackendConfig cfg;
    cfg.kind = BackendKind::recency_mock;
    Gateway gw(cfg, {}, dir.path("log.jsonl"));
    gw.complete_batch(std::vector<PromptBundle>(5, select_bundle(3, 2)), 4);

    std::ifstream in(dir.path("log.jsonl"));
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
        auto j = nlohmann::json::parse(line);
        CHECK(j["response"] == "0, 1");
        CHECK(j["attempts"] == 1);
        ++lines;
    }
    CHECK(lines == 5);
}

TEST_CASE("http backend retries 5xx with backoff and then succeeds") {
    FlakyServer srv(2);
    BackendConfig cfg;
    cfg.kind = BackendKind::http_chat;
    cfg.endpoint = "http://127.0.0.1:" + std::to_string(srv.port);
    cfg.model = "test-model";
    cfg.retries = 3;
    cfg.backoff_initial_s = 0.01;
    Gateway gw(cfg, {});

    auto r = gw.complete(select_bundle(3, 2));
    REQUIRE(r.ok());
    CHECK(r.text == "echo: test-model");
    CHECK(r.transcript.attempts == 3);
    CHECK(srv.requests.load() == 3);
}

TEST_CASE("http backend gives up after exhausting retries") {
    FlakyServer srv(100);
    BackendConfig cfg;
    cfg.kind = BackendKind::http_chat;
    cfg.endpoint = "http://127.0.0.1:" + std::to_string(srv.port);
    cfg.retries = 2;
    cfg.backoff_initial_s = 0.01;
    Gateway gw(cfg, {});

    auto r = gw.complete(select_bundle(3, 2));
    REQUIRE_FALSE(r.ok());
    CHECK(r.error->find("retries exhausted") != std::string::npos);
    CHECK(srv.requests.load() == 3);  // initial try + 2 retries
}

TEST_CASE("http backend sends the bearer token from the configured env var") {
    FlakyServer srv(0);
    ::setenv("COH_TEST_TOKEN", "sekrit", 1);
    BackendConfig cfg;
    cfg.kind = BackendKind::http_chat;
    cfg.endpoint = "http://127.0.0.1:" + std::to_string(srv.port);
    cfg.path = "/auth-check";
    cfg.auth_env = "COH_TEST_TOKEN";
    Gateway gw(cfg, {});
    auto r = gw.complete(select_bundle(3, 2));
    REQUIRE(r.ok());
    CHECK(r.text == "Bearer sekrit");
    ::unsetenv("COH_TEST_TOKEN");
}
