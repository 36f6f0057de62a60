#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include <nlohmann/json.hpp>

#include "stub_server.hpp"
#include "test_support.hpp"
#include "wicked/hash.hpp"
#include "wicked/model.hpp"
#include "wicked/openai_client.hpp"

using namespace wicked;
using testsupport::StubServer;
using testsupport::TempDir;
using testsupport::stub_logprob;

namespace {

QueryContext ctx_of(const std::string& id, std::vector<std::string> options) {
    return QueryContext{id, std::move(options)};
}

ModelEndpoint endpoint_for(const StubServer& server) {
    ModelEndpoint endpoint;
    endpoint.base_url = server.base_url();
    endpoint.model_name = "stub-model";
    endpoint.timeout_ms = 5000;
    endpoint.retry.backoff_ms = {1, 1, 1}; // keep tests fast
    return endpoint;
}

} // namespace

TEST_CASE("oracle picks its known gold and scores it 0") {
    Knowledge k{{"q1", "Hydrogen"}};
    MockModel oracle(MockKind::kOracle, 0, k);
    auto ctx = ctx_of("q1", {"Helium", "Hydrogen", "Lithium"});
    CHECK(oracle.chosen_index(ctx) == 1);
    CHECK(oracle.score_continuation(ctx, "prefix", " B") == 0.0);
    CHECK(oracle.score_continuation(ctx, "prefix", " A") == -1.0);
    CHECK(oracle.score_continuation(ctx, "prefix", " C") == -1.0);
}

TEST_CASE("oracle without knowledge refuses to answer") {
    MockModel oracle(MockKind::kOracle, 0, {});
    auto ctx = ctx_of("q1", {"a", "b"});
    CHECK_THROWS_AS(oracle.chosen_index(ctx), std::out_of_range);

    Knowledge k{{"q1", "missing text"}};
    MockModel blind(MockKind::kOracle, 0, k);
    CHECK_THROWS_AS(blind.chosen_index(ctx), std::out_of_range);
}

TEST_CASE("string matcher matches when it can, guesses when it cannot") {
    Knowledge k{{"q1", "Hydrogen"}, {"q2", "Oxygen"}};
    MockModel matcher(MockKind::kStringMatcher, 11, k);

    auto present = ctx_of("q1", {"Helium", "Hydrogen", "None of the above"});
    CHECK(matcher.chosen_index(present) == 1);

    auto absent = ctx_of("q2", {"Helium", "Hydrogen", "None of the above"});
    SeededStream rng(11, kMockPickDomain, "q2");
    auto expected = static_cast<int>(rng.next_below(3));
    CHECK(matcher.chosen_index(absent) == expected);
    CHECK(matcher.chosen_index(absent) == expected); // stable across calls
}

TEST_CASE("uniform guesser is deterministic per id and roughly uniform") {
    MockModel guesser(MockKind::kUniformGuesser, 7, {});
    std::vector<int> counts(4, 0);
    for (int i = 0; i < 10000; ++i) {
        auto ctx = ctx_of("s" + std::to_string(i), {"a", "b", "c", "d"});
        int pick = guesser.chosen_index(ctx);
        CHECK(guesser.chosen_index(ctx) == pick);
        counts[static_cast<size_t>(pick)] += 1;
    }
    for (int c : counts) {
        CHECK(std::abs(c / 10000.0 - 0.25) <= 0.02);
    }
}

TEST_CASE("mock scores reject continuations that name no option") {
    MockModel guesser(MockKind::kUniformGuesser, 1, {});
    auto ctx = ctx_of("x", {"a", "b"});
    CHECK_THROWS_AS(guesser.score_continuation(ctx, "p", " Z"),
                    std::invalid_argument);
    CHECK_THROWS_AS(guesser.score_continuation(ctx, "p", " please"),
                    std::invalid_argument);
}

TEST_CASE("mock generations end with the chosen letter") {
    Knowledge k{{"q1", "Hydrogen"}};
    MockModel oracle(MockKind::kOracle, 0, k);
    auto ctx = ctx_of("q1", {"Helium", "Hydrogen"});
    auto text = oracle.generate(ctx, "prompt", 64, {});
    CHECK(text.substr(text.size() - 9) == "Answer: B");
}

TEST_CASE("knowledge providers read gold texts from the right place") {
    Dataset d = testsupport::synthetic_dataset(4, 4, 2);
    auto k = knowledge_from_dataset(d);
    CHECK(k.size() == 6);
    CHECK(k.at("s1") == d.examples[1].choices[1]);
    CHECK(k.at("p0") == d.fewshot_pool[0].choices[0]);

    auto labels = testsupport::all_sca_labels(d);
    auto v = make_variant(d, 3, labels);
    auto source = source_knowledge_from_variant(v.dataset, v.records);
    for (const auto& e : d.examples) {
        CHECK(source.at(e.id) == e.choices[static_cast<size_t>(e.gold_index)]);
    }
}

TEST_CASE("echo scoring sums exactly the continuation tokens") {
    StubServer server;
    OpenAiClient client(endpoint_for(server));

    const std::string prefix = "Question one\nAnswer:";
    const std::string continuation = " B";
    // The stub tokenizes into runs; the continuation contributes " " at
    // offset 20 and "B" at offset 21.
    double expected = stub_logprob(" ", prefix.size()) +
                      stub_logprob("B", prefix.size() + 1);
    double got = client.score_continuation({}, prefix, continuation);
    CHECK(got == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("scores are comparable across options and order the argmax") {
    StubServer server;
    OpenAiClient client(endpoint_for(server));
    const std::string prefix = "Some question\nA. x\nB. y\nAnswer:";
    double a = client.score_continuation({}, prefix, " A");
    double b = client.score_continuation({}, prefix, " B");
    CHECK(a != b); // hash-derived, almost surely distinct
    CHECK(a < 0);
    CHECK(b < 0);
}

TEST_CASE("missing text_offset falls back to prefix token counting") {
    StubServer server;
    StubServer::Behavior behavior;
    behavior.text_offset = false;
    server.set_behavior(behavior);

    OpenAiClient client(endpoint_for(server));
    const std::string prefix = "Count my tokens\nAnswer:";
    const std::string continuation = " C";
    double expected = stub_logprob(" ", prefix.size()) +
                      stub_logprob("C", prefix.size() + 1);
    int before = server.request_count();
    double got = client.score_continuation({}, prefix, continuation);
    CHECK(got == doctest::Approx(expected).epsilon(1e-12));
    CHECK(server.request_count() == before + 2); // main call plus probe
}

TEST_CASE("an endpoint without logprobs raises a capability error") {
    StubServer server;
    StubServer::Behavior behavior;
    behavior.logprobs = false;
    server.set_behavior(behavior);

    OpenAiClient client(endpoint_for(server));
    CHECK_THROWS_AS(client.score_continuation({}, "prefix", " A"),
                    CapabilityError);
}

TEST_CASE("transient failures are retried transparently") {
    StubServer server;
    StubServer::Behavior behavior;
    behavior.fail_first = 2;
    behavior.fail_status = 500;
    server.set_behavior(behavior);

    OpenAiClient client(endpoint_for(server));
    int before = server.request_count();
    CHECK_NOTHROW(client.score_continuation({}, "some prefix", " A"));
    CHECK(server.request_count() == before + 3);

    behavior.fail_first = 1;
    behavior.fail_status = 429;
    server.set_behavior(behavior);
    CHECK_NOTHROW(client.generate({}, "say something", 16, {}));
}

TEST_CASE("persistent failures surface after the retry budget") {
    StubServer server;
    StubServer::Behavior behavior;
    behavior.fail_first = 99;
    server.set_behavior(behavior);

    auto endpoint = endpoint_for(server);
    endpoint.retry.max_attempts = 2;
    OpenAiClient client(endpoint);
    int before = server.request_count();
    CHECK_THROWS_AS(client.generate({}, "hello", 8, {}), RemoteError);
    CHECK(server.request_count() == before + 2);
}

TEST_CASE("a context-length 4xx maps to ContextOverflowError") {
    StubServer server;
    StubServer::Behavior behavior;
    behavior.fail_first = 5;
    behavior.fail_status = 400;
    behavior.fail_body =
        R"({"error":{"message":"This model's maximum context length is 4096 tokens."}})";
    server.set_behavior(behavior);

    OpenAiClient client(endpoint_for(server));
    CHECK_THROWS_AS(client.generate({}, "very long prompt", 8, {}),
                    ContextOverflowError);
}

TEST_CASE("other 4xx responses are not retried") {
    StubServer server;
    StubServer::Behavior behavior;
    behavior.fail_first = 5;
    behavior.fail_status = 404;
    behavior.fail_body = R"({"error":{"message":"model not found"}})";
    server.set_behavior(behavior);

    OpenAiClient client(endpoint_for(server));
    int before = server.request_count();
    CHECK_THROWS_AS(client.generate({}, "x", 8, {}), RemoteError);
    CHECK(server.request_count() == before + 1);
}

TEST_CASE("generation requests carry the token budget and stop strings") {
    StubServer server;
    OpenAiClient client(endpoint_for(server));
    client.generate({}, "finish this", 4096, {"\n\n"});

    auto body = nlohmann::json::parse(server.last_body());
    CHECK(body.at("max_tokens") == 4096);
    CHECK(body.at("temperature") == 0);
    CHECK(body.at("stop") == nlohmann::json::array({"\n\n"}));
    CHECK(body.at("model") == "stub-model");

    CHECK_THROWS_AS(client.generate({}, "x", 0, {}), std::invalid_argument);
}

TEST_CASE("scoring requests are echo-only completions") {
    StubServer server;
    OpenAiClient client(endpoint_for(server));
    client.score_continuation({}, "prefix", " A");

    auto body = nlohmann::json::parse(server.last_body());
    CHECK(body.at("max_tokens") == 0);
    CHECK(body.at("echo") == true);
    CHECK(body.at("logprobs") == 0);
    CHECK(body.at("prompt") == "prefix A");
}

TEST_CASE("chat generation goes through the chat endpoint") {
    StubServer server;
    auto endpoint = endpoint_for(server);
    endpoint.chat_generation = true;
    OpenAiClient client(endpoint);

    auto text = client.generate({}, "What is 2+2?\nA. 3\nB. 4\n", 64, {});
    CHECK(text.find("Answer:") != std::string::npos);

    auto body = nlohmann::json::parse(server.last_body());
    CHECK(body.contains("messages"));
}

TEST_CASE("chat_complete returns the assistant text verbatim") {
    StubServer server;
    StubServer::Behavior behavior;
    behavior.chat_reply = "1";
    server.set_behavior(behavior);

    OpenAiClient client(endpoint_for(server));
    CHECK(client.chat_complete("classify this", 4) == "1");
    auto body = nlohmann::json::parse(server.last_body());
    CHECK(body.at("max_tokens") == 4);
}

TEST_CASE("the api key comes from the configured env var") {
    StubServer server;
    auto endpoint = endpoint_for(server);
    endpoint.api_key_env = "WICKED_TEST_KEY";
    ::setenv("WICKED_TEST_KEY", "sk-test-123", 1);
    OpenAiClient client(endpoint);
    client.generate({}, "ping", 8, {});
    CHECK(server.last_auth() == "Bearer sk-test-123");
    ::unsetenv("WICKED_TEST_KEY");

    // Without the variable set, no Authorization header goes out.
    OpenAiClient anon(endpoint);
    anon.generate({}, "ping again", 8, {});
    CHECK(server.last_auth().empty());
}

TEST_CASE("a base url with a /v1 suffix is not doubled") {
    StubServer server;
    auto endpoint = endpoint_for(server);
    endpoint.base_url = server.base_url() + "/v1";
    OpenAiClient client(endpoint);
    CHECK_NOTHROW(client.generate({}, "ping", 8, {}));

    endpoint.base_url = server.base_url() + "/v1/";
    OpenAiClient slash(endpoint);
    CHECK_NOTHROW(slash.generate({}, "ping", 8, {}));
}

TEST_CASE("record and replay round-trips without a live server") {
    TempDir tmp;
    auto log = tmp.file("replay.jsonl");
    double recorded = 0.0;
    {
        StubServer server;
        OpenAiClient client(endpoint_for(server), ReplayMode::kRecord, log);
        recorded = client.score_continuation({}, "stable prefix", " B");
    }
    // Server is gone; the replay log answers instead.
    ModelEndpoint dead;
    dead.base_url = "http://127.0.0.1:9"; // nothing listens here
    dead.model_name = "stub-model";
    OpenAiClient replay(dead, ReplayMode::kReplay, log);
    CHECK(replay.score_continuation({}, "stable prefix", " B") == recorded);
    CHECK_THROWS_AS(replay.score_continuation({}, "unseen prefix", " B"),
                    RemoteError);
}

TEST_CASE("length normalization divides by the continuation token count") {
    StubServer server;
    auto endpoint = endpoint_for(server);
    OpenAiClient raw(endpoint);
    endpoint.length_normalize = true;
    OpenAiClient normed(endpoint);

    const std::string prefix = "Question\nAnswer:";
    double sum = raw.score_continuation({}, prefix, " D");
    double avg = normed.score_continuation({}, prefix, " D");
    CHECK(avg == doctest::Approx(sum / 2.0).epsilon(1e-12)); // " " and "D"
}
