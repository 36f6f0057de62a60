#include "stub_server.hpp"

#include <thread>
#include <vector>

#include "wicked/hash.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace wicked::testsupport {

using json = nlohmann::json;

char stub_letter(const std::string& prompt) {
    return static_cast<char>('A' + mix64(fnv1a64(prompt)) % 4);
}

double stub_logprob(const std::string& token, size_t offset) {
    std::uint64_t h = mix64(fnv1a64(token) ^ (offset * 0x9E3779B97F4A7C15ull));
    return -0.25 - static_cast<double>(h % 4000) / 1000.0;
}

namespace {

bool is_blank(char c) { return c == ' ' || c == '\t' || c == '\n'; }

struct Token {
    size_t offset;
    std::string text;
};

std::vector<Token> run_tokens(const std::string& text) {
    std::vector<Token> out;
    size_t i = 0;
    while (i < text.size()) {
        size_t j = i;
        bool blank = is_blank(text[i]);
        while (j < text.size() && is_blank(text[j]) == blank) ++j;
        out.push_back({i, text.substr(i, j - i)});
        i = j;
    }
    return out;
}

json echo_choice(const std::string& prompt, bool with_offsets) {
    auto tokens = run_tokens(prompt);
    json names = json::array();
    json lps = json::array();
    json offsets = json::array();
    for (size_t i = 0; i < tokens.size(); ++i) {
        names.push_back(tokens[i].text);
        if (i == 0) {
            lps.push_back(nullptr); // first token has no conditional probability
        } else {
            lps.push_back(stub_logprob(tokens[i].text, tokens[i].offset));
        }
        offsets.push_back(tokens[i].offset);
    }
    json logprobs;
    logprobs["tokens"] = names;
    logprobs["token_logprobs"] = lps;
    if (with_offsets) logprobs["text_offset"] = offsets;

    json choice;
    choice["text"] = prompt;
    choice["index"] = 0;
    choice["finish_reason"] = "length";
    choice["logprobs"] = logprobs;
    return choice;
}

std::string derived_generation(const std::string& prompt) {
    return std::string("Working through the options one by one. Answer: ") +
           stub_letter(prompt);
}

} // namespace

struct StubServer::Impl {
    httplib::Server server;
    std::thread thread;
    int port = 0;

    mutable std::mutex mu;
    Behavior behavior;
    std::atomic<int> requests{0};
    std::string last_body;
    std::string last_auth;

    // Returns true when this request was consumed by failure injection.
    bool maybe_fail(httplib::Response& res) {
        std::lock_guard<std::mutex> lock(mu);
        if (behavior.fail_first > 0) {
            --behavior.fail_first;
            res.status = behavior.fail_status;
            res.set_content(behavior.fail_body, "application/json");
            return true;
        }
        return false;
    }

    void note(const httplib::Request& req) {
        requests.fetch_add(1);
        std::lock_guard<std::mutex> lock(mu);
        last_body = req.body;
        last_auth = req.get_header_value("Authorization");
    }
};

StubServer::StubServer() : impl_(std::make_unique<Impl>()) {
    Impl* impl = impl_.get();

    impl->server.Post("/v1/completions", [impl](const httplib::Request& req,
                                                httplib::Response& res) {
        impl->note(req);
        if (impl->maybe_fail(res)) return;

        json body = json::parse(req.body);
        const auto prompt = body.at("prompt").get<std::string>();
        const int max_tokens = body.value("max_tokens", 16);
        const bool echo = body.value("echo", false);

        Behavior behavior;
        {
            std::lock_guard<std::mutex> lock(impl->mu);
            behavior = impl->behavior;
        }

        json reply;
        reply["object"] = "text_completion";
        if (echo && max_tokens == 0) {
            if (!behavior.logprobs) {
                json choice;
                choice["text"] = prompt;
                choice["index"] = 0;
                choice["logprobs"] = nullptr;
                reply["choices"] = json::array({choice});
            } else {
                reply["choices"] =
                    json::array({echo_choice(prompt, behavior.text_offset)});
            }
        } else {
            json choice;
            choice["text"] = derived_generation(prompt);
            choice["index"] = 0;
            choice["finish_reason"] = "stop";
            reply["choices"] = json::array({choice});
        }
        res.set_content(reply.dump(), "application/json");
    });

    impl->server.Post("/v1/chat/completions", [impl](const httplib::Request& req,
                                                     httplib::Response& res) {
        impl->note(req);
        if (impl->maybe_fail(res)) return;

        json body = json::parse(req.body);
        std::string user;
        for (const auto& message : body.at("messages")) {
            if (message.value("role", "") == "user") {
                user = message.at("content").get<std::string>();
            }
        }

        Behavior behavior;
        {
            std::lock_guard<std::mutex> lock(impl->mu);
            behavior = impl->behavior;
        }

        std::string content;
        if (!behavior.chat_reply.empty()) {
            content = behavior.chat_reply;
        } else if (user.find("Class:") != std::string::npos) {
            content = mix64(fnv1a64(user)) % 2 ? "1" : "0";
        } else {
            content = derived_generation(user);
        }

        json message;
        message["role"] = "assistant";
        message["content"] = content;
        json choice;
        choice["message"] = message;
        choice["finish_reason"] = "stop";
        json reply;
        reply["object"] = "chat.completion";
        reply["choices"] = json::array({choice});
        res.set_content(reply.dump(), "application/json");
    });

    impl->port = impl->server.bind_to_any_port("127.0.0.1");
    if (impl->port <= 0) throw std::runtime_error("stub server could not bind");
    impl->thread = std::thread([impl] { impl->server.listen_after_bind(); });
    impl->server.wait_until_ready();
}

StubServer::~StubServer() {
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

std::string StubServer::base_url() const {
    return "http://127.0.0.1:" + std::to_string(impl_->port);
}

void StubServer::set_behavior(const Behavior& b) {
    std::lock_guard<std::mutex> lock(impl_->mu);
    impl_->behavior = b;
}

int StubServer::request_count() const { return impl_->requests.load(); }

std::string StubServer::last_body() const {
    std::lock_guard<std::mutex> lock(impl_->mu);
    return impl_->last_body;
}

std::string StubServer::last_auth() const {
    std::lock_guard<std::mutex> lock(impl_->mu);
    return impl_->last_auth;
}

} // namespace wicked::testsupport
