#include "wicked/openai_client.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "wicked/hash.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace wicked {

using json = nlohmann::json;

namespace {

struct ParsedUrl {
    std::string scheme_host_port; // what httplib::Client takes
    std::string path_prefix;      // "" or "/something", no trailing slash
};

ParsedUrl parse_base_url(const std::string& base) {
    auto scheme_end = base.find("://");
    if (scheme_end == std::string::npos) {
        throw RemoteError("endpoint base_url lacks a scheme: " + base);
    }
    auto path_start = base.find('/', scheme_end + 3);
    ParsedUrl out;
    if (path_start == std::string::npos) {
        out.scheme_host_port = base;
    } else {
        out.scheme_host_port = base.substr(0, path_start);
        out.path_prefix = base.substr(path_start);
    }
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/') {
        out.path_prefix.pop_back();
    }
    // A base ending in /v1 and request paths starting with /v1 would double up.
    if (out.path_prefix.size() >= 3 &&
        out.path_prefix.compare(out.path_prefix.size() - 3, 3, "/v1") == 0) {
        out.path_prefix.resize(out.path_prefix.size() - 3);
    }
    return out;
}

bool contains_ci(const std::string& haystack, const std::string& needle) {
    auto it = std::search(haystack.begin(), haystack.end(), needle.begin(),
                          needle.end(), [](char a, char b) {
                              return std::tolower(static_cast<unsigned char>(a)) ==
                                     std::tolower(static_cast<unsigned char>(b));
                          });
    return it != haystack.end();
}

bool looks_like_context_overflow(const std::string& body) {
    return contains_ci(body, "context length") ||
           contains_ci(body, "context_length") ||
           contains_ci(body, "maximum context") ||
           contains_ci(body, "context window");
}

struct SemaphoreGuard {
    std::counting_semaphore<4096>& sem;
    explicit SemaphoreGuard(std::counting_semaphore<4096>& s) : sem(s) {
        sem.acquire();
    }
    ~SemaphoreGuard() { sem.release(); }
};

} // namespace

OpenAiClient::OpenAiClient(ModelEndpoint endpoint, ReplayMode replay,
                           std::string replay_path)
    : endpoint_(std::move(endpoint)),
      replay_mode_(replay),
      replay_path_(std::move(replay_path)),
      in_flight_(std::max(1, std::min(endpoint_.max_in_flight, 4096))) {
    if (replay_mode_ != ReplayMode::kOff && replay_path_.empty()) {
        throw RemoteError("replay mode requires a replay log path");
    }
    if (replay_mode_ == ReplayMode::kReplay) {
        std::ifstream in(replay_path_, std::ios::binary);
        if (!in) throw RemoteError("cannot read replay log: " + replay_path_);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json j = json::parse(line);
            replay_responses_[j.at("key").get<std::uint64_t>()] =
                j.at("response").get<std::string>();
        }
    }
}

std::string OpenAiClient::post(const std::string& path, const std::string& body) {
    const std::uint64_t key = fnv1a64(body, fnv1a64(path));

    if (replay_mode_ == ReplayMode::kReplay) {
        std::lock_guard<std::mutex> lock(replay_mu_);
        auto it = replay_responses_.find(key);
        if (it == replay_responses_.end()) {
            throw RemoteError("replay log has no response for request to " + path);
        }
        return it->second;
    }

    SemaphoreGuard guard(in_flight_);
    ParsedUrl url = parse_base_url(endpoint_.base_url);

    httplib::Headers headers{{"Content-Type", "application/json"}};
    if (const char* api_key = std::getenv(endpoint_.api_key_env.c_str());
        api_key && *api_key) {
        headers.emplace("Authorization", std::string("Bearer ") + api_key);
    }

    std::string last_error;
    const int attempts = std::max(1, endpoint_.retry.max_attempts);
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        if (attempt > 1) {
            const auto& schedule = endpoint_.retry.backoff_ms;
            int delay = schedule.empty()
                            ? 0
                            : schedule[std::min<size_t>(static_cast<size_t>(attempt) - 2,
                                                        schedule.size() - 1)];
            if (delay > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }

        httplib::Client client(url.scheme_host_port);
        client.set_connection_timeout(0, endpoint_.timeout_ms * 1000LL);
        client.set_read_timeout(endpoint_.timeout_ms / 1000, (endpoint_.timeout_ms % 1000) * 1000);
        client.set_write_timeout(endpoint_.timeout_ms / 1000, (endpoint_.timeout_ms % 1000) * 1000);

        auto res = client.Post(url.path_prefix + path, headers, body, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 200) {
            if (replay_mode_ == ReplayMode::kRecord) {
                std::lock_guard<std::mutex> lock(replay_mu_);
                std::ofstream out(replay_path_, std::ios::binary | std::ios::app);
                if (out) {
                    json entry;
                    entry["key"] = key;
                    entry["path"] = path;
                    entry["request"] = body;
                    entry["response"] = res->body;
                    out << entry.dump() << '\n';
                }
            }
            return res->body;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        // Other 4xx: not retryable.
        if (looks_like_context_overflow(res->body)) {
            throw ContextOverflowError("context overflow from " + path + ": " +
                                       res->body);
        }
        throw RemoteError("HTTP " + std::to_string(res->status) + " from " + path +
                          ": " + res->body);
    }
    throw RemoteError("request to " + path + " failed after " +
                      std::to_string(attempts) + " attempts (" + last_error + ")");
}

namespace {

// Sum log-probabilities of the tokens that start at or after `boundary`
// (byte offset into the echoed prompt). Null entries (the first token has no
// conditional probability) are skipped.
double sum_from_offsets(const json& logprobs, size_t boundary, int& counted) {
    const auto& token_logprobs = logprobs.at("token_logprobs");
    const auto& offsets = logprobs.at("text_offset");
    double sum = 0.0;
    counted = 0;
    for (size_t i = 0; i < token_logprobs.size() && i < offsets.size(); ++i) {
        if (offsets[i].is_null() || token_logprobs[i].is_null()) continue;
        if (offsets[i].get<size_t>() < boundary) continue;
        sum += token_logprobs[i].get<double>();
        ++counted;
    }
    return sum;
}

double sum_from_index(const json& logprobs, size_t first, int& counted) {
    const auto& token_logprobs = logprobs.at("token_logprobs");
    double sum = 0.0;
    counted = 0;
    for (size_t i = first; i < token_logprobs.size(); ++i) {
        if (token_logprobs[i].is_null()) continue;
        sum += token_logprobs[i].get<double>();
        ++counted;
    }
    return sum;
}

const json& scoring_logprobs(const json& response) {
    const auto& choices = response.at("choices");
    if (choices.empty()) throw RemoteError("response has no choices");
    const auto& choice = choices.at(0);
    if (!choice.contains("logprobs") || choice["logprobs"].is_null() ||
        !choice["logprobs"].contains("token_logprobs")) {
        throw CapabilityError(
            "endpoint returned no per-token log-probabilities; echo scoring "
            "is unsupported");
    }
    return choice["logprobs"];
}

} // namespace

double OpenAiClient::score_continuation(const QueryContext& /*ctx*/,
                                        const std::string& prefix,
                                        const std::string& continuation) {
    if (continuation.empty()) {
        throw std::invalid_argument("continuation must be non-empty");
    }
    json req;
    req["model"] = endpoint_.model_name;
    req["prompt"] = prefix + continuation;
    req["max_tokens"] = 0;
    req["echo"] = true;
    req["logprobs"] = 0;
    req["temperature"] = 0;

    json response = json::parse(post("/v1/completions", req.dump()));
    const json& logprobs = scoring_logprobs(response);

    int counted = 0;
    double sum = 0.0;
    if (logprobs.contains("text_offset") && !logprobs["text_offset"].is_null()) {
        sum = sum_from_offsets(logprobs, prefix.size(), counted);
    } else {
        // Boundary by tokenizing the prefix alone.
        json probe = req;
        probe["prompt"] = prefix;
        json probe_response = json::parse(post("/v1/completions", probe.dump()));
        const json& probe_logprobs = scoring_logprobs(probe_response);
        size_t prefix_tokens = probe_logprobs.at("token_logprobs").size();
        sum = sum_from_index(logprobs, prefix_tokens, counted);
    }
    if (counted == 0) {
        throw CapabilityError("no continuation tokens found in echo response");
    }
    if (endpoint_.length_normalize) sum /= counted;
    return sum;
}

std::string OpenAiClient::generate(const QueryContext& /*ctx*/,
                                   const std::string& prompt, int max_tokens,
                                   const std::vector<std::string>& stop) {
    if (max_tokens < 1) throw std::invalid_argument("max_tokens must be >= 1");

    if (endpoint_.chat_generation) {
        json req;
        req["model"] = endpoint_.model_name;
        req["messages"] = json::array({json{{"role", "user"}, {"content", prompt}}});
        req["max_tokens"] = max_tokens;
        req["temperature"] = 0;
        if (!stop.empty()) req["stop"] = stop;
        json response = json::parse(post("/v1/chat/completions", req.dump()));
        return response.at("choices").at(0).at("message").at("content")
            .get<std::string>();
    }

    json req;
    req["model"] = endpoint_.model_name;
    req["prompt"] = prompt;
    req["max_tokens"] = max_tokens;
    req["temperature"] = 0;
    if (!stop.empty()) req["stop"] = stop;
    json response = json::parse(post("/v1/completions", req.dump()));
    return response.at("choices").at(0).at("text").get<std::string>();
}

std::string OpenAiClient::chat_complete(const std::string& user_message,
                                        int max_tokens) {
    json req;
    req["model"] = endpoint_.model_name;
    req["messages"] =
        json::array({json{{"role", "user"}, {"content", user_message}}});
    req["max_tokens"] = max_tokens;
    req["temperature"] = 0;
    json response = json::parse(post("/v1/chat/completions", req.dump()));
    return response.at("choices").at(0).at("message").at("content").get<std::string>();
}

} // namespace wicked
