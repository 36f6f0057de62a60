#pragma once

#include <cstdint>
#include <mutex>
#include <semaphore>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "wicked/model.hpp"

namespace wicked {

struct RetryPolicy {
    int max_attempts = 3;
    std::vector<int> backoff_ms = {250, 1000, 4000}; // clamped to last entry
};

struct ModelEndpoint {
    std::string base_url; // e.g. http://localhost:8000 or http://host/v1
    std::string model_name;
    int max_in_flight = 8;
    RetryPolicy retry;
    int timeout_ms = 120000;
    std::string api_key_env = "OPENAI_API_KEY"; // name only; value never stored
    bool chat_generation = false;  // generate() via chat/completions
    bool length_normalize = false; // divide summed logprob by token count
};

struct RemoteError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The endpoint cannot return per-token log-probabilities.
struct CapabilityError : RemoteError {
    using RemoteError::RemoteError;
};

// The prompt exceeded the model's context window; not retryable.
struct ContextOverflowError : RemoteError {
    using RemoteError::RemoteError;
};

enum class ReplayMode {
    kOff,
    kRecord, // mirror every request/response pair to the replay log
    kReplay  // serve responses from the log; any miss is an error
};

// OpenAI-compatible completion client. Scoring echoes the prompt with
// per-token logprobs and sums only the continuation's tokens; the boundary
// comes from the response's text_offset array, or, when the server omits it,
// from tokenizing the prefix alone with a second echo call.
class OpenAiClient : public ModelHandle {
  public:
    explicit OpenAiClient(ModelEndpoint endpoint,
                          ReplayMode replay = ReplayMode::kOff,
                          std::string replay_path = {});

    std::string name() const override { return endpoint_.model_name; }

    double score_continuation(const QueryContext& ctx, const std::string& prefix,
                              const std::string& continuation) override;

    std::string generate(const QueryContext& ctx, const std::string& prompt,
                         int max_tokens, const std::vector<std::string>& stop) override;

    // Deterministic (temperature-0) chat completion; annotation plumbing.
    std::string chat_complete(const std::string& user_message, int max_tokens);

    const ModelEndpoint& endpoint() const { return endpoint_; }

  private:
    std::string post(const std::string& path, const std::string& body);

    ModelEndpoint endpoint_;
    ReplayMode replay_mode_;
    std::string replay_path_;
    std::unordered_map<std::uint64_t, std::string> replay_responses_;
    std::mutex replay_mu_;
    std::counting_semaphore<4096> in_flight_;
};

} // namespace wicked
