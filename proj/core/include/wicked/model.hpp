#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "wicked/dataset.hpp"
#include "wicked/transform.hpp"

namespace wicked {

// Per-query metadata the evaluator attaches to each call. Remote backends
// ignore it; mocks use it to apply their decision rules deterministically.
struct QueryContext {
    std::string example_id;                // stable across variants
    std::vector<std::string> option_texts; // as presented, in order
};

class ModelHandle {
  public:
    virtual ~ModelHandle() = default;
    virtual std::string name() const = 0;

    // Sum of per-token conditional log-probabilities of `continuation` given
    // `prefix`; always <= 0 for real backends.
    virtual double score_continuation(const QueryContext& ctx,
                                      const std::string& prefix,
                                      const std::string& continuation) = 0;

    virtual std::string generate(const QueryContext& ctx, const std::string& prompt,
                                 int max_tokens,
                                 const std::vector<std::string>& stop) = 0;
};

// source_id -> gold answer text.
using Knowledge = std::unordered_map<std::string, std::string>;

enum class MockKind { kOracle, kStringMatcher, kUniformGuesser };

MockKind mock_kind_from_name(std::string_view name);

inline constexpr std::string_view kMockPickDomain = "mock-pick";

// Deterministic desk-scale stand-ins:
//   oracle          always picks the option matching its known gold text
//   string_matcher  picks the option matching its known gold text; when that
//                   text is absent from the presented options it falls back
//                   to a pseudo-random pick derived from (seed, id)
//   uniform_guesser always picks pseudo-randomly from (seed, id)
// Scores are 0.0 for the picked label and -1.0 for the rest. Generations end
// with "Answer: <letter>" for the picked label.
class MockModel : public ModelHandle {
  public:
    MockModel(MockKind kind, std::uint64_t seed, Knowledge knowledge = {});

    std::string name() const override;
    double score_continuation(const QueryContext& ctx, const std::string& prefix,
                              const std::string& continuation) override;
    std::string generate(const QueryContext& ctx, const std::string& prompt,
                         int max_tokens, const std::vector<std::string>& stop) override;

    // The decision rule itself; exposed so tests can cross-check scores.
    int chosen_index(const QueryContext& ctx) const;

  private:
    MockKind kind_;
    std::uint64_t seed_;
    Knowledge knowledge_;
};

// Gold texts of the dataset itself (oracle provisioning).
Knowledge knowledge_from_dataset(const Dataset& d);

// Gold texts of the variant's *source* benchmark, reconstructed from the
// audit records (string_matcher provisioning: it knows the original answer
// string, which may be absent from the variant).
Knowledge source_knowledge_from_variant(const Dataset& variant,
                                        const std::vector<WickedRecord>& records);

} // namespace wicked
