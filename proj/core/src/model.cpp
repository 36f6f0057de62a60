#include "wicked/model.hpp"

#include <sstream>
#include <stdexcept>

#include "wicked/hash.hpp"
#include "wicked/prompting.hpp"

namespace wicked {

MockKind mock_kind_from_name(std::string_view name) {
    if (name == "oracle") return MockKind::kOracle;
    if (name == "string_matcher") return MockKind::kStringMatcher;
    if (name == "uniform_guesser") return MockKind::kUniformGuesser;
    throw std::runtime_error("unknown mock kind: " + std::string(name));
}

MockModel::MockModel(MockKind kind, std::uint64_t seed, Knowledge knowledge)
    : kind_(kind), seed_(seed), knowledge_(std::move(knowledge)) {}

std::string MockModel::name() const {
    switch (kind_) {
    case MockKind::kOracle: return "mock:oracle";
    case MockKind::kStringMatcher: return "mock:string_matcher";
    case MockKind::kUniformGuesser: return "mock:uniform_guesser";
    }
    return "mock:?";
}

namespace {

int find_option(const std::vector<std::string>& options, const std::string& text) {
    for (size_t i = 0; i < options.size(); ++i) {
        if (options[i] == text) return static_cast<int>(i);
    }
    return -1;
}

int parse_letter_continuation(const std::string& continuation, size_t n_options) {
    for (char c : continuation) {
        if (c == ' ') continue;
        if (c >= 'A' && c < static_cast<char>('A' + n_options)) return c - 'A';
        break;
    }
    throw std::invalid_argument("mock scored a non-label continuation: \"" +
                                continuation + "\"");
}

} // namespace

int MockModel::chosen_index(const QueryContext& ctx) const {
    const auto n = static_cast<std::uint64_t>(ctx.option_texts.size());
    if (n == 0) throw std::invalid_argument("query has no options");

    auto random_pick = [&] {
        SeededStream rng(seed_, kMockPickDomain, ctx.example_id);
        return static_cast<int>(rng.next_below(n));
    };

    switch (kind_) {
    case MockKind::kUniformGuesser:
        return random_pick();
    case MockKind::kOracle: {
        auto it = knowledge_.find(ctx.example_id);
        if (it == knowledge_.end()) {
            throw std::out_of_range("oracle has no knowledge of id " + ctx.example_id);
        }
        int idx = find_option(ctx.option_texts, it->second);
        if (idx < 0) {
            throw std::out_of_range("oracle gold text absent from options for id " +
                                    ctx.example_id);
        }
        return idx;
    }
    case MockKind::kStringMatcher: {
        auto it = knowledge_.find(ctx.example_id);
        if (it == knowledge_.end()) {
            throw std::out_of_range("string_matcher has no knowledge of id " +
                                    ctx.example_id);
        }
        int idx = find_option(ctx.option_texts, it->second);
        return idx >= 0 ? idx : random_pick();
    }
    }
    throw std::logic_error("unreachable mock kind");
}

double MockModel::score_continuation(const QueryContext& ctx,
                                     const std::string& /*prefix*/,
                                     const std::string& continuation) {
    int idx = parse_letter_continuation(continuation, ctx.option_texts.size());
    return idx == chosen_index(ctx) ? 0.0 : -1.0;
}

std::string MockModel::generate(const QueryContext& ctx, const std::string& /*prompt*/,
                                int /*max_tokens*/,
                                const std::vector<std::string>& /*stop*/) {
    int idx = chosen_index(ctx);
    std::ostringstream out;
    out << "Considering each option in turn. Answer: " << option_label(idx);
    return out.str();
}

Knowledge knowledge_from_dataset(const Dataset& d) {
    Knowledge k;
    auto add = [&](const std::vector<McqExample>& list) {
        for (const auto& e : list) {
            k[e.id] = e.choices.at(static_cast<size_t>(e.gold_index));
        }
    };
    add(d.examples);
    add(d.fewshot_pool);
    return k;
}

Knowledge source_knowledge_from_variant(const Dataset& variant,
                                        const std::vector<WickedRecord>& records) {
    std::unordered_map<std::string, const WickedRecord*> by_id;
    for (const auto& r : records) by_id[r.source_id] = &r;

    Knowledge k;
    auto add = [&](const std::vector<McqExample>& list) {
        for (const auto& e : list) {
            auto it = by_id.find(e.id);
            if (it == by_id.end()) {
                throw std::runtime_error("no audit record for variant id " + e.id);
            }
            const WickedRecord& r = *it->second;
            if (r.gold_was_removed) {
                k[e.id] = r.removed_text.value();
            } else {
                k[e.id] = e.choices.at(static_cast<size_t>(e.gold_index));
            }
        }
    };
    add(variant.examples);
    add(variant.fewshot_pool);
    return k;
}

} // namespace wicked
