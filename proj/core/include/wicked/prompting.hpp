#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wicked/dataset.hpp"

namespace wicked {

enum class PromptMode { kDirect, kCot };

std::string mode_name(PromptMode m);
PromptMode mode_from_name(std::string_view name); // throws on unknown value

char option_label(int index); // 0 -> 'A', 25 -> 'Z'; throws outside [0, 26)

// Instruction wording, externalized so runs can pin and version it. The
// on-disk form is a JSON object with the slots named below.
struct PromptTemplates {
    std::string mcp_header =
        "The following are multiple choice questions (with answers).";
    std::string cot_elicitation =
        "Let's think step by step. End your response with \"Answer: <letter>\" "
        "where <letter> is the letter of the chosen option.";

    static PromptTemplates load(const std::string& path);
    void save(const std::string& path) const;
    std::uint64_t fingerprint() const;

    bool operator==(const PromptTemplates&) const = default;
};

struct PromptSpec {
    int shots = 5;
    PromptMode mode = PromptMode::kDirect;
    PromptTemplates templates;
    int max_gen_tokens = 4096;

    void validate() const; // cot requires shots == 0
    std::uint64_t fingerprint() const;
};

struct RenderedPrompt {
    std::string prefix;                     // ends at the answer slot
    std::vector<std::string> option_labels; // "A", "B", ...
    std::vector<std::string> continuations; // " A", " B", ...
};

// Question line, one "L. choice" line per option, then the answer line:
// "Answer: L" when with_answer, bare "Answer:" otherwise.
std::string format_example(const McqExample& e, bool with_answer);

// Header, the first spec.shots pool entries as answered demonstrations in
// pool order, then the unanswered target. Demonstrations must not contain
// the target id.
RenderedPrompt build_mcp_prompt(const McqExample& e,
                                const std::vector<McqExample>& pool,
                                const PromptSpec& spec);

// Zero-shot CoT: the question block without an answer slot, then the
// elicitation and terminal-answer instruction.
std::string build_cot_prompt(const McqExample& e,
                             const PromptTemplates& templates = {});

} // namespace wicked
