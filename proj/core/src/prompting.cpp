#include "wicked/prompting.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "wicked/hash.hpp"

#include <nlohmann/json.hpp>

namespace wicked {

using json = nlohmann::json;

std::string mode_name(PromptMode m) {
    return m == PromptMode::kCot ? "cot" : "direct";
}

PromptMode mode_from_name(std::string_view name) {
    if (name == "direct") return PromptMode::kDirect;
    if (name == "cot") return PromptMode::kCot;
    throw std::runtime_error("unknown mode: " + std::string(name));
}

char option_label(int index) {
    if (index < 0 || index >= 26) {
        throw std::out_of_range("option index " + std::to_string(index) +
                                " has no letter label");
    }
    return static_cast<char>('A' + index);
}

PromptTemplates PromptTemplates::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read templates file: " + path);
    json j = json::parse(in);
    PromptTemplates t;
    if (j.contains("mcp_header")) t.mcp_header = j["mcp_header"].get<std::string>();
    if (j.contains("cot_elicitation")) {
        t.cot_elicitation = j["cot_elicitation"].get<std::string>();
    }
    return t;
}

void PromptTemplates::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write templates file: " + path);
    json j;
    j["mcp_header"] = mcp_header;
    j["cot_elicitation"] = cot_elicitation;
    out << j.dump(2) << '\n';
}

std::uint64_t PromptTemplates::fingerprint() const {
    return fnv1a64(cot_elicitation, fnv1a64(mcp_header) ^ 0x7);
}

void PromptSpec::validate() const {
    if (shots < 0) throw std::invalid_argument("shots must be >= 0");
    if (mode == PromptMode::kCot && shots != 0) {
        throw std::invalid_argument("cot mode is zero-shot; shots must be 0");
    }
}

std::uint64_t PromptSpec::fingerprint() const {
    std::uint64_t h = templates.fingerprint();
    h = fnv1a64(mode_name(mode), h ^ 0x11);
    h = fnv1a64(std::to_string(shots), h ^ 0x12);
    h = fnv1a64(std::to_string(max_gen_tokens), h ^ 0x13);
    return h;
}

namespace {

void append_question_block(std::ostringstream& out, const McqExample& e) {
    out << e.question << '\n';
    for (size_t i = 0; i < e.choices.size(); ++i) {
        out << option_label(static_cast<int>(i)) << ". " << e.choices[i] << '\n';
    }
}

} // namespace

std::string format_example(const McqExample& e, bool with_answer) {
    std::ostringstream out;
    append_question_block(out, e);
    out << "Answer:";
    if (with_answer) out << ' ' << option_label(e.gold_index);
    return out.str();
}

RenderedPrompt build_mcp_prompt(const McqExample& e,
                                const std::vector<McqExample>& pool,
                                const PromptSpec& spec) {
    spec.validate();
    if (pool.size() < static_cast<size_t>(spec.shots)) {
        throw std::invalid_argument(
            "few-shot pool has " + std::to_string(pool.size()) +
            " examples, need " + std::to_string(spec.shots));
    }
    std::ostringstream prefix;
    if (!spec.templates.mcp_header.empty()) {
        prefix << spec.templates.mcp_header << "\n\n";
    }
    for (int i = 0; i < spec.shots; ++i) {
        const auto& demo = pool[static_cast<size_t>(i)];
        if (demo.id == e.id) {
            throw std::invalid_argument("target id \"" + e.id +
                                        "\" appears in the few-shot pool");
        }
        prefix << format_example(demo, /*with_answer=*/true) << "\n\n";
    }
    prefix << format_example(e, /*with_answer=*/false);

    RenderedPrompt rendered;
    rendered.prefix = prefix.str();
    for (size_t i = 0; i < e.choices.size(); ++i) {
        char label = option_label(static_cast<int>(i));
        rendered.option_labels.emplace_back(1, label);
        rendered.continuations.push_back(std::string(" ") + label);
    }
    return rendered;
}

std::string build_cot_prompt(const McqExample& e, const PromptTemplates& templates) {
    std::ostringstream out;
    append_question_block(out, e);
    out << '\n' << templates.cot_elicitation;
    return out.str();
}

} // namespace wicked
