#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wicked/dataset.hpp"
#include "wicked/model.hpp"
#include "wicked/prompting.hpp"

namespace wicked {

// Identifies the extraction pattern set so manifests can pin it.
inline constexpr std::string_view kCotExtractionVersion =
    "answer-line,paren-letter,letter-dot/v1";

struct EvalRecordItem {
    std::string example_id;
    std::optional<int> chosen_index; // absent iff abstained
    int gold_index = 0;
    bool correct = false;
    std::optional<std::vector<double>> scores; // per-option, direct mode
    std::optional<std::string> generation;     // cot mode
    bool abstained = false;

    bool operator==(const EvalRecordItem&) const = default;
};

struct EvalRun {
    std::string dataset_name;
    std::optional<std::uint64_t> variant_seed;
    std::string model_name;
    PromptMode mode = PromptMode::kDirect;
    std::uint64_t prompt_fingerprint = 0;
    std::uint64_t dataset_hash = 0;
    std::vector<EvalRecordItem> items; // dataset order, eval split only

    bool operator==(const EvalRun&) const = default;
};

// Identity of a run for partial-result persistence: same fingerprint means
// the partial file belongs to this exact (dataset, model, mode, prompt)
// combination and its items can be reused verbatim.
std::uint64_t run_fingerprint(const EvalRun& header);

struct EvalOptions {
    int workers = 1;
    std::string partial_path; // empty disables persistence
    bool keep_scores = true;
    bool keep_generations = true;
};

// Thrown when any example fails after retries; completed items are already
// in the partial file (when persistence is on) and the run can resume.
struct EvalAborted : std::runtime_error {
    std::string failed_id;
    EvalAborted(std::string id, const std::string& why)
        : std::runtime_error("evaluation aborted at id " + id + ": " + why),
          failed_id(std::move(id)) {}
};

// Priority order: final "Answer: L"; then the last standalone "(L)" or "L."
// token; absent when nothing names a valid option letter.
std::optional<int> extract_cot_answer(const std::string& text, int n_options);

EvalRun eval_direct(const Dataset& d, std::optional<std::uint64_t> variant_seed,
                    ModelHandle& model, const PromptSpec& spec,
                    const EvalOptions& options = {});

EvalRun eval_cot(const Dataset& d, std::optional<std::uint64_t> variant_seed,
                 ModelHandle& model, const PromptSpec& spec,
                 const EvalOptions& options = {});

// One header line, then one item per line.
void write_eval_run(const EvalRun& run, const std::string& path);
EvalRun read_eval_run(const std::string& path);

} // namespace wicked
