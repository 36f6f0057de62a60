#pragma once

#include <string>
#include <utility>
#include <vector>

#include "wicked/eval.hpp"

namespace wicked {

struct RunReport {
    std::string benchmark;
    std::string model;
    PromptMode mode = PromptMode::kDirect;
    double original_accuracy = 0.0;
    std::vector<double> variant_accuracies; // one per seed
    double wicked_mean = 0.0;
    double wicked_std = 0.0; // sample std, n-1 divisor
    double delta = 0.0;      // wicked_mean - original_accuracy

    bool operator==(const RunReport&) const = default;
};

// Per-question correctness cross-tabulation between an original run and a
// variant run: correct->correct, correct->wrong, wrong->correct, wrong->wrong.
struct TransitionMatrix {
    std::string benchmark;
    std::string model;
    long cc = 0;
    long cw = 0;
    long wc = 0;
    long ww = 0;

    long total() const { return cc + cw + wc + ww; }

    bool operator==(const TransitionMatrix&) const = default;
};

double accuracy(const EvalRun& run); // throws on empty run

// Mean and sample standard deviation of per-run accuracies. Runs must agree
// on benchmark, model, and mode, and carry distinct variant seeds.
std::pair<double, double> aggregate_variants(const std::vector<EvalRun>& runs);

double compute_delta(double original, double wicked_mean);

// Matches items by id; every matched id lands in exactly one cell.
TransitionMatrix transition_matrix(const EvalRun& original, const EvalRun& wicked);

RunReport make_run_report(const EvalRun& original,
                          const std::vector<EvalRun>& wicked);

// Table with columns Model | Original | WiCkeD | Delta +/- std, values
// rendered as percentages with one decimal.
std::string render_table(const std::vector<RunReport>& reports);

// Writes reports.jsonl (machine readable), table.txt, and transitions.txt
// into the directory.
void emit_report(const std::vector<RunReport>& reports,
                 const std::vector<TransitionMatrix>& matrices,
                 const std::string& dir);

std::vector<RunReport> parse_reports(const std::string& path);

} // namespace wicked
