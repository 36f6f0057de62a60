#include <doctest.h>

#include <cmath>
#include <fstream>

#include "test_support.hpp"
#include "wicked/analysis.hpp"

using namespace wicked;
using testsupport::TempDir;

namespace {

// A run whose per-item correctness follows the given bit pattern; ids x0, x1...
EvalRun run_with(const std::vector<int>& correct_bits,
                 std::optional<std::uint64_t> seed = std::nullopt,
                 const std::string& benchmark = "bench",
                 const std::string& model = "m") {
    EvalRun run;
    run.dataset_name = benchmark;
    run.model_name = model;
    run.variant_seed = seed;
    for (size_t i = 0; i < correct_bits.size(); ++i) {
        EvalRecordItem item;
        item.example_id = "x" + std::to_string(i);
        item.gold_index = 0;
        item.chosen_index = correct_bits[i] ? 0 : 1;
        item.correct = correct_bits[i] != 0;
        run.items.push_back(item);
    }
    return run;
}

// A run with the given accuracy over `total` items.
EvalRun run_with_accuracy(double acc, int total, std::uint64_t seed) {
    std::vector<int> bits(static_cast<size_t>(total), 0);
    int hits = static_cast<int>(std::lround(acc * total));
    for (int i = 0; i < hits; ++i) bits[static_cast<size_t>(i)] = 1;
    return run_with(bits, seed);
}

} // namespace

TEST_CASE("accuracy is the fraction of correct items") {
    CHECK(accuracy(run_with({1, 1, 0, 1})) == doctest::Approx(0.75));
    CHECK(accuracy(run_with({0, 0})) == 0.0);
    CHECK_THROWS_AS(accuracy(run_with({})), std::invalid_argument);
}

TEST_CASE("aggregation reproduces the pinned mean and deviation") {
    std::vector<EvalRun> runs;
    std::vector<double> accs{0.50, 0.60, 0.70, 0.55, 0.65};
    for (size_t i = 0; i < accs.size(); ++i) {
        runs.push_back(run_with_accuracy(accs[i], 100, i + 1));
    }
    auto [mean, std_dev] = aggregate_variants(runs);
    CHECK(mean == doctest::Approx(0.600).epsilon(1e-12));
    CHECK(std_dev == doctest::Approx(0.0790569415).epsilon(1e-8));
}

TEST_CASE("aggregation rejects mismatched or underpowered inputs") {
    CHECK_THROWS_AS(aggregate_variants({run_with_accuracy(0.5, 10, 1)}),
                    std::invalid_argument);

    // Same seed twice.
    CHECK_THROWS_AS(aggregate_variants(
                        {run_with_accuracy(0.5, 10, 1), run_with_accuracy(0.6, 10, 1)}),
                    std::invalid_argument);

    // A run without a variant seed.
    CHECK_THROWS_AS(
        aggregate_variants({run_with_accuracy(0.5, 10, 1), run_with({1, 0})}),
        std::invalid_argument);

    // Model mismatch.
    auto other = run_with_accuracy(0.6, 10, 2);
    other.model_name = "m2";
    CHECK_THROWS_AS(aggregate_variants({run_with_accuracy(0.5, 10, 1), other}),
                    std::invalid_argument);
}

TEST_CASE("delta is the signed difference, range checked") {
    CHECK(compute_delta(0.7078, 0.5852) == doctest::Approx(-0.1226).epsilon(1e-12));
    CHECK(compute_delta(0.25, 0.25) == 0.0);
    CHECK_THROWS_AS(compute_delta(1.2, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(compute_delta(0.5, -0.1), std::invalid_argument);
}

TEST_CASE("transitions cross-tabulate matched ids") {
    auto original = run_with({1, 1, 1, 0, 0, 1});
    auto wicked = run_with({1, 0, 1, 1, 0, 0});
    auto m = transition_matrix(original, wicked);
    CHECK(m.cc == 2);
    CHECK(m.cw == 2);
    CHECK(m.wc == 1);
    CHECK(m.ww == 1);
    CHECK(m.total() == 6);
    CHECK(m.benchmark == "bench");
}

TEST_CASE("transitions ignore unmatched ids and refuse disjoint runs") {
    auto original = run_with({1, 0, 1});
    auto wicked = run_with({1, 1, 1, 0, 0});
    wicked.items[3].example_id = "zz3";
    wicked.items[4].example_id = "zz4";
    auto m = transition_matrix(original, wicked);
    CHECK(m.total() == 3);

    auto stranger = run_with({1, 1});
    stranger.items[0].example_id = "a";
    stranger.items[1].example_id = "b";
    CHECK_THROWS_AS(transition_matrix(original, stranger), std::invalid_argument);

    auto foreign = run_with({1, 0, 1}, std::nullopt, "bench", "other-model");
    CHECK_THROWS_AS(transition_matrix(original, foreign), std::invalid_argument);
}

TEST_CASE("make_run_report assembles all pieces coherently") {
    auto original = run_with_accuracy(0.80, 100, 0);
    original.variant_seed.reset();
    std::vector<EvalRun> wicked;
    for (std::uint64_t s = 1; s <= 5; ++s) {
        wicked.push_back(run_with_accuracy(0.60 + 0.05 * static_cast<double>(s),
                                           100, s));
    }
    auto report = make_run_report(original, wicked);
    CHECK(report.original_accuracy == doctest::Approx(0.80));
    CHECK(report.variant_accuracies.size() == 5);
    CHECK(report.wicked_mean == doctest::Approx(0.75));
    CHECK(report.delta == doctest::Approx(-0.05));
    CHECK(report.benchmark == "bench");
}

TEST_CASE("the table renders percentages with one decimal") {
    RunReport r;
    r.benchmark = "bench";
    r.model = "demo-model";
    r.mode = PromptMode::kDirect;
    r.original_accuracy = 0.7078;
    r.wicked_mean = 0.5852;
    r.wicked_std = 0.0123;
    r.delta = -0.1226;

    auto table = render_table({r});
    CHECK(table.find("demo-model") != std::string::npos);
    CHECK(table.find("70.8") != std::string::npos);
    CHECK(table.find("58.5") != std::string::npos);
    CHECK(table.find("-12.3 +/- 1.2") != std::string::npos);
    CHECK(table.find("Original") != std::string::npos);
    CHECK(table.find("WiCkeD") != std::string::npos);
}

TEST_CASE("emit and parse reports round-trip the numbers") {
    TempDir tmp;
    auto original = run_with_accuracy(0.9, 50, 0);
    original.variant_seed.reset();
    std::vector<EvalRun> wicked;
    for (std::uint64_t s = 1; s <= 3; ++s) {
        wicked.push_back(run_with_accuracy(0.7, 50, s));
    }
    auto report = make_run_report(original, wicked);
    auto matrix = transition_matrix(original, wicked[0]);

    emit_report({report}, {matrix}, tmp.file("out"));
    auto parsed = parse_reports(tmp.file("out") + "/reports.jsonl");
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0] == report);

    std::ifstream table(tmp.file("out") + "/table.txt");
    CHECK(table.good());
    std::ifstream transitions(tmp.file("out") + "/transitions.txt");
    std::string line;
    REQUIRE(std::getline(transitions, line));
    CHECK(line.find("correct->correct") != std::string::npos);

    CHECK_THROWS_AS(emit_report({}, {}, tmp.file("empty")), std::invalid_argument);
}
