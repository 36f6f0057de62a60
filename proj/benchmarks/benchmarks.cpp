#include <benchmark/benchmark.h>

#include <sstream>

#include "wicked/dataset.hpp"
#include "wicked/eval.hpp"
#include "wicked/prompting.hpp"
#include "wicked/sba.hpp"
#include "wicked/transform.hpp"

namespace {

using namespace wicked;

Dataset make_dataset(int m, int n, int pool) {
    Dataset d;
    d.name = "bench";
    auto fill = [&](const std::string& prefix, int count, Split split,
                    std::vector<McqExample>& out) {
        for (int i = 0; i < count; ++i) {
            McqExample e;
            e.id = prefix + std::to_string(i);
            e.question = "Benchmark question " + std::to_string(i) +
                         " about a modestly long subject line?";
            for (int c = 0; c < n; ++c) {
                e.choices.push_back("candidate answer " + std::to_string(i) +
                                    "-" + std::to_string(c));
            }
            e.gold_index = i % n;
            e.split = split;
            out.push_back(std::move(e));
        }
    };
    fill("s", m, Split::kEval, d.examples);
    fill("p", pool, Split::kFewshotPool, d.fewshot_pool);
    return d;
}

SbaLabelSet sca_labels(const Dataset& d) {
    SbaLabelSet set;
    for (const auto& e : d.examples) {
        set.labels[e.id] = {e.id, false, LabelProvenance::kConstant};
    }
    for (const auto& e : d.fewshot_pool) {
        set.labels[e.id] = {e.id, false, LabelProvenance::kConstant};
    }
    return set;
}

void BM_MakeVariant(benchmark::State& state) {
    auto d = make_dataset(static_cast<int>(state.range(0)), 4, 5);
    auto labels = sca_labels(d);
    std::uint64_t seed = 1;
    for (auto _ : state) {
        auto v = make_variant(d, seed++, labels);
        benchmark::DoNotOptimize(v);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MakeVariant)->Arg(1000)->Arg(10000);

void BM_BuildMcpPrompt(benchmark::State& state) {
    auto d = make_dataset(1, 4, 10);
    PromptSpec spec;
    spec.shots = static_cast<int>(state.range(0));
    for (auto _ : state) {
        auto rendered = build_mcp_prompt(d.examples[0], d.fewshot_pool, spec);
        benchmark::DoNotOptimize(rendered);
    }
}
BENCHMARK(BM_BuildMcpPrompt)->Arg(0)->Arg(5)->Arg(10);

void BM_ExtractCotAnswer(benchmark::State& state) {
    std::ostringstream text;
    for (int i = 0; i < 40; ++i) {
        text << "Step " << i << ": considering option (B) against option C. ";
    }
    text << "Answer: D";
    std::string generation = text.str();
    for (auto _ : state) {
        auto idx = extract_cot_answer(generation, 4);
        benchmark::DoNotOptimize(idx);
    }
}
BENCHMARK(BM_ExtractCotAnswer);

void BM_IngestJsonl(benchmark::State& state) {
    auto d = make_dataset(static_cast<int>(state.range(0)), 4, 5);
    std::ostringstream buffer;
    for (const auto& e : d.examples) buffer << to_canonical_line(e) << '\n';
    std::string blob = buffer.str();
    for (auto _ : state) {
        std::istringstream in(blob);
        std::string line;
        std::vector<McqExample> parsed;
        parsed.reserve(d.examples.size());
        while (std::getline(in, line)) {
            parsed.push_back(from_canonical_line(line));
        }
        benchmark::DoNotOptimize(parsed);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_IngestJsonl)->Arg(1000);

void BM_SbaPrompt(benchmark::State& state) {
    auto d = make_dataset(1, 4, 0);
    for (auto _ : state) {
        auto prompt = build_sba_prompt(d.examples[0]);
        benchmark::DoNotOptimize(prompt);
    }
}
BENCHMARK(BM_SbaPrompt);

} // namespace

BENCHMARK_MAIN();
