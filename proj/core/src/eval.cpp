#include "wicked/eval.hpp"

#include <atomic>
#include <cctype>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "wicked/hash.hpp"

#include <nlohmann/json.hpp>

namespace wicked {

using json = nlohmann::json;

std::uint64_t run_fingerprint(const EvalRun& header) {
    std::uint64_t h = fnv1a64(header.dataset_name);
    h = fnv1a64(header.variant_seed ? std::to_string(*header.variant_seed) : "-",
                h ^ 0x21);
    h = fnv1a64(header.model_name, h ^ 0x22);
    h = fnv1a64(mode_name(header.mode), h ^ 0x23);
    h = fnv1a64(std::to_string(header.prompt_fingerprint), h ^ 0x24);
    h = fnv1a64(std::to_string(header.dataset_hash), h ^ 0x25);
    return h;
}

namespace {

bool valid_letter_index(char letter, int n_options, int& index) {
    char upper = static_cast<char>(std::toupper(static_cast<unsigned char>(letter)));
    if (upper < 'A' || upper >= static_cast<char>('A' + n_options)) return false;
    index = upper - 'A';
    return true;
}

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

// Final "Answer: L" (any case on the word, optional parentheses around L).
std::optional<int> find_answer_line(const std::string& text, int n_options) {
    static const std::string kAnchor = "answer:";
    size_t best = std::string::npos;
    for (size_t pos = 0;;) {
        auto it = std::search(text.begin() + static_cast<long>(pos), text.end(),
                              kAnchor.begin(), kAnchor.end(), [](char a, char b) {
                                  return std::tolower(static_cast<unsigned char>(a)) == b;
                              });
        if (it == text.end()) break;
        best = static_cast<size_t>(it - text.begin());
        pos = best + kAnchor.size();
    }
    if (best == std::string::npos) return std::nullopt;

    size_t i = best + kAnchor.size();
    while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
    if (i < text.size() && text[i] == '(') ++i;
    if (i >= text.size()) return std::nullopt;
    char letter = text[i];
    // Must be a standalone letter, not the start of a word.
    if (i + 1 < text.size() && is_word_char(text[i + 1])) return std::nullopt;
    int index = -1;
    if (!valid_letter_index(letter, n_options, index)) return std::nullopt;
    return index;
}

// Last standalone "(L)" or "L." token; uppercase only, so prose like "e.g."
// or "a." never counts.
std::optional<int> find_letter_token(const std::string& text, int n_options) {
    std::optional<int> found;
    std::istringstream stream(text);
    std::string token;
    while (stream >> token) {
        // Allow one trailing '.' or ',' after a parenthesized letter.
        if (token.size() > 3 && token[0] == '(' &&
            (token.back() == '.' || token.back() == ',')) {
            token.pop_back();
        }
        char letter = 0;
        if (token.size() == 3 && token[0] == '(' && token[2] == ')') {
            letter = token[1];
        } else if (token.size() == 2 && token[1] == '.') {
            letter = token[0];
        } else {
            continue;
        }
        if (letter < 'A' || letter > 'Z') continue;
        int index = -1;
        if (valid_letter_index(letter, n_options, index)) found = index;
    }
    return found;
}

} // namespace

std::optional<int> extract_cot_answer(const std::string& text, int n_options) {
    if (n_options < 2) throw std::invalid_argument("n_options must be >= 2");
    if (auto idx = find_answer_line(text, n_options)) return idx;
    return find_letter_token(text, n_options);
}

namespace {

json item_to_json(const EvalRecordItem& item) {
    json j;
    j["id"] = item.example_id;
    if (item.chosen_index) j["chosen_index"] = *item.chosen_index;
    j["gold_index"] = item.gold_index;
    j["correct"] = item.correct;
    if (item.scores) j["scores"] = *item.scores;
    if (item.generation) j["generation"] = *item.generation;
    j["abstained"] = item.abstained;
    return j;
}

EvalRecordItem item_from_json(const json& j) {
    EvalRecordItem item;
    item.example_id = j.at("id").get<std::string>();
    if (j.contains("chosen_index")) item.chosen_index = j["chosen_index"].get<int>();
    item.gold_index = j.at("gold_index").get<int>();
    item.correct = j.at("correct").get<bool>();
    if (j.contains("scores")) item.scores = j["scores"].get<std::vector<double>>();
    if (j.contains("generation")) {
        item.generation = j["generation"].get<std::string>();
    }
    item.abstained = j.at("abstained").get<bool>();
    return item;
}

EvalRun make_header(const Dataset& d, std::optional<std::uint64_t> variant_seed,
                    ModelHandle& model, const PromptSpec& spec) {
    EvalRun run;
    run.dataset_name = d.name;
    run.variant_seed = variant_seed;
    run.model_name = model.name();
    run.mode = spec.mode;
    run.prompt_fingerprint = spec.fingerprint();
    run.dataset_hash = dataset_content_hash(d);
    return run;
}

class PartialStore {
  public:
    PartialStore(const std::string& path, std::uint64_t fingerprint)
        : path_(path) {
        if (path_.empty()) return;
        std::ifstream in(path_, std::ios::binary);
        if (in) {
            std::string line;
            if (!std::getline(in, line)) {
                throw std::runtime_error("partial file is empty: " + path_);
            }
            json header = json::parse(line);
            if (header.value("type", "") != "eval_partial" ||
                header.at("fingerprint").get<std::uint64_t>() != fingerprint) {
                throw std::runtime_error(
                    "partial file belongs to a different run: " + path_);
            }
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                auto item = item_from_json(json::parse(line));
                done_[item.example_id] = std::move(item);
            }
        } else {
            std::ofstream out(path_, std::ios::binary | std::ios::trunc);
            if (!out) throw std::runtime_error("cannot create partial file: " + path_);
            json header;
            header["type"] = "eval_partial";
            header["fingerprint"] = fingerprint;
            out << header.dump() << '\n';
        }
    }

    const std::unordered_map<std::string, EvalRecordItem>& done() const {
        return done_;
    }

    void append(const EvalRecordItem& item) {
        if (path_.empty()) return;
        std::lock_guard<std::mutex> lock(mu_);
        std::ofstream out(path_, std::ios::binary | std::ios::app);
        if (!out) throw std::runtime_error("cannot append to partial file: " + path_);
        out << item_to_json(item).dump() << '\n';
    }

  private:
    std::string path_;
    std::unordered_map<std::string, EvalRecordItem> done_;
    std::mutex mu_;
};

int argmax_lowest(const std::vector<double>& scores) {
    int best = 0;
    for (size_t i = 1; i < scores.size(); ++i) {
        if (scores[i] > scores[static_cast<size_t>(best)]) best = static_cast<int>(i);
    }
    return best;
}

template <typename PerExample>
EvalRun drive(const Dataset& d, std::optional<std::uint64_t> variant_seed,
              ModelHandle& model, const PromptSpec& spec,
              const EvalOptions& options, PerExample&& eval_one) {
    EvalRun run = make_header(d, variant_seed, model, spec);
    const std::uint64_t fp = run_fingerprint(run);

    PartialStore store(options.partial_path, fp);

    const size_t total = d.examples.size();
    std::vector<std::optional<EvalRecordItem>> slots(total);
    std::vector<size_t> todo;
    for (size_t i = 0; i < total; ++i) {
        auto it = store.done().find(d.examples[i].id);
        if (it != store.done().end()) {
            slots[i] = it->second;
        } else {
            todo.push_back(i);
        }
    }

    std::mutex failure_mu;
    std::optional<std::pair<std::string, std::string>> failure; // id, reason
    std::atomic<bool> abort{false};

    auto work_one = [&](size_t i) {
        try {
            EvalRecordItem item = eval_one(d.examples[i]);
            store.append(item);
            slots[i] = std::move(item);
        } catch (const std::exception& ex) {
            std::lock_guard<std::mutex> lock(failure_mu);
            if (!failure) failure = {d.examples[i].id, ex.what()};
            abort = true;
        }
    };

    int workers = std::max(1, options.workers);
    if (workers <= 1 || todo.size() <= 1) {
        for (size_t i : todo) {
            if (abort) break;
            work_one(i);
        }
    } else {
        std::atomic<size_t> cursor{0};
        auto worker = [&] {
            for (;;) {
                if (abort) return;
                size_t k = cursor.fetch_add(1);
                if (k >= todo.size()) return;
                work_one(todo[k]);
            }
        };
        std::vector<std::thread> pool;
        size_t n = std::min<size_t>(static_cast<size_t>(workers), todo.size());
        pool.reserve(n);
        for (size_t i = 0; i < n; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    if (failure) throw EvalAborted(failure->first, failure->second);

    run.items.reserve(total);
    for (auto& slot : slots) run.items.push_back(std::move(*slot));
    return run;
}

} // namespace

EvalRun eval_direct(const Dataset& d, std::optional<std::uint64_t> variant_seed,
                    ModelHandle& model, const PromptSpec& spec,
                    const EvalOptions& options) {
    spec.validate();
    if (spec.mode != PromptMode::kDirect) {
        throw std::invalid_argument("eval_direct requires spec.mode = direct");
    }
    if (d.fewshot_pool.size() < static_cast<size_t>(spec.shots)) {
        throw std::invalid_argument(
            "few-shot pool has " + std::to_string(d.fewshot_pool.size()) +
            " examples, need " + std::to_string(spec.shots));
    }
    return drive(d, variant_seed, model, spec, options, [&](const McqExample& e) {
        RenderedPrompt rendered = build_mcp_prompt(e, d.fewshot_pool, spec);
        QueryContext ctx{e.id, e.choices};
        std::vector<double> scores;
        scores.reserve(e.choices.size());
        for (const auto& continuation : rendered.continuations) {
            scores.push_back(model.score_continuation(ctx, rendered.prefix, continuation));
        }
        EvalRecordItem item;
        item.example_id = e.id;
        item.gold_index = e.gold_index;
        item.chosen_index = argmax_lowest(scores);
        item.correct = *item.chosen_index == e.gold_index;
        if (options.keep_scores) item.scores = std::move(scores);
        return item;
    });
}

EvalRun eval_cot(const Dataset& d, std::optional<std::uint64_t> variant_seed,
                 ModelHandle& model, const PromptSpec& spec,
                 const EvalOptions& options) {
    spec.validate();
    if (spec.mode != PromptMode::kCot) {
        throw std::invalid_argument("eval_cot requires spec.mode = cot");
    }
    return drive(d, variant_seed, model, spec, options, [&](const McqExample& e) {
        std::string prompt = build_cot_prompt(e, spec.templates);
        QueryContext ctx{e.id, e.choices};
        std::string generation =
            model.generate(ctx, prompt, spec.max_gen_tokens, {});
        auto chosen =
            extract_cot_answer(generation, static_cast<int>(e.choices.size()));
        EvalRecordItem item;
        item.example_id = e.id;
        item.gold_index = e.gold_index;
        item.chosen_index = chosen;
        item.abstained = !chosen.has_value();
        item.correct = chosen.has_value() && *chosen == e.gold_index;
        if (options.keep_generations) item.generation = std::move(generation);
        return item;
    });
}

void write_eval_run(const EvalRun& run, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write run file: " + path);
    json header;
    header["type"] = "eval_run";
    header["dataset_name"] = run.dataset_name;
    if (run.variant_seed) header["variant_seed"] = *run.variant_seed;
    header["model_name"] = run.model_name;
    header["mode"] = mode_name(run.mode);
    header["prompt_fingerprint"] = run.prompt_fingerprint;
    header["dataset_hash"] = run.dataset_hash;
    header["cot_extraction"] = std::string(kCotExtractionVersion);
    out << header.dump() << '\n';
    for (const auto& item : run.items) out << item_to_json(item).dump() << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

EvalRun read_eval_run(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read run file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty run file: " + path);
    json header = json::parse(line);
    if (header.value("type", "") != "eval_run") {
        throw std::runtime_error("not an eval run file: " + path);
    }
    EvalRun run;
    run.dataset_name = header.at("dataset_name").get<std::string>();
    if (header.contains("variant_seed")) {
        run.variant_seed = header["variant_seed"].get<std::uint64_t>();
    }
    run.model_name = header.at("model_name").get<std::string>();
    run.mode = mode_from_name(header.at("mode").get<std::string>());
    run.prompt_fingerprint = header.at("prompt_fingerprint").get<std::uint64_t>();
    run.dataset_hash = header.at("dataset_hash").get<std::uint64_t>();
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        run.items.push_back(item_from_json(json::parse(line)));
    }
    return run;
}

} // namespace wicked
