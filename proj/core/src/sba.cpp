#include "wicked/sba.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <vector>

#include "wicked/hash.hpp"
#include "wicked/prompting.hpp"

#include <nlohmann/json.hpp>

namespace wicked {

using json = nlohmann::json;

std::string provenance_name(LabelProvenance p) {
    switch (p) {
    case LabelProvenance::kRemoteLlm: return "remote-llm";
    case LabelProvenance::kLabelFile: return "label-file";
    case LabelProvenance::kConstant: return "constant";
    }
    return "unknown";
}

std::optional<bool> SbaLabelSet::is_sba(const std::string& id) const {
    auto it = labels.find(id);
    if (it == labels.end()) return std::nullopt;
    return it->second.is_sba;
}

namespace {

template <typename Fn>
void for_each_id(const Dataset& d, Fn&& fn) {
    for (const auto& e : d.examples) fn(e);
    for (const auto& e : d.fewshot_pool) fn(e);
}

size_t dataset_size(const Dataset& d) {
    return d.examples.size() + d.fewshot_pool.size();
}

} // namespace

double SbaLabelSet::coverage(const Dataset& d) const {
    size_t total = dataset_size(d);
    if (total == 0) return 0.0;
    size_t covered = 0;
    for_each_id(d, [&](const McqExample& e) { covered += has(e.id) ? 1 : 0; });
    return static_cast<double>(covered) / static_cast<double>(total);
}

double SbaLabelSet::sba_rate(const Dataset& d) const {
    size_t total = dataset_size(d);
    if (total == 0) return 0.0;
    size_t positive = 0;
    for_each_id(d, [&](const McqExample& e) {
        auto v = is_sba(e.id);
        positive += (v && *v) ? 1 : 0;
    });
    return static_cast<double>(positive) / static_cast<double>(total);
}

std::string build_sba_prompt(const McqExample& e) {
    std::ostringstream block;
    block << e.question;
    for (size_t i = 0; i < e.choices.size(); ++i) {
        block << '\n' << option_label(static_cast<int>(i)) << ". " << e.choices[i];
    }
    std::ostringstream prompt;
    prompt << "A single correct answer question is a question that can have "
              "exactly one correct answer from a given set of choices.\n"
           << "A single best answer question can have a most appropriate answer "
              "(for example, if this answer is omitted, another answer will be "
              "correct).\n"
           << "Classify the following questions into SBA and non-SBA questions. "
              "Assign a label of 1 if the question is a SBA question and a label "
              "of 0 otherwise.\n"
           << "Question: " << block.str() << '\n'
           << "Class:";
    return prompt.str();
}

std::uint64_t example_content_hash(const McqExample& e) {
    std::uint64_t h = fnv1a64(e.question);
    for (const auto& c : e.choices) {
        h = fnv1a64(c, h ^ 0x01);
    }
    h = fnv1a64(std::to_string(e.gold_index), h ^ 0x02);
    return h;
}

SbaCache::SbaCache(std::string path) : path_(std::move(path)) {
    std::ifstream in(path_, std::ios::binary);
    if (!in) return; // fresh cache
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string hex;
        int bit = -1;
        if (!(row >> hex >> bit) || (bit != 0 && bit != 1)) {
            throw std::runtime_error("malformed cache line in " + path_ + ": " + line);
        }
        entries_[std::stoull(hex, nullptr, 16)] = bit == 1;
    }
}

std::optional<bool> SbaCache::lookup(std::uint64_t content_hash) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = entries_.find(content_hash);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void SbaCache::store(std::uint64_t content_hash, bool is_sba) {
    std::lock_guard<std::mutex> lock(mu_);
    auto [it, inserted] = entries_.insert_or_assign(content_hash, is_sba);
    (void)it;
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!out) throw std::runtime_error("cannot append to cache file: " + path_);
    out << to_hex(content_hash) << ' ' << (is_sba ? 1 : 0) << '\n';
}

size_t SbaCache::size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return entries_.size();
}

namespace {

std::optional<bool> parse_annotation(const std::string& raw) {
    auto begin = raw.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return std::nullopt;
    auto end = raw.find_last_not_of(" \t\r\n");
    std::string trimmed = raw.substr(begin, end - begin + 1);
    if (trimmed == "1") return true;
    if (trimmed == "0") return false;
    return std::nullopt;
}

} // namespace

std::optional<bool> RemoteLlmProvider::classify(const McqExample& e) {
    const std::string prompt = build_sba_prompt(e);
    if (auto parsed = parse_annotation(complete_(prompt))) return parsed;
    if (auto parsed = parse_annotation(complete_(prompt))) return parsed;
    return true; // unparseable twice: conservative SBA
}

SbaLabelSet annotate_sba(const Dataset& d, SbaProvider& provider, SbaCache* cache) {
    std::vector<const McqExample*> todo;
    for (const auto& e : d.examples) todo.push_back(&e);
    for (const auto& e : d.fewshot_pool) todo.push_back(&e);

    SbaLabelSet result;
    std::mutex result_mu;
    std::vector<std::string> failed;

    auto label_one = [&](const McqExample& e) {
        std::uint64_t key = example_content_hash(e);
        std::optional<bool> bit;
        if (cache) bit = cache->lookup(key);
        bool from_cache = bit.has_value();
        if (!bit) bit = provider.classify(e);
        if (!bit) throw std::runtime_error("no label available for id " + e.id);
        if (cache && !from_cache) cache->store(key, *bit);
        std::lock_guard<std::mutex> lock(result_mu);
        result.labels[e.id] = SbaLabel{e.id, *bit, provider.provenance()};
    };

    int workers = std::max(1, provider.max_in_flight());
    if (workers <= 1 || todo.size() <= 1) {
        for (const auto* e : todo) {
            try {
                label_one(*e);
            } catch (const std::exception&) {
                failed.push_back(e->id);
            }
        }
    } else {
        std::atomic<size_t> cursor{0};
        std::mutex failed_mu;
        auto worker = [&] {
            for (;;) {
                size_t i = cursor.fetch_add(1);
                if (i >= todo.size()) return;
                try {
                    label_one(*todo[i]);
                } catch (const std::exception&) {
                    std::lock_guard<std::mutex> lock(failed_mu);
                    failed.push_back(todo[i]->id);
                }
            }
        };
        std::vector<std::thread> pool;
        size_t n = std::min<size_t>(static_cast<size_t>(workers), todo.size());
        pool.reserve(n);
        for (size_t i = 0; i < n; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    if (!failed.empty()) {
        std::sort(failed.begin(), failed.end());
        std::ostringstream msg;
        msg << "annotation aborted; unlabeled ids:";
        for (const auto& id : failed) msg << ' ' << id;
        throw std::runtime_error(msg.str());
    }
    return result;
}

SbaLabelSet load_sba_labels(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read label file: " + path);
    SbaLabelSet set;
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const std::exception& ex) {
            throw std::runtime_error("malformed label line " + std::to_string(row) +
                                     ": " + ex.what());
        }
        if (!j.is_object()) {
            throw std::runtime_error("malformed label line " + std::to_string(row) +
                                     ": expected an object");
        }
        for (auto it = j.begin(); it != j.end(); ++it) {
            int bit = -1;
            if (it.value().is_number_integer()) bit = it.value().get<int>();
            if (bit != 0 && bit != 1) {
                throw std::runtime_error("non-binary label for id \"" + it.key() +
                                         "\" on line " + std::to_string(row));
            }
            set.labels[it.key()] =
                SbaLabel{it.key(), bit == 1, LabelProvenance::kLabelFile};
        }
    }
    return set;
}

void write_sba_labels(const SbaLabelSet& labels, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write label file: " + path);
    for (const auto& [id, label] : labels.labels) {
        json j;
        j[id] = label.is_sba ? 1 : 0;
        out << j.dump() << '\n';
    }
}

} // namespace wicked
