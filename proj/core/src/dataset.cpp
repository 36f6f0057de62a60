#include "wicked/dataset.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "wicked/hash.hpp"

#include <nlohmann/json.hpp>

namespace wicked {

using json = nlohmann::json;

std::string split_name(Split s) {
    return s == Split::kFewshotPool ? "fewshot_pool" : "eval";
}

Split split_from_name(std::string_view name) {
    if (name == "fewshot_pool") return Split::kFewshotPool;
    if (name == "eval") return Split::kEval;
    throw std::runtime_error("unknown split value: " + std::string(name));
}

std::string to_hex(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return out;
}

std::string normalize_whitespace(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool in_ws = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            in_ws = true;
            continue;
        }
        if (in_ws && !out.empty()) out.push_back(' ');
        in_ws = false;
        out.push_back(static_cast<char>(c));
    }
    return out;
}

void check_example(const McqExample& e, int row, ValidationReport& out) {
    auto fail = [&](std::string reason) {
        out.errors.push_back({row, std::move(reason)});
    };
    if (e.id.empty()) fail("empty id");
    if (normalize_whitespace(e.question).empty()) fail("empty question");
    const auto n = e.choices.size();
    if (n < 2 || n > 26) {
        fail("choice count " + std::to_string(n) + " outside [2, 26]");
    }
    if (e.gold_index < 0 || static_cast<size_t>(e.gold_index) >= n) {
        fail("gold_index " + std::to_string(e.gold_index) +
             " out of range for " + std::to_string(n) + " choices");
    }
    std::unordered_set<std::string> seen;
    for (const auto& c : e.choices) {
        if (!seen.insert(normalize_whitespace(c)).second) {
            fail("duplicate choice text: \"" + c + "\"");
            break;
        }
    }
}

ValidationReport validate_dataset(const Dataset& d) {
    ValidationReport report;
    if (d.examples.empty()) {
        report.errors.push_back({0, "dataset has no eval examples"});
    }
    std::unordered_set<std::string> ids;
    int row = 0;
    auto walk = [&](const std::vector<McqExample>& list) {
        for (const auto& e : list) {
            ++row;
            check_example(e, row, report);
            if (!e.id.empty() && !ids.insert(e.id).second) {
                report.errors.push_back({row, "duplicate id: " + e.id});
            }
        }
    };
    walk(d.examples);
    walk(d.fewshot_pool);
    return report;
}

namespace {

McqExample example_from_json(const json& j) {
    McqExample e;
    e.id = j.at("id").get<std::string>();
    e.question = j.at("question").get<std::string>();
    e.choices = j.at("choices").get<std::vector<std::string>>();
    e.gold_index = j.at("gold_index").get<int>();
    if (j.contains("subject") && !j["subject"].is_null()) {
        e.subject = j["subject"].get<std::string>();
    }
    if (j.contains("split") && !j["split"].is_null()) {
        e.split = split_from_name(j["split"].get<std::string>());
    }
    if (j.contains("sba") && !j["sba"].is_null()) {
        e.sba = j["sba"].get<bool>();
    }
    return e;
}

json example_to_json(const McqExample& e) {
    json j;
    j["id"] = e.id;
    j["question"] = e.question;
    j["choices"] = e.choices;
    j["gold_index"] = e.gold_index;
    if (e.subject) j["subject"] = *e.subject;
    j["split"] = split_name(e.split);
    if (e.sba) j["sba"] = *e.sba;
    return j;
}

// RFC-4180ish CSV: quoted cells may contain commas, quotes, and newlines.
std::vector<std::vector<std::string>> read_csv(std::istream& in) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string cell;
    bool in_quotes = false;
    bool any = false;
    char c;
    while (in.get(c)) {
        any = true;
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    cell.push_back('"');
                    in.get(c);
                } else {
                    in_quotes = false;
                }
            } else {
                cell.push_back(c);
            }
            continue;
        }
        switch (c) {
        case '"':
            in_quotes = true;
            break;
        case ',':
            row.push_back(std::move(cell));
            cell.clear();
            break;
        case '\r':
            break;
        case '\n':
            row.push_back(std::move(cell));
            cell.clear();
            rows.push_back(std::move(row));
            row.clear();
            break;
        default:
            cell.push_back(c);
        }
    }
    if (any && (!cell.empty() || !row.empty())) {
        row.push_back(std::move(cell));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::optional<McqExample> example_from_csv_row(
    const std::unordered_map<std::string, size_t>& col,
    const std::vector<std::string>& cells, std::string& error) {
    auto get = [&](const std::string& name) -> std::optional<std::string> {
        auto it = col.find(name);
        if (it == col.end() || it->second >= cells.size()) return std::nullopt;
        return cells[it->second];
    };
    McqExample e;
    auto id = get("id");
    auto question = get("question");
    auto choices = get("choices");
    if (!id || !question || !choices) {
        error = "missing required cell (id, question, or choices)";
        return std::nullopt;
    }
    e.id = *id;
    e.question = *question;
    try {
        json arr = json::parse(*choices);
        if (!arr.is_array()) throw std::runtime_error("not an array");
        e.choices = arr.get<std::vector<std::string>>();
    } catch (const std::exception& ex) {
        error = std::string("choices cell is not a JSON string array: ") + ex.what();
        return std::nullopt;
    }
    if (auto gi = get("gold_index"); gi && !gi->empty()) {
        try {
            e.gold_index = std::stoi(*gi);
        } catch (const std::exception&) {
            error = "gold_index is not an integer: " + *gi;
            return std::nullopt;
        }
    } else if (auto ans = get("answer"); ans && !ans->empty()) {
        char letter = static_cast<char>(
            std::toupper(static_cast<unsigned char>((*ans)[0])));
        if (letter < 'A' || letter > 'Z') {
            error = "answer cell is not a letter: " + *ans;
            return std::nullopt;
        }
        e.gold_index = letter - 'A';
    } else {
        error = "missing gold_index / answer cell";
        return std::nullopt;
    }
    if (auto s = get("subject"); s && !s->empty()) e.subject = *s;
    if (auto s = get("split"); s && !s->empty()) {
        try {
            e.split = split_from_name(*s);
        } catch (const std::exception& ex) {
            error = ex.what();
            return std::nullopt;
        }
    }
    if (auto s = get("sba"); s && !s->empty()) e.sba = (*s == "1" || *s == "true");
    return e;
}

} // namespace

std::string to_canonical_line(const McqExample& e) {
    return example_to_json(e).dump();
}

McqExample from_canonical_line(const std::string& line) {
    return example_from_json(json::parse(line));
}

IngestResult ingest_dataset(const std::string& path, DatasetFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read dataset file: " + path);

    IngestResult result;
    result.dataset.name = std::filesystem::path(path).stem().string();

    std::vector<std::pair<int, McqExample>> parsed; // (row number, example)

    if (format == DatasetFormat::kCanonicalJsonl) {
        std::string line;
        int row = 0;
        while (std::getline(in, line)) {
            ++row;
            if (line.empty()) continue;
            try {
                parsed.emplace_back(row, from_canonical_line(line));
            } catch (const std::exception& ex) {
                result.report.errors.push_back(
                    {row, std::string("malformed record: ") + ex.what()});
            }
        }
    } else {
        auto rows = read_csv(in);
        if (rows.empty()) throw std::runtime_error("empty CSV file: " + path);
        std::unordered_map<std::string, size_t> col;
        for (size_t i = 0; i < rows[0].size(); ++i) col[rows[0][i]] = i;
        for (size_t r = 1; r < rows.size(); ++r) {
            int row = static_cast<int>(r) + 1;
            std::string error;
            if (auto e = example_from_csv_row(col, rows[r], error)) {
                parsed.emplace_back(row, std::move(*e));
            } else {
                result.report.errors.push_back({row, error});
            }
        }
    }

    std::unordered_set<std::string> ids;
    for (auto& [row, e] : parsed) {
        ValidationReport check;
        check_example(e, row, check);
        if (!check.ok()) {
            result.report.errors.insert(result.report.errors.end(),
                                        check.errors.begin(), check.errors.end());
            continue;
        }
        if (!ids.insert(e.id).second) {
            result.report.errors.push_back({row, "duplicate id: " + e.id});
            continue;
        }
        auto& bucket = e.split == Split::kFewshotPool
                           ? result.dataset.fewshot_pool
                           : result.dataset.examples;
        bucket.push_back(std::move(e));
    }

    if (result.dataset.examples.empty()) {
        throw std::runtime_error("dataset has no valid eval examples: " + path);
    }
    return result;
}

void write_dataset(const Dataset& d, const std::string& path) {
    auto report = validate_dataset(d);
    if (!report.ok()) {
        std::ostringstream msg;
        msg << "refusing to write invalid dataset (" << report.error_count()
            << " errors; first: row " << report.errors.front().row << ", "
            << report.errors.front().reason << ")";
        throw std::invalid_argument(msg.str());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write dataset file: " + path);
    for (const auto& e : d.examples) out << to_canonical_line(e) << '\n';
    for (const auto& e : d.fewshot_pool) out << to_canonical_line(e) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::uint64_t dataset_content_hash(const Dataset& d) {
    std::uint64_t h = fnv1a64(d.name);
    for (const auto& e : d.examples) h = fnv1a64(to_canonical_line(e), h ^ 0x1);
    for (const auto& e : d.fewshot_pool) h = fnv1a64(to_canonical_line(e), h ^ 0x2);
    return h;
}

} // namespace wicked
