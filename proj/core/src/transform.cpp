#include "wicked/transform.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace wicked {

using json = nlohmann::json;

std::string status_name(WickedStatus s) {
    return s == WickedStatus::kCopiedSba ? "copied_sba" : "transformed";
}

WickedStatus status_from_name(std::string_view name) {
    if (name == "transformed") return WickedStatus::kTransformed;
    if (name == "copied_sba") return WickedStatus::kCopiedSba;
    throw std::runtime_error("unknown record status: " + std::string(name));
}

const WickedRecord* WickedVariant::record_for(const std::string& source_id) const {
    for (const auto& r : records) {
        if (r.source_id == source_id) return &r;
    }
    return nullptr;
}

WickedExample transform_example(const McqExample& e, bool is_sba,
                                SeededStream& rng,
                                const TransformOptions& options) {
    WickedExample out;
    out.record.source_id = e.id;

    if (is_sba) {
        out.example = e;
        out.record.status = WickedStatus::kCopiedSba;
        return out;
    }

    const int n = static_cast<int>(e.choices.size());
    const int removed = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));

    out.example = e;
    out.example.choices.clear();
    out.example.choices.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        if (i != removed) out.example.choices.push_back(e.choices[static_cast<size_t>(i)]);
    }
    out.example.choices.push_back(options.nota_text);

    out.record.status = WickedStatus::kTransformed;
    out.record.removed_index = removed;
    out.record.removed_text = e.choices[static_cast<size_t>(removed)];
    out.record.gold_was_removed = removed == e.gold_index;

    if (out.record.gold_was_removed) {
        out.example.gold_index = n - 1; // the wildcard slot
    } else if (removed < e.gold_index) {
        out.example.gold_index = e.gold_index - 1;
    }
    return out;
}

namespace {

void require_coverage(const Dataset& d, const SbaLabelSet& labels) {
    std::vector<std::string> missing;
    auto check = [&](const std::vector<McqExample>& list) {
        for (const auto& e : list) {
            if (!labels.has(e.id)) missing.push_back(e.id);
        }
    };
    check(d.examples);
    check(d.fewshot_pool);
    if (!missing.empty()) {
        std::ostringstream msg;
        msg << "missing SBA labels for ids:";
        for (const auto& id : missing) msg << ' ' << id;
        throw std::runtime_error(msg.str());
    }
}

} // namespace

WickedVariant make_variant(const Dataset& d, std::uint64_t seed,
                           const SbaLabelSet& labels,
                           const TransformOptions& options) {
    require_coverage(d, labels);

    WickedVariant variant;
    variant.seed = seed;
    variant.dataset.name = d.name;

    auto run = [&](const std::vector<McqExample>& src, std::vector<McqExample>& dst) {
        dst.reserve(src.size());
        for (const auto& e : src) {
            SeededStream rng(seed, kTransformDomain, e.id);
            auto we = transform_example(e, *labels.is_sba(e.id), rng, options);
            dst.push_back(std::move(we.example));
            variant.records.push_back(std::move(we.record));
        }
    };
    run(d.examples, variant.dataset.examples);
    run(d.fewshot_pool, variant.dataset.fewshot_pool);
    return variant;
}

std::vector<WickedVariant> make_variants(const Dataset& d,
                                         const std::vector<std::uint64_t>& seeds,
                                         const SbaLabelSet& labels,
                                         const TransformOptions& options) {
    std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
    if (unique.size() != seeds.size()) {
        throw std::invalid_argument("variant seeds must be distinct");
    }
    std::vector<WickedVariant> variants;
    variants.reserve(seeds.size());
    for (auto seed : seeds) {
        variants.push_back(make_variant(d, seed, labels, options));
    }
    return variants;
}

namespace {

json record_to_json(const WickedRecord& r) {
    json j;
    j["source_id"] = r.source_id;
    j["status"] = status_name(r.status);
    if (r.removed_index) j["removed_index"] = *r.removed_index;
    if (r.removed_text) j["removed_text"] = *r.removed_text;
    j["gold_was_removed"] = r.gold_was_removed;
    return j;
}

WickedRecord record_from_json(const json& j) {
    WickedRecord r;
    r.source_id = j.at("source_id").get<std::string>();
    r.status = status_from_name(j.at("status").get<std::string>());
    if (j.contains("removed_index")) r.removed_index = j["removed_index"].get<int>();
    if (j.contains("removed_text")) {
        r.removed_text = j["removed_text"].get<std::string>();
    }
    r.gold_was_removed = j.at("gold_was_removed").get<bool>();
    return r;
}

} // namespace

void write_variant(const WickedVariant& v, const std::string& dataset_path,
                   const std::string& records_path) {
    write_dataset(v.dataset, dataset_path);
    std::ofstream out(records_path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write records file: " + records_path);
    json header;
    header["type"] = "wicked_records";
    header["seed"] = v.seed;
    header["source_name"] = v.dataset.name;
    out << header.dump() << '\n';
    for (const auto& r : v.records) out << record_to_json(r).dump() << '\n';
    if (!out) throw std::runtime_error("write failed: " + records_path);
}

WickedVariant read_variant(const std::string& dataset_path,
                           const std::string& records_path) {
    WickedVariant v;
    auto ingest = ingest_dataset(dataset_path, DatasetFormat::kCanonicalJsonl);
    if (!ingest.report.ok()) {
        throw std::runtime_error("variant dataset has invalid rows: " + dataset_path);
    }
    v.dataset = std::move(ingest.dataset);

    std::ifstream in(records_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read records file: " + records_path);
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("records file is empty: " + records_path);
    }
    json header = json::parse(line);
    if (header.value("type", "") != "wicked_records") {
        throw std::runtime_error("records file lacks a wicked_records header: " +
                                 records_path);
    }
    v.seed = header.at("seed").get<std::uint64_t>();
    if (header.contains("source_name")) {
        v.dataset.name = header["source_name"].get<std::string>();
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        v.records.push_back(record_from_json(json::parse(line)));
    }
    return v;
}

} // namespace wicked
