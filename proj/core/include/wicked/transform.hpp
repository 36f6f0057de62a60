#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wicked/dataset.hpp"
#include "wicked/hash.hpp"
#include "wicked/sba.hpp"

namespace wicked {

inline constexpr std::string_view kDefaultNotaText = "None of the above";

// Stream domain for the removal draw; one draw per transformed example.
inline constexpr std::string_view kTransformDomain = "transform";

enum class WickedStatus { kTransformed, kCopiedSba };

std::string status_name(WickedStatus s);
WickedStatus status_from_name(std::string_view name);

// Audit record: what happened to one source example.
struct WickedRecord {
    std::string source_id;
    WickedStatus status = WickedStatus::kTransformed;
    std::optional<int> removed_index;
    std::optional<std::string> removed_text;
    bool gold_was_removed = false;

    bool operator==(const WickedRecord&) const = default;
};

struct WickedExample {
    McqExample example;
    WickedRecord record;

    bool operator==(const WickedExample&) const = default;
};

struct WickedVariant {
    std::uint64_t seed = 0;
    Dataset dataset; // transformed examples and few-shot pool, source order
    std::vector<WickedRecord> records; // aligned: examples, then pool

    const WickedRecord* record_for(const std::string& source_id) const;
};

struct TransformOptions {
    std::string nota_text{kDefaultNotaText};
};

// SBA examples are copied verbatim and consume no draw. Otherwise one choice
// index is drawn uniformly, that choice dropped (order of the rest
// preserved), the wildcard appended last, and the gold index remapped: to the
// wildcard when the gold choice was dropped, to its shifted position
// otherwise.
WickedExample transform_example(const McqExample& e, bool is_sba,
                                SeededStream& rng,
                                const TransformOptions& options = {});

// Deterministic function of (d, seed, labels): every example (including the
// few-shot pool) is passed through transform_example with a per-example
// stream derived from (seed, id). Labels must cover every id.
WickedVariant make_variant(const Dataset& d, std::uint64_t seed,
                           const SbaLabelSet& labels,
                           const TransformOptions& options = {});

// One variant per seed; seeds must be distinct.
std::vector<WickedVariant> make_variants(const Dataset& d,
                                         const std::vector<std::uint64_t>& seeds,
                                         const SbaLabelSet& labels,
                                         const TransformOptions& options = {});

// Variant datasets use the canonical record format; the records sidecar has
// a header line (seed, source dataset name) followed by one record per line.
void write_variant(const WickedVariant& v, const std::string& dataset_path,
                   const std::string& records_path);
WickedVariant read_variant(const std::string& dataset_path,
                           const std::string& records_path);

} // namespace wicked
