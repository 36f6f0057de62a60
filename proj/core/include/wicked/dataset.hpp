#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wicked {

enum class Split { kFewshotPool, kEval };

std::string split_name(Split s);
Split split_from_name(std::string_view name); // throws on unknown value

// One multiple-choice question. Option letters are never stored; they are
// derived from position at prompt time.
struct McqExample {
    std::string id;
    std::string question;
    std::vector<std::string> choices; // ordered, 2..26 entries
    int gold_index = 0;
    std::optional<std::string> subject;
    Split split = Split::kEval;
    std::optional<bool> sba; // absent until annotated

    bool operator==(const McqExample&) const = default;
};

struct Dataset {
    std::string name;
    std::vector<McqExample> examples;     // the eval split, M > 0
    std::vector<McqExample> fewshot_pool; // ids disjoint from examples

    bool operator==(const Dataset&) const = default;
};

struct ValidationIssue {
    int row = 0; // 1-based row number for files, ordinal for in-memory checks
    std::string reason;

    bool operator==(const ValidationIssue&) const = default;
};

struct ValidationReport {
    std::vector<ValidationIssue> errors;

    int error_count() const { return static_cast<int>(errors.size()); }
    bool ok() const { return errors.empty(); }
};

enum class DatasetFormat { kCanonicalJsonl, kCsv };

struct IngestResult {
    Dataset dataset;
    ValidationReport report; // rejected rows, one entry each
};

// Collapse whitespace runs to single spaces and trim; used for duplicate
// detection only, stored texts are never modified.
std::string normalize_whitespace(std::string_view text);

// Per-example invariant check; reasons reference the given row number.
void check_example(const McqExample& e, int row, ValidationReport& out);

ValidationReport validate_dataset(const Dataset& d);

// Rows that violate an invariant are reported and skipped; a dataset with no
// surviving eval examples or an unreadable file throws std::runtime_error.
IngestResult ingest_dataset(const std::string& path, DatasetFormat format);

// Refuses (throws std::invalid_argument) if validate_dataset reports errors.
void write_dataset(const Dataset& d, const std::string& path);

// Canonical one-record-per-line form, stable field order; round-trip safe.
std::string to_canonical_line(const McqExample& e);
McqExample from_canonical_line(const std::string& line); // throws on malformed

std::uint64_t dataset_content_hash(const Dataset& d);

} // namespace wicked
