#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "wicked/dataset.hpp"

namespace wicked {

enum class LabelProvenance { kRemoteLlm, kLabelFile, kConstant };

std::string provenance_name(LabelProvenance p);

struct SbaLabel {
    std::string example_id;
    bool is_sba = false;
    LabelProvenance provenance = LabelProvenance::kConstant;

    bool operator==(const SbaLabel&) const = default;
};

struct SbaLabelSet {
    std::map<std::string, SbaLabel> labels; // keyed by example_id

    bool has(const std::string& id) const { return labels.count(id) != 0; }
    std::optional<bool> is_sba(const std::string& id) const;

    // Fractions relative to the dataset's ids (eval split plus few-shot pool).
    double coverage(const Dataset& d) const;
    double sba_rate(const Dataset& d) const;

    bool operator==(const SbaLabelSet&) const = default;
};

// The classification prompt with the question block (question text plus its
// options, one per line) substituted into the question slot. Answers are a
// bare 1 (SBA) or 0 (SCA).
std::string build_sba_prompt(const McqExample& e);

// Content identity of a question for label caching: question text, choices,
// and gold index. Ids deliberately excluded so identical questions across
// benchmark versions share cache entries.
std::uint64_t example_content_hash(const McqExample& e);

// Append-only on-disk cache of (content-hash, bit). Reload replays the file
// in order, so later appends win.
class SbaCache {
  public:
    explicit SbaCache(std::string path);

    std::optional<bool> lookup(std::uint64_t content_hash) const;
    void store(std::uint64_t content_hash, bool is_sba);
    size_t size() const;

  private:
    std::string path_;
    std::unordered_map<std::uint64_t, bool> entries_;
    mutable std::mutex mu_;
};

class SbaProvider {
  public:
    virtual ~SbaProvider() = default;
    virtual LabelProvenance provenance() const = 0;
    virtual int max_in_flight() const { return 1; }
    // nullopt means the provider has no label for this example (file-backed
    // providers may cover only a subset). Remote failures throw.
    virtual std::optional<bool> classify(const McqExample& e) = 0;
};

// Labels everything SCA; the no-annotation baseline.
class ConstantScaProvider : public SbaProvider {
  public:
    LabelProvenance provenance() const override { return LabelProvenance::kConstant; }
    std::optional<bool> classify(const McqExample&) override { return false; }
};

class FileLabelProvider : public SbaProvider {
  public:
    explicit FileLabelProvider(SbaLabelSet labels) : labels_(std::move(labels)) {}
    LabelProvenance provenance() const override { return LabelProvenance::kLabelFile; }
    std::optional<bool> classify(const McqExample& e) override {
        return labels_.is_sba(e.id);
    }

  private:
    SbaLabelSet labels_;
};

// Classifies through a deterministic (temperature-0, few-token) chat
// completion. An answer that trims to neither 0 nor 1 is retried once and
// then recorded as SBA, the conservative side.
class RemoteLlmProvider : public SbaProvider {
  public:
    using CompleteFn = std::function<std::string(const std::string& prompt)>;

    explicit RemoteLlmProvider(CompleteFn complete, int max_in_flight = 8)
        : complete_(std::move(complete)), max_in_flight_(max_in_flight) {}

    LabelProvenance provenance() const override { return LabelProvenance::kRemoteLlm; }
    int max_in_flight() const override { return max_in_flight_; }
    std::optional<bool> classify(const McqExample& e) override;

  private:
    CompleteFn complete_;
    int max_in_flight_;
};

// Labels every id of the dataset (eval split and few-shot pool). The cache,
// when given, is consulted by content hash before the provider and updated
// after. Any provider failure aborts with the unlabeled ids listed.
SbaLabelSet annotate_sba(const Dataset& d, SbaProvider& provider,
                         SbaCache* cache = nullptr);

// One JSON object per line; each object maps example ids to 0/1.
SbaLabelSet load_sba_labels(const std::string& path);
void write_sba_labels(const SbaLabelSet& labels, const std::string& path);

} // namespace wicked
