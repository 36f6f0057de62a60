#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace wicked {

inline constexpr std::string_view kToolVersion = "0.1.0";

// Pinned record of everything a run depended on: seeds, wildcard text,
// template fingerprints, endpoint identity (never the key), resolved
// configuration hash. Every emitted artifact lists here.
struct RunManifest {
    std::string tool_version{kToolVersion};
    std::string command;
    std::string config_hash;
    std::string dataset_hash;
    std::vector<std::uint64_t> seeds;
    std::string nota_text;
    std::map<std::string, std::string> template_fingerprints;
    std::string endpoint_base_url; // empty for mock backends
    std::string endpoint_model;
    std::string created_at; // ISO-8601 UTC
    std::vector<std::string> artifacts;
    std::map<std::string, std::string> settings; // mode, shots, estimator, ...
};

std::string iso8601_utc_now();

// Hex hash over the sorted resolved configuration.
std::string hash_settings(const std::map<std::string, std::string>& settings);

void write_manifest(const RunManifest& manifest, const std::string& path);
RunManifest read_manifest(const std::string& path);

} // namespace wicked
