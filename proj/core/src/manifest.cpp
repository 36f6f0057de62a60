#include "wicked/manifest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include "wicked/hash.hpp"
#include "wicked/dataset.hpp"

#include <nlohmann/json.hpp>

namespace wicked {

using json = nlohmann::json;

std::string iso8601_utc_now() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string hash_settings(const std::map<std::string, std::string>& settings) {
    std::uint64_t h = fnv1a64("wicked-settings");
    for (const auto& [key, value] : settings) {
        h = fnv1a64(key, h ^ 0x31);
        h = fnv1a64(value, h ^ 0x32);
    }
    return to_hex(h);
}

void write_manifest(const RunManifest& manifest, const std::string& path) {
    json j;
    j["tool_version"] = manifest.tool_version;
    j["command"] = manifest.command;
    j["config_hash"] = manifest.config_hash;
    j["dataset_hash"] = manifest.dataset_hash;
    j["seeds"] = manifest.seeds;
    j["nota_text"] = manifest.nota_text;
    j["template_fingerprints"] = manifest.template_fingerprints;
    j["endpoint"] = {{"base_url", manifest.endpoint_base_url},
                     {"model", manifest.endpoint_model}};
    j["created_at"] = manifest.created_at;
    j["artifacts"] = manifest.artifacts;
    j["settings"] = manifest.settings;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write manifest: " + path);
    out << j.dump(2) << '\n';
}

RunManifest read_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read manifest: " + path);
    json j = json::parse(in);
    RunManifest m;
    m.tool_version = j.at("tool_version").get<std::string>();
    m.command = j.at("command").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.dataset_hash = j.at("dataset_hash").get<std::string>();
    m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    m.nota_text = j.at("nota_text").get<std::string>();
    m.template_fingerprints =
        j.at("template_fingerprints").get<std::map<std::string, std::string>>();
    m.endpoint_base_url = j.at("endpoint").at("base_url").get<std::string>();
    m.endpoint_model = j.at("endpoint").at("model").get<std::string>();
    m.created_at = j.at("created_at").get<std::string>();
    m.artifacts = j.at("artifacts").get<std::vector<std::string>>();
    m.settings = j.at("settings").get<std::map<std::string, std::string>>();
    return m;
}

} // namespace wicked
