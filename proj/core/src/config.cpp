#include "wicked/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace wicked {

namespace {

std::string trim(const std::string& s) {
    auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

} // namespace

KvConfig KvConfig::parse_text(const std::string& text) {
    KvConfig config;
    std::istringstream in(text);
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.resize(hash);
        }
        std::string trimmed = trim(line);
        if (trimmed.empty()) continue;
        auto eq = trimmed.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("config line " + std::to_string(row) +
                                     " is not key = value: " + trimmed);
        }
        std::string key = trim(trimmed.substr(0, eq));
        std::string value = trim(trimmed.substr(eq + 1));
        if (key.empty()) {
            throw std::runtime_error("config line " + std::to_string(row) +
                                     " has an empty key");
        }
        config.values[key] = value;
    }
    return config;
}

KvConfig KvConfig::parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_text(buffer.str());
}

std::optional<std::string> KvConfig::get(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) return std::nullopt;
    return it->second;
}

std::string resolve_setting(const std::optional<std::string>& flag,
                            const KvConfig& file, const std::string& key,
                            const std::string& env_name,
                            const std::string& fallback) {
    if (flag) return *flag;
    if (auto v = file.get(key)) return *v;
    if (!env_name.empty()) {
        if (const char* env = std::getenv(env_name.c_str()); env && *env) {
            return env;
        }
    }
    return fallback;
}

} // namespace wicked
