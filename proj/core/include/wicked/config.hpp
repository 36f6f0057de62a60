#pragma once

#include <map>
#include <optional>
#include <string>

namespace wicked {

// `key = value` lines; '#' starts a comment; blank lines ignored.
struct KvConfig {
    std::map<std::string, std::string> values;

    static KvConfig parse_file(const std::string& path);
    static KvConfig parse_text(const std::string& text);

    std::optional<std::string> get(const std::string& key) const;
};

// Precedence: flag > config file > environment > fallback. `env_name` may be
// empty when no environment override exists for the setting.
std::string resolve_setting(const std::optional<std::string>& flag,
                            const KvConfig& file, const std::string& key,
                            const std::string& env_name,
                            const std::string& fallback);

} // namespace wicked
