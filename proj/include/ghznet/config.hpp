#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ghznet {

/// Flat `key = value` text with `[section]` headers. Keys are addressed as
/// "section.key"; `#` and `;` start comments. Order of first appearance is
/// kept so the file can be echoed back verbatim into output headers.
class ConfigFile {
public:
    /// Throws ConfigError on syntax errors and duplicate keys.
    static ConfigFile parse(std::istream& in, std::string_view origin = "config");
    static ConfigFile parse_string(std::string_view text);

    std::optional<std::string> get(std::string_view key) const;
    bool has(std::string_view key) const { return get(key).has_value(); }
    void set(std::string key, std::string value);

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

// Locale-independent value parsing. Errors are ConfigErrors naming `key`.
double parse_double(std::string_view key, std::string_view text);
std::int64_t parse_int(std::string_view key, std::string_view text);
bool parse_bool(std::string_view key, std::string_view text);
/// Comma-separated list, or `start:stop:step` with stop included when it is
/// hit to within 1e-9.
std::vector<double> parse_double_list(std::string_view key, std::string_view text);
std::vector<std::int64_t> parse_int_list(std::string_view key, std::string_view text);

} // namespace ghznet
