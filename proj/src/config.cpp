#include "ghznet/config.hpp"

#include "ghznet/protocol.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <sstream>

namespace ghznet {

namespace {

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view text, std::string_view expected)
{
    throw ConfigError(std::string(key) + ": expected " + std::string(expected) + ", got '" + std::string(text) +
                      "'");
}

std::vector<std::string_view> split(std::string_view text, char sep)
{
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(sep, start);
        parts.push_back(trim(text.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return parts;
}

} // namespace

ConfigFile ConfigFile::parse(std::istream& in, std::string_view origin)
{
    ConfigFile cfg;
    std::string line;
    std::string section;
    int lineno = 0;
    auto where = [&] { return std::string(origin) + ":" + std::to_string(lineno) + ": "; };
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view s = line;
        if (const auto c = s.find_first_of("#;"); c != std::string_view::npos)
            s = s.substr(0, c);
        s = trim(s);
        if (s.empty())
            continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw ConfigError(where() + "unterminated section header");
            section = std::string(trim(s.substr(1, s.size() - 2)));
            if (section.empty())
                throw ConfigError(where() + "empty section name");
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(where() + "expected 'key = value'");
        const auto key = trim(s.substr(0, eq));
        const auto value = trim(s.substr(eq + 1));
        if (key.empty())
            throw ConfigError(where() + "empty key");
        if (section.empty())
            throw ConfigError(where() + "key '" + std::string(key) + "' outside a [section]");
        std::string full = section + "." + std::string(key);
        if (cfg.has(full))
            throw ConfigError(where() + full + ": duplicate key");
        cfg.entries_.emplace_back(std::move(full), std::string(value));
    }
    return cfg;
}

ConfigFile ConfigFile::parse_string(std::string_view text)
{
    std::istringstream in{std::string(text)};
    return parse(in, "config");
}

std::optional<std::string> ConfigFile::get(std::string_view key) const
{
    for (const auto& [k, v] : entries_)
        if (k == key)
            return v;
    return std::nullopt;
}

void ConfigFile::set(std::string key, std::string value)
{
    for (auto& [k, v] : entries_)
        if (k == key) {
            v = std::move(value);
            return;
        }
    entries_.emplace_back(std::move(key), std::move(value));
}

double parse_double(std::string_view key, std::string_view text)
{
    text = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v))
        bad_value(key, text, "a number");
    return v;
}

std::int64_t parse_int(std::string_view key, std::string_view text)
{
    text = trim(text);
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
        bad_value(key, text, "an integer");
    return v;
}

bool parse_bool(std::string_view key, std::string_view text)
{
    text = trim(text);
    if (text == "true" || text == "yes" || text == "1")
        return true;
    if (text == "false" || text == "no" || text == "0")
        return false;
    bad_value(key, text, "true or false");
}

std::vector<double> parse_double_list(std::string_view key, std::string_view text)
{
    text = trim(text);
    if (text.find(':') != std::string_view::npos) {
        const auto parts = split(text, ':');
        if (parts.size() != 3)
            bad_value(key, text, "start:stop:step");
        const double start = parse_double(key, parts[0]);
        const double stop = parse_double(key, parts[1]);
        const double step = parse_double(key, parts[2]);
        if (!(step > 0.0) || stop < start)
            bad_value(key, text, "start <= stop and a positive step");
        std::vector<double> out;
        // index-based to avoid accumulating rounding error
        for (std::int64_t i = 0;; ++i) {
            const double x = start + static_cast<double>(i) * step;
            if (x > stop + 1e-9)
                break;
            out.push_back(std::min(x, stop));
            if (out.size() > 100000)
                bad_value(key, text, "at most 100000 points");
        }
        return out;
    }
    std::vector<double> out;
    for (auto part : split(text, ','))
        out.push_back(parse_double(key, part));
    return out;
}

std::vector<std::int64_t> parse_int_list(std::string_view key, std::string_view text)
{
    std::vector<std::int64_t> out;
    for (auto part : split(trim(text), ','))
        out.push_back(parse_int(key, part));
    return out;
}

} // namespace ghznet
