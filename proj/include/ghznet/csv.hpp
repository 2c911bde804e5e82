#pragma once

#include <cstdio>
#include <optional>
#include <string>

namespace ghznet {

/// Locale-independent float formatting with 9 significant digits.
inline std::string fmt_double(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

inline std::string fmt_optional(const std::optional<double>& x)
{
    return x ? fmt_double(*x) : std::string("NA");
}

} // namespace ghznet
