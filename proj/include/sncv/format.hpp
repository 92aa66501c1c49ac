#pragma once

#include <cmath>
#include <cstdio>
#include <string>

namespace sncv {

// Round-trip-exact, locale-independent double formatting; empty string for
// NaN so CSV cells stay machine-friendly.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string format_double(double v, int precision) {
    if (std::isnan(v)) return "";
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    return buf;
}

}  // namespace sncv
