#pragma once

#include <cstdio>
#include <cstdlib>
#include <string>

namespace depara {

/// Rounds to 9 significant digits; JSON output goes through this so the
/// emitted text is identical across platforms.
inline double round_sig9(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", value);
    return std::strtod(buf, nullptr);
}

inline std::string format_sig9(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", value);
    return buf;
}

} // namespace depara
