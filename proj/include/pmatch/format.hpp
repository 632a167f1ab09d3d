#pragma once

#include <charconv>
#include <cstdint>
#include <string>

// Number-to-text helpers shared by the serializers.  Doubles use the
// shortest representation that round-trips, so emitted files are
// byte-stable across platforms and never lose precision.

namespace pmatch::format {

inline std::string fmt_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string fmt_int(std::int64_t v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace pmatch::format
