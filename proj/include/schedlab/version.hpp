#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace schedlab {

inline constexpr std::string_view kVersion = "0.1.0";

/// FNV-1a 64-bit, used to stamp artifacts with a hash of their effective
/// configuration.
inline std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value);

}  // namespace schedlab
