#pragma once

#include <cstdint>
#include <string_view>

namespace lbpf {

/// FNV-1a, 64-bit. Used for the input-content hashes embedded in caches,
/// models, and reports so stale pairings are caught at load time.
inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const char c : bytes) {
        h ^= std::uint64_t(std::uint8_t(c));
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace lbpf
