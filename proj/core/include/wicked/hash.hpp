#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace wicked {

// FNV-1a over raw bytes. Stable across platforms, unlike std::hash.
constexpr std::uint64_t fnv1a64(std::string_view data,
                                std::uint64_t h = 14695981039346656037ull) {
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// splitmix64 finalizer (gamma pre-add included).
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::string to_hex(std::uint64_t v);

// One independent deterministic stream per (seed, domain, id). The domain
// string separates unrelated consumers (transformation draws vs mock picks)
// so they never share a stream even under the same seed and id.
class SeededStream {
  public:
    SeededStream(std::uint64_t seed, std::string_view domain, std::string_view id)
        : state_(mix64(mix64(seed ^ fnv1a64(domain)) ^ fnv1a64(id))) {}

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform draw in [0, n) via 128-bit multiply-shift.
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * n) >> 64);
    }

  private:
    std::uint64_t state_;
};

} // namespace wicked
