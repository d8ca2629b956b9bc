#pragma once

#include <cstdint>
#include <random>

namespace fpg {

// Independent engine for stream (seed, a, b). Every path, draw or replication
// gets its own, so results never depend on scheduling.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v); };
    auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
    std::seed_seq seq{lo(seed), hi(seed), lo(a), hi(a), lo(b), hi(b)};
    return std::mt19937_64(seq);
}

}  // namespace fpg
