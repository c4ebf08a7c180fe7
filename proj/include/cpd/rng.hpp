#pragma once

#include <cstdint>
#include <random>

namespace cpd {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Seed of substream `index` under a root seed. Substreams are keyed by index
/// only, so results never depend on which thread consumed which substream.
inline std::uint64_t substream_seed(std::uint64_t root, std::uint64_t index,
                                    std::uint64_t tag = 0) {
    return splitmix64(splitmix64(root ^ splitmix64(tag)) + index);
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t root, std::uint64_t index, std::uint64_t tag = 0) {
    return Engine(substream_seed(root, index, tag));
}

}  // namespace cpd
