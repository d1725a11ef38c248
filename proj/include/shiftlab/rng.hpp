#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace shiftlab {

// Seed for every randomized operation. Identical seed + identical inputs
// must give bit-identical outputs, so all sampling below avoids
// implementation-defined std distributions.
struct RngSeed {
    std::uint64_t value = 0;
};

namespace rng {

// SplitMix64 output function; used as a counter-based stream so replicate r
// of a seeded run gets an independent, O(1)-derivable sub-seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t substream_seed(RngSeed seed, std::uint64_t replicate) {
    return splitmix64(seed.value + 0x9E3779B97F4A7C15ULL * (replicate + 1));
}

inline std::mt19937_64 make_engine(std::uint64_t seed) {
    return std::mt19937_64(seed);
}

// Unbiased draw in [0, n) by rejection; the engine is standard-specified,
// so results are stable across platforms and library versions.
inline std::uint64_t bounded(std::mt19937_64& gen, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = gen();
    } while (x >= limit);
    return x % n;
}

// Fisher-Yates with explicit bounded draws.
template <typename T>
void shuffle(std::vector<T>& items, std::mt19937_64& gen) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(bounded(gen, i));
        std::swap(items[i - 1], items[j]);
    }
}

inline double uniform01(std::mt19937_64& gen) {
    // 53-bit mantissa in [0, 1)
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

}  // namespace rng
}  // namespace shiftlab
