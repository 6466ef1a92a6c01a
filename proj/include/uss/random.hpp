#pragma once

#include <cstdint>
#include <random>

namespace uss {

// All simulation randomness flows through this engine. The conversions below
// are written out by hand so streams are identical across standard libraries.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seed for an independent stream identified by (seed, repetition, stream).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t repetition,
                                 std::uint64_t stream) noexcept {
    return splitmix64(splitmix64(splitmix64(seed) ^ repetition) ^ (stream * 0xd6e8feb86659fd93ULL));
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(Rng& rng, double p) {
    return uniform01(rng) < p;
}

// Unbiased integer in [0, n).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
    std::uint64_t v = rng();
    while (v >= limit) v = rng();
    return v % n;
}

}  // namespace uss
