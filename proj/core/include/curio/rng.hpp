#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace curio {

// Seed mixing and uniform sampling helpers. All randomness in the project
// flows through named substreams derived from a single run seed, so that
// adding or removing one consumer (e.g. evaluation) never perturbs another.

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t fnv1a(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Deterministic engine for the substream `label[index]` of a run seed.
inline std::mt19937_64 substream(uint64_t seed, std::string_view label, uint64_t index = 0) {
    uint64_t s = splitmix64(seed ^ splitmix64(fnv1a(label) + 0x51ed270b * index));
    return std::mt19937_64(s);
}

// Uniform double in [0, 1). Built directly from engine bits so results do not
// depend on the standard library's distribution implementation.
inline double canonical(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform double in [lo, hi).
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * canonical(rng);
}

// Uniform integer in [0, n). n must be positive.
inline int uniform_int(std::mt19937_64& rng, int n) {
    return static_cast<int>(rng() % static_cast<uint64_t>(n));
}

} // namespace curio
