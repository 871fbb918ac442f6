#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace adaptivefl {

// Uniform double in [0, 1) with 53 random bits. Identical bit stream for a
// given mt19937_64 seed on every platform.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_range(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

// Uniform integer in [0, n), n >= 1. Rejection-free multiply-shift keeps the
// draw deterministic without relying on std::uniform_int_distribution.
inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

// Fisher-Yates with an explicit draw per step.
template <typename T>
void shuffle_in_place(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(uniform_index(rng, i));
        std::swap(v[i - 1], v[j]);
    }
}

// splitmix64 finalizer; used to derive decorrelated sub-seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace adaptivefl
