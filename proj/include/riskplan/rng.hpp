// Seed derivation and small sampling helpers. Per-item seeds are derived from
// a master seed by a counter-based split, so adding work items never perturbs
// the streams of earlier ones and worker count never changes results.
#pragma once

#include <cstdint>
#include <random>

namespace riskplan {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(splitmix64(master) ^ splitmix64(index * 0xD6E8FEB86659FD93ULL + 1));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

inline double uniform_double(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double gaussian_double(Rng& rng, double mean, double stddev) {
    std::normal_distribution<double> d(mean, stddev);
    return d(rng);
}

// Fisher-Yates with our own bounded draws; keeps shuffles pinned to the
// generator sequence rather than to library internals.
template <typename T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::uniform_int_distribution<std::size_t> d(0, i - 1);
        std::swap(v[i - 1], v[d(rng)]);
    }
}

}  // namespace riskplan
