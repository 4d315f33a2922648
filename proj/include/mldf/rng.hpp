#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace mldf {

// splitmix64 finalizer; used to derive independent child seeds from a
// master seed plus structural indices (layer, forest, fold, tree) so that
// results do not depend on execution order.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                              std::uint64_t c = 0) {
    std::uint64_t z = seed;
    for (std::uint64_t salt : {a + 1, b + 1, c + 1}) {
        z += 0x9e3779b97f4a7c15ULL * salt;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        z = z ^ (z >> 31);
    }
    return z;
}

// Unbiased draw from [0, n). Written out by hand instead of
// std::uniform_int_distribution, whose output is implementation-defined;
// this keeps seeded runs identical across standard libraries.
inline std::size_t rng_index(std::mt19937_64& rng, std::size_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r;
    do {
        r = rng();
    } while (r >= limit);
    return static_cast<std::size_t>(r % n);
}

inline double rng_real(std::mt19937_64& rng, double lo, double hi) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0,1)
    return lo + u * (hi - lo);
}

inline void shuffle_indices(std::vector<std::size_t>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = rng_index(rng, i);
        std::swap(v[i - 1], v[j]);
    }
}

// k distinct values from [0, n), ascending. Partial Fisher-Yates.
inline std::vector<std::size_t> sample_without_replacement(std::mt19937_64& rng, std::size_t n,
                                                           std::size_t k) {
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + rng_index(rng, n - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

}  // namespace mldf
