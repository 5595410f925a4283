#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace bodybrain {

using Rng = std::mt19937_64;

// splitmix64 finaliser; used to derive independent streams from one master seed.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> salt) {
    std::uint64_t h = mix64(seed);
    for (auto s : salt)
        h = mix64(h ^ mix64(s + 0x632be59bd9b4e019ULL));
    return h;
}

inline Rng make_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> salt = {}) {
    return Rng{derive_seed(seed, salt)};
}

inline double uniform_real(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>{lo, hi}(rng);
}

inline double normal(Rng& rng, double mean, double stddev) {
    return std::normal_distribution<double>{mean, stddev}(rng);
}

inline bool bernoulli(Rng& rng, double p) {
    if (p <= 0.0)
        return false;
    if (p >= 1.0)
        return true;
    return std::uniform_real_distribution<double>{0.0, 1.0}(rng) < p;
}

template <typename Int>
Int uniform_int(Rng& rng, Int lo, Int hi) {
    return std::uniform_int_distribution<Int>{lo, hi}(rng);
}

} // namespace bodybrain
