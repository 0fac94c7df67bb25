#pragma once

#include <cstdint>
#include <random>

#include "pico/core/tensor.hpp"

namespace pico {

// Every random stream in the library is caller-owned and seeded explicitly.
using Rng = std::mt19937_64;

inline double uniform01(Rng& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline bool bernoulli(Rng& rng, double p) {
    return std::bernoulli_distribution(p)(rng);
}

inline Vector standard_normal(Rng& rng, Eigen::Index n) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = normal(rng);
    return out;
}

inline Vector uniform_vector(Rng& rng, Eigen::Index n) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vector out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = u(rng);
    return out;
}

// Derives an independent child seed; keeps sub-streams reproducible when a
// pipeline stage is inserted or skipped.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace pico
