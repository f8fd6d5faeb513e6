#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "tsvc/core.hpp"

namespace tsvc {

using Rng = std::mt19937_64;

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent stream for a (seed, index...) coordinate.
inline Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> coords) {
    std::uint64_t h = mix64(seed);
    for (auto c : coords) h = mix64(h ^ mix64(c + 0x632be59bd9b4e019ULL));
    return Rng(h);
}

inline Matrix standard_normal(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> z(0.0, 1.0);
    Matrix out(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = z(rng);
    return out;
}

inline Vector standard_normal(Rng& rng, Eigen::Index size) {
    std::normal_distribution<double> z(0.0, 1.0);
    Vector out(size);
    for (Eigen::Index i = 0; i < size; ++i) out[i] = z(rng);
    return out;
}

}  // namespace tsvc
