#pragma once

#include <cstdint>

#include "tsvc/core.hpp"
#include "tsvc/random.hpp"

namespace testing {

/// Standard-normal covariates with y = mu(X) + noise; the same seed always
/// yields the same dataset.
template <class Mean>
tsvc::Dataset normal_dataset(std::uint64_t seed, Eigen::Index n, Eigen::Index p, Mean mean, double noise = 1.0) {
    auto rng = tsvc::make_stream(seed, {0x7e57});
    tsvc::Matrix X = tsvc::standard_normal(rng, n, p);
    tsvc::Vector y = noise * tsvc::standard_normal(rng, n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] += mean(X.row(i));
    return tsvc::Dataset(std::move(y), std::move(X));
}

inline tsvc::Dataset noise_dataset(std::uint64_t seed, Eigen::Index n, Eigen::Index p) {
    return normal_dataset(seed, n, p, [](const auto&) { return 0.0; });
}

}  // namespace testing
