// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>

namespace cirrange::harness {

/// Ranging error statistics over signed errors (estimated - true).
struct Metrics {
    double bias_m = 0.0;
    double std_m = 0.0;  // sample standard deviation, n - 1 denominator
    std::size_t n = 0;
};

/// Throws ArgumentError for mismatched lengths or fewer than two samples.
Metrics compute_metrics(std::span<const double> predictions, std::span<const double> truths);

}  // namespace cirrange::harness
