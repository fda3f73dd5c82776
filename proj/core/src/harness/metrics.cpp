// SPDX-License-Identifier: Apache-2.0

#include "cirrange/harness/metrics.hpp"

#include <cmath>
#include <string>

#include "cirrange/errors.hpp"

namespace cirrange::harness {

Metrics compute_metrics(std::span<const double> predictions, std::span<const double> truths) {
    if (predictions.size() != truths.size()) {
        throw ArgumentError("metrics: " + std::to_string(predictions.size()) + " predictions for " +
                            std::to_string(truths.size()) + " truths");
    }
    const std::size_t n = predictions.size();
    if (n < 2) throw ArgumentError("metrics: standard deviation needs at least 2 samples");
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += predictions[i] - truths[i];
    const double bias = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = predictions[i] - truths[i] - bias;
        ss += d * d;
    }
    return Metrics{bias, std::sqrt(ss / static_cast<double>(n - 1)), n};
}

}  // namespace cirrange::harness
