// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "cirrange/nn/model.hpp"

namespace cirrange::nn {

struct GradCheckOptions {
    std::size_t n_params = 200;
    double h = 1e-6;
    std::uint64_t seed = 0;
    /// Multiplies the analytic gradient of the sampled parameter with the
    /// largest |gradient| by (1 + fault). Used to confirm the check can fail.
    double fault = 0.0;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t n_checked = 0;
};

/// Compares backprop gradients of mse(model(input), target) with central
/// differences on a random parameter subset. Per-parameter error is
/// |a - n| / max(|a| + |n|, 1e-8).
GradCheckReport gradient_check(const Model& model, const Tensor& input, const Tensor& target,
                               const GradCheckOptions& options = {});

}  // namespace cirrange::nn
