// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cirrange/nn/model.hpp"
#include "cirrange/nn/tensor.hpp"

namespace cirrange::nn {

struct AdamHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First/second moment estimates per parameter tensor plus the shared step count.
struct AdamState {
    std::uint64_t t = 0;
    std::vector<Tensor> m;
    std::vector<Tensor> v;

    static AdamState zeros_like(const Model& model);
};

/// Elementwise Adam update of one flat parameter block at step \p t (already
/// incremented). Independent of how parameters are partitioned into blocks.
void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, std::uint64_t t, const AdamHyper& hyper);

/// One Adam step over every parameter tensor of \p model. Throws TrainingError
/// naming the layer index if any gradient is non-finite; nothing is modified
/// in that case.
void adam_step(Model& model, const std::vector<Tensor>& grads, AdamState& state, const AdamHyper& hyper);

}  // namespace cirrange::nn
