// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "cirrange/nn/tensor.hpp"

// Stateless forward/backward kernels. Image tensors are [H, W, C]; conv
// weights are [3, 3, Cin, Cout]; dense weights are [units, fan_in].
namespace cirrange::nn {

inline constexpr std::size_t kKernel = 3;

/// Valid 3x3 cross-correlation, stride 1, plus per-channel bias.
Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);

struct Conv2dGrads {
    Tensor input;  // empty when not requested
    Tensor weights;
    Tensor bias;
};

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_output,
                            bool need_input_grad = true);

/// 2x2 max pooling, stride 2; a trailing odd row or column is dropped.
Tensor maxpool_forward(const Tensor& input);
/// Routes each upstream gradient to the first maximum of its window (row-major order).
Tensor maxpool_backward(const Tensor& input, const Tensor& grad_output);

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);

struct DenseGrads {
    Tensor input;
    Tensor weights;
    Tensor bias;
};

DenseGrads dense_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_output);

Tensor relu_forward(const Tensor& input);
/// Subgradient at exactly zero is zero.
Tensor relu_backward(const Tensor& input, const Tensor& grad_output);

/// Mean of squared differences over all elements.
double mse_loss(const Tensor& pred, const Tensor& target);
Tensor mse_grad(const Tensor& pred, const Tensor& target);

namespace detail {

// Kernels writing into caller-owned buffers; the Model hot path uses these to
// avoid per-call allocation. \p cols receives the [P, 9*Cin] patch matrix.
void conv2d_forward_into(const Tensor& input, const Tensor& weights, const Tensor& bias,
                         std::vector<double>& cols, Tensor& output);
void conv2d_backward_accumulate(const Tensor& input, const std::vector<double>& cols,
                                const Tensor& weights, const Tensor& grad_output,
                                Tensor* grad_input, Tensor& grad_weights, Tensor& grad_bias,
                                std::vector<double>& scratch);
void dense_backward_accumulate(const Tensor& input, const Tensor& weights, const Tensor& grad_output,
                               Tensor* grad_input, Tensor& grad_weights, Tensor& grad_bias);
void dense_forward_into(const Tensor& input, const Tensor& weights, const Tensor& bias, Tensor& output);
void maxpool_forward_into(const Tensor& input, Tensor& output);
/// With \p through_relu the pool input is taken to be a ReLU output and the
/// gradient is routed only to positive entries, which also applies that ReLU's backward.
void maxpool_backward_into(const Tensor& input, const Tensor& grad_output, Tensor& grad_input,
                           bool through_relu = false);
void relu_forward_into(const Tensor& input, Tensor& output);
void relu_backward_into(const Tensor& input, const Tensor& grad_output, Tensor& grad_input);

}  // namespace detail

}  // namespace cirrange::nn
