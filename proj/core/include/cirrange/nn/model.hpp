// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string_view>
#include <variant>
#include <vector>

#include "cirrange/nn/tensor.hpp"

namespace cirrange::nn {

struct Conv2d {
    Tensor weights;  // [3, 3, Cin, Cout]
    Tensor bias;     // [Cout]
};
struct MaxPool2 {};
struct Flatten {};
struct Dense {
    Tensor weights;  // [units, fan_in]
    Tensor bias;     // [units]
};
struct Relu {};

using Layer = std::variant<Conv2d, MaxPool2, Flatten, Dense, Relu>;

/// Zero-initialised layers.
Conv2d make_conv2d(std::size_t in_channels, std::size_t filters);
Dense make_dense(std::size_t fan_in, std::size_t units);

std::string_view layer_name(const Layer& layer);

/// Per-sample activations cached by forward() for backward().
struct Workspace {
    std::vector<Tensor> activations;  // activations[i] is the input of layer i
    std::vector<std::vector<double>> patches;
    std::vector<double> scratch;
    Tensor grad, grad_next;
};

/// Sequential stack of layers over a fixed per-sample input shape. Shape
/// composition is checked on construction.
class Model {
public:
    Model() = default;
    Model(Shape input_shape, std::vector<Layer> layers);

    const Shape& input_shape() const { return input_shape_; }
    const Shape& output_shape() const { return shapes_.back(); }
    /// shapes()[i] is the output shape of layer i.
    std::vector<Shape> layer_output_shapes() const { return {shapes_.begin() + 1, shapes_.end()}; }
    const std::vector<Layer>& layers() const { return layers_; }

    std::size_t parameter_count() const;
    /// Trainable tensors in layer order (weights before bias).
    std::vector<Tensor*> parameters();
    std::vector<const Tensor*> parameters() const;
    /// Layer index owning each entry of parameters().
    std::vector<std::size_t> parameter_layers() const;
    std::vector<Tensor> zero_gradients() const;

    /// Kaiming-uniform weights (bound sqrt(6 / fan_in)), zero biases.
    void init_kaiming_uniform(std::uint64_t seed);

    Tensor forward(const Tensor& input) const;
    /// Forward pass that keeps activations in \p ws; returns the output.
    const Tensor& forward(const Tensor& input, Workspace& ws) const;
    /// Adds parameter gradients of the cached pass into \p grads.
    void backward(Workspace& ws, const Tensor& grad_output, std::vector<Tensor>& grads) const;

private:
    Shape input_shape_;
    std::vector<Layer> layers_;
    std::vector<Shape> shapes_;  // shapes_[0] = input, shapes_[i+1] = output of layer i
    std::vector<std::size_t> param_offset_;
};

}  // namespace cirrange::nn
