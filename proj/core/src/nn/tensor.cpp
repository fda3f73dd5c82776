// SPDX-License-Identifier: Apache-2.0

#include "cirrange/nn/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "cirrange/errors.hpp"

namespace cirrange::nn {

std::size_t shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string format_shape(const Shape& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_size(shape_) != data_.size()) {
        throw ShapeError("tensor shape " + format_shape(shape_) + " needs " +
                         std::to_string(shape_size(shape_)) + " values, got " + std::to_string(data_.size()));
    }
}

void Tensor::resize(const Shape& shape) {
    if (shape_ == shape) return;
    shape_ = shape;
    data_.resize(shape_size(shape_));
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor Tensor::reshaped(Shape shape) const {
    return Tensor(std::move(shape), data_);
}

}  // namespace cirrange::nn
