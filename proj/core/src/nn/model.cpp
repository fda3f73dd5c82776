// SPDX-License-Identifier: Apache-2.0

#include "cirrange/nn/model.hpp"

#include <algorithm>
#include <cmath>

#include "cirrange/errors.hpp"
#include "cirrange/nn/layers.hpp"
#include "cirrange/rng.hpp"

namespace cirrange::nn {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Shape output_shape_of(const Layer& layer, const Shape& in, std::size_t index) {
    auto fail = [&](const std::string& why) -> Shape {
        throw ShapeError("layer " + std::to_string(index) + " (" + std::string(layer_name(layer)) +
                         "): " + why + "; input shape " + format_shape(in));
    };
    return std::visit(
        Overloaded{
            [&](const Conv2d& c) -> Shape {
                if (in.size() != 3) return fail("expects [H, W, C]");
                if (c.weights.rank() != 4 || c.weights.dim(2) != in[2]) return fail("channel mismatch");
                if (in[0] < kKernel || in[1] < kKernel) return fail("input smaller than 3x3 kernel");
                return {in[0] - 2, in[1] - 2, c.weights.dim(3)};
            },
            [&](const MaxPool2&) -> Shape {
                if (in.size() != 3) return fail("expects [H, W, C]");
                if (in[0] < 2 || in[1] < 2) return fail("input smaller than 2x2 window");
                return {in[0] / 2, in[1] / 2, in[2]};
            },
            [&](const Flatten&) -> Shape { return {shape_size(in)}; },
            [&](const Dense& d) -> Shape {
                if (in.size() != 1) return fail("expects a flat input");
                if (d.weights.rank() != 2 || d.weights.dim(1) != in[0]) {
                    return fail("fan-in " + std::to_string(d.weights.rank() == 2 ? d.weights.dim(1) : 0) +
                                " does not match");
                }
                return {d.weights.dim(0)};
            },
            [&](const Relu&) -> Shape { return in; },
        },
        layer);
}

}  // namespace

Conv2d make_conv2d(std::size_t in_channels, std::size_t filters) {
    return Conv2d{Tensor(Shape{kKernel, kKernel, in_channels, filters}), Tensor(Shape{filters})};
}

Dense make_dense(std::size_t fan_in, std::size_t units) {
    return Dense{Tensor(Shape{units, fan_in}), Tensor(Shape{units})};
}

std::string_view layer_name(const Layer& layer) {
    return std::visit(Overloaded{
                          [](const Conv2d&) { return std::string_view("conv2d"); },
                          [](const MaxPool2&) { return std::string_view("maxpool"); },
                          [](const Flatten&) { return std::string_view("flatten"); },
                          [](const Dense&) { return std::string_view("dense"); },
                          [](const Relu&) { return std::string_view("relu"); },
                      },
                      layer);
}

Model::Model(Shape input_shape, std::vector<Layer> layers)
    : input_shape_(std::move(input_shape)), layers_(std::move(layers)) {
    if (input_shape_.empty() || shape_size(input_shape_) == 0) {
        throw ShapeError("model input shape must be non-empty, got " + format_shape(input_shape_));
    }
    if (layers_.empty()) throw ShapeError("model needs at least one layer");
    shapes_.push_back(input_shape_);
    std::size_t offset = 0;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        shapes_.push_back(output_shape_of(layers_[i], shapes_.back(), i));
        param_offset_.push_back(offset);
        if (const auto* c = std::get_if<Conv2d>(&layers_[i])) {
            if (c->bias.shape() != Shape{c->weights.dim(3)}) {
                throw ShapeError("layer " + std::to_string(i) + " (conv2d): bias " + format_shape(c->bias.shape()));
            }
            offset += 2;
        } else if (const auto* d = std::get_if<Dense>(&layers_[i])) {
            if (d->bias.shape() != Shape{d->weights.dim(0)}) {
                throw ShapeError("layer " + std::to_string(i) + " (dense): bias " + format_shape(d->bias.shape()));
            }
            offset += 2;
        }
    }
}

std::size_t Model::parameter_count() const {
    std::size_t n = 0;
    for (const Tensor* t : parameters()) n += t->size();
    return n;
}

std::vector<Tensor*> Model::parameters() {
    std::vector<Tensor*> out;
    for (auto& layer : layers_) {
        if (auto* c = std::get_if<Conv2d>(&layer)) {
            out.push_back(&c->weights);
            out.push_back(&c->bias);
        } else if (auto* d = std::get_if<Dense>(&layer)) {
            out.push_back(&d->weights);
            out.push_back(&d->bias);
        }
    }
    return out;
}

std::vector<const Tensor*> Model::parameters() const {
    std::vector<const Tensor*> out;
    for (Tensor* t : const_cast<Model*>(this)->parameters()) out.push_back(t);
    return out;
}

std::vector<std::size_t> Model::parameter_layers() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (std::holds_alternative<Conv2d>(layers_[i]) || std::holds_alternative<Dense>(layers_[i])) {
            out.push_back(i);
            out.push_back(i);
        }
    }
    return out;
}

std::vector<Tensor> Model::zero_gradients() const {
    std::vector<Tensor> grads;
    for (const Tensor* t : parameters()) grads.emplace_back(t->shape());
    return grads;
}

void Model::init_kaiming_uniform(std::uint64_t seed) {
    Rng rng(seed);
    auto init = [&](Tensor& w, Tensor& b, std::size_t fan_in) {
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        for (auto& v : w.data()) v = rng.uniform(-bound, bound);
        b.fill(0.0);
    };
    for (auto& layer : layers_) {
        if (auto* c = std::get_if<Conv2d>(&layer)) {
            init(c->weights, c->bias, kKernel * kKernel * c->weights.dim(2));
        } else if (auto* d = std::get_if<Dense>(&layer)) {
            init(d->weights, d->bias, d->weights.dim(1));
        }
    }
}

Tensor Model::forward(const Tensor& input) const {
    Workspace ws;
    return forward(input, ws);
}

const Tensor& Model::forward(const Tensor& input, Workspace& ws) const {
    if (input.shape() != input_shape_) {
        throw ShapeError("model expects input " + format_shape(input_shape_) + ", got " +
                         format_shape(input.shape()));
    }
    ws.activations.resize(layers_.size() + 1);
    ws.patches.resize(layers_.size());
    ws.activations[0].resize(input.shape());
    std::copy(input.ptr(), input.ptr() + input.size(), ws.activations[0].ptr());
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const Tensor& x = ws.activations[i];
        Tensor& y = ws.activations[i + 1];
        std::visit(Overloaded{
                       [&](const Conv2d& c) { detail::conv2d_forward_into(x, c.weights, c.bias, ws.patches[i], y); },
                       [&](const MaxPool2&) { detail::maxpool_forward_into(x, y); },
                       [&](const Flatten&) {
                           y.resize(shapes_[i + 1]);
                           std::copy(x.ptr(), x.ptr() + x.size(), y.ptr());
                       },
                       [&](const Dense& d) { detail::dense_forward_into(x, d.weights, d.bias, y); },
                       [&](const Relu&) { detail::relu_forward_into(x, y); },
                   },
                   layers_[i]);
    }
    return ws.activations.back();
}

void Model::backward(Workspace& ws, const Tensor& grad_output, std::vector<Tensor>& grads) const {
    if (ws.activations.size() != layers_.size() + 1) {
        throw ShapeError("backward called without a cached forward pass");
    }
    if (grad_output.shape() != output_shape()) {
        throw ShapeError("upstream gradient " + format_shape(grad_output.shape()) + " does not match output " +
                         format_shape(output_shape()));
    }
    Tensor& g = ws.grad;
    Tensor& next = ws.grad_next;
    g.resize(grad_output.shape());
    std::copy(grad_output.ptr(), grad_output.ptr() + grad_output.size(), g.ptr());
    for (std::size_t idx = layers_.size(); idx-- > 0;) {
        const Tensor& x = ws.activations[idx];
        const bool need_input = idx > 0;
        if (idx > 1 && std::holds_alternative<MaxPool2>(layers_[idx]) && std::holds_alternative<Relu>(layers_[idx - 1])) {
            detail::maxpool_backward_into(x, g, next, true);
            std::swap(g, next);
            --idx;
            continue;
        }
        std::visit(Overloaded{
                       [&](const Conv2d& c) {
                           const std::size_t p = param_offset_[idx];
                           detail::conv2d_backward_accumulate(x, ws.patches[idx], c.weights, g,
                                                              need_input ? &next : nullptr, grads[p],
                                                              grads[p + 1], ws.scratch);
                       },
                       [&](const MaxPool2&) {
                           if (need_input) detail::maxpool_backward_into(x, g, next);
                       },
                       [&](const Flatten&) {
                           if (need_input) {
                               next.resize(x.shape());
                               std::copy(g.ptr(), g.ptr() + g.size(), next.ptr());
                           }
                       },
                       [&](const Dense& d) {
                           const std::size_t p = param_offset_[idx];
                           detail::dense_backward_accumulate(x, d.weights, g, need_input ? &next : nullptr,
                                                             grads[p], grads[p + 1]);
                       },
                       [&](const Relu&) {
                           if (need_input) detail::relu_backward_into(x, g, next);
                       },
                   },
                   layers_[idx]);
        if (need_input) std::swap(g, next);
    }
}

}  // namespace cirrange::nn
