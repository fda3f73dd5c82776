// SPDX-License-Identifier: Apache-2.0

#include "cirrange/nn/adam.hpp"

#include <cmath>
#include <string>

#include "cirrange/errors.hpp"

namespace cirrange::nn {

AdamState AdamState::zeros_like(const Model& model) {
    AdamState s;
    for (const Tensor* p : model.parameters()) {
        s.m.emplace_back(p->shape());
        s.v.emplace_back(p->shape());
    }
    return s;
}

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, std::uint64_t t, const AdamHyper& hyper) {
    if (grads.size() != params.size() || m.size() != params.size() || v.size() != params.size()) {
        throw ShapeError("adam_update: parameter, gradient and moment sizes differ");
    }
    const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g;
        v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g * g;
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        params[i] -= hyper.lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
    }
}

void adam_step(Model& model, const std::vector<Tensor>& grads, AdamState& state, const AdamHyper& hyper) {
    auto params = model.parameters();
    if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
        throw ShapeError("adam_step: expected " + std::to_string(params.size()) + " parameter tensors");
    }
    const auto owners = model.parameter_layers();
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (grads[i].shape() != params[i]->shape()) {
            throw ShapeError("adam_step: gradient " + format_shape(grads[i].shape()) + " for parameter " +
                             format_shape(params[i]->shape()));
        }
        for (double g : grads[i].data()) {
            if (!std::isfinite(g)) {
                throw TrainingError("non-finite gradient in layer " + std::to_string(owners[i]) + " (" +
                                    std::string(layer_name(model.layers()[owners[i]])) + ")");
            }
        }
    }
    ++state.t;
    for (std::size_t i = 0; i < params.size(); ++i) {
        adam_update(params[i]->data(), grads[i].data(), state.m[i].data(), state.v[i].data(), state.t, hyper);
    }
}

}  // namespace cirrange::nn
