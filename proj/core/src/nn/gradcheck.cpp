// SPDX-License-Identifier: Apache-2.0

#include "cirrange/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cirrange/nn/layers.hpp"
#include "cirrange/rng.hpp"

namespace cirrange::nn {

GradCheckReport gradient_check(const Model& model, const Tensor& input, const Tensor& target,
                               const GradCheckOptions& options) {
    Model probe = model;
    auto params = probe.parameters();

    Workspace ws;
    const Tensor& pred = probe.forward(input, ws);
    auto grads = probe.zero_gradients();
    probe.backward(ws, mse_grad(pred, target), grads);

    // Flat index -> (tensor, element).
    std::vector<std::size_t> starts;
    std::size_t total = 0;
    for (const Tensor* p : params) {
        starts.push_back(total);
        total += p->size();
    }
    std::vector<std::size_t> order(total);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(options.seed);
    const std::size_t n = std::min(options.n_params, total);
    for (std::size_t i = 0; i < n; ++i) std::swap(order[i], order[i + rng.index(total - i)]);
    order.resize(n);

    auto locate = [&](std::size_t flat) {
        const auto it = std::upper_bound(starts.begin(), starts.end(), flat);
        const auto t = static_cast<std::size_t>(it - starts.begin()) - 1;
        return std::make_pair(t, flat - starts[t]);
    };

    std::vector<double> analytic(n);
    std::size_t largest = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto [t, e] = locate(order[i]);
        analytic[i] = grads[t][e];
        if (std::abs(analytic[i]) > std::abs(analytic[largest])) largest = i;
    }
    if (options.fault != 0.0 && n > 0) analytic[largest] *= 1.0 + options.fault;

    GradCheckReport report;
    report.n_checked = n;
    for (std::size_t i = 0; i < n; ++i) {
        const auto [t, e] = locate(order[i]);
        double& theta = (*params[t])[e];
        const double saved = theta;
        theta = saved + options.h;
        const double up = mse_loss(probe.forward(input), target);
        theta = saved - options.h;
        const double down = mse_loss(probe.forward(input), target);
        theta = saved;
        const double numeric = (up - down) / (2.0 * options.h);
        const double err = std::abs(analytic[i] - numeric) /
                           std::max(std::abs(analytic[i]) + std::abs(numeric), 1e-8);
        report.max_rel_error = std::max(report.max_rel_error, err);
    }
    return report;
}

}  // namespace cirrange::nn
