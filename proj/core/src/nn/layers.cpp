// SPDX-License-Identifier: Apache-2.0

#include "cirrange/nn/layers.hpp"

#include <Eigen/Core>

#include <algorithm>

#include "cirrange/errors.hpp"

namespace cirrange::nn {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;
using CMapVec = Eigen::Map<const Eigen::VectorXd>;

// Four fixed lanes so the result never depends on pointer alignment.
double dot(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

void check_conv_weights(const Tensor& input, const Tensor& weights) {
    if (input.rank() != 3) throw ShapeError("conv2d input must be [H, W, C], got " + format_shape(input.shape()));
    if (input.dim(0) < kKernel || input.dim(1) < kKernel) {
        throw ShapeError("conv2d input " + format_shape(input.shape()) + " smaller than 3x3 kernel");
    }
    if (weights.rank() != 4 || weights.dim(0) != kKernel || weights.dim(1) != kKernel ||
        weights.dim(2) != input.dim(2)) {
        throw ShapeError("conv2d weights " + format_shape(weights.shape()) + " incompatible with input " +
                         format_shape(input.shape()));
    }
}

void check_conv_shapes(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    check_conv_weights(input, weights);
    if (bias.rank() != 1 || bias.dim(0) != weights.dim(3)) {
        throw ShapeError("conv2d bias " + format_shape(bias.shape()) + " does not match " +
                         std::to_string(weights.dim(3)) + " filters");
    }
}

void im2col(const Tensor& input, std::vector<double>& cols) {
    const std::size_t h = input.dim(0), w = input.dim(1), c = input.dim(2);
    const std::size_t oh = h - 2, ow = w - 2;
    const std::size_t k = kKernel * kKernel * c;
    const std::size_t seg = kKernel * c;
    cols.resize(oh * ow * k);
    const double* src = input.ptr();
    double* dst = cols.data();
    for (std::size_t y = 0; y < oh; ++y) {
        for (std::size_t x = 0; x < ow; ++x) {
            for (std::size_t ky = 0; ky < kKernel; ++ky) {
                const double* row = src + ((y + ky) * w + x) * c;
                std::copy(row, row + seg, dst);
                dst += seg;
            }
        }
    }
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(what) + ": shape " + format_shape(a.shape()) + " vs " + format_shape(b.shape()));
    }
}

void ensure_shape(Tensor& t, const Shape& shape) {
    t.resize(shape);
}

void check_pool_input(const Tensor& input) {
    if (input.rank() != 3 || input.dim(0) < 2 || input.dim(1) < 2) {
        throw ShapeError("max-pool input must be [H>=2, W>=2, C], got " + format_shape(input.shape()));
    }
}

void check_dense(const Tensor& input, const Tensor& weights) {
    if (weights.rank() != 2 || input.size() != weights.dim(1)) {
        throw ShapeError("dense weights " + format_shape(weights.shape()) + " incompatible with input " +
                         format_shape(input.shape()));
    }
}

// Routes one 2x2 window across all channels to the first maximum in row-major
// order. Pure selects with unconditional loads so the channel loop vectorizes.
template <bool ThroughRelu>
inline void route_window(const double* __restrict a, const double* __restrict b, const double* __restrict d,
                         const double* __restrict e, const double* __restrict g, double* __restrict ga,
                         double* __restrict gb, double* __restrict gd, double* __restrict ge, std::size_t c) {
    for (std::size_t ch = 0; ch < c; ++ch) {
        const double va = a[ch], vb = b[ch], vd = d[ch], ve = e[ch], gg = g[ch];
        const double mab = vb > va ? vb : va;
        const double mabd = vd > mab ? vd : mab;
        const double m = ve > mabd ? ve : mabd;
        const double gv = (!ThroughRelu || m > 0.0) ? gg : 0.0;
        const double after_e = ve > mabd ? 0.0 : gv;
        const double after_d = vd > mab ? 0.0 : after_e;
        ge[ch] = gv - after_e;
        gd[ch] = after_e - after_d;
        gb[ch] = vb > va ? after_d : 0.0;
        ga[ch] = vb > va ? 0.0 : after_d;
    }
}

template <bool ThroughRelu>
void maxpool_route(const Tensor& input, const Tensor& grad_output, Tensor& grad_input) {
    const std::size_t h = input.dim(0), w = input.dim(1), c = input.dim(2);
    const std::size_t oh = h / 2, ow = w / 2;
    const double* src = input.ptr();
    const double* g = grad_output.ptr();
    double* dst = grad_input.ptr();
    // Every covered cell is written, so only a trailing odd row/column needs clearing.
    if (h % 2 != 0) std::fill(dst + (h - 1) * w * c, dst + h * w * c, 0.0);
    for (std::size_t y = 0; y < oh; ++y) {
        if (w % 2 != 0) {
            std::fill_n(dst + ((2 * y) * w + w - 1) * c, c, 0.0);
            std::fill_n(dst + ((2 * y + 1) * w + w - 1) * c, c, 0.0);
        }
        for (std::size_t x = 0; x < ow; ++x, g += c) {
            const std::size_t base = ((2 * y) * w + 2 * x) * c;
            const std::size_t below = base + w * c;
            route_window<ThroughRelu>(src + base, src + base + c, src + below, src + below + c, g, dst + base,
                                      dst + base + c, dst + below, dst + below + c, c);
        }
    }
}

}  // namespace

namespace detail {

void conv2d_forward_into(const Tensor& input, const Tensor& weights, const Tensor& bias,
                         std::vector<double>& cols, Tensor& output) {
    check_conv_shapes(input, weights, bias);
    const std::size_t oh = input.dim(0) - 2, ow = input.dim(1) - 2;
    const std::size_t k = kKernel * kKernel * input.dim(2);
    const std::size_t cout = weights.dim(3);
    im2col(input, cols);
    const Shape out_shape{oh, ow, cout};
    output.resize(out_shape);
    CMapMat patches(cols.data(), static_cast<Eigen::Index>(oh * ow), static_cast<Eigen::Index>(k));
    CMapMat w(weights.ptr(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(cout));
    MapMat out(output.ptr(), static_cast<Eigen::Index>(oh * ow), static_cast<Eigen::Index>(cout));
    out.noalias() = patches * w;
    out.rowwise() += CMapVec(bias.ptr(), static_cast<Eigen::Index>(cout)).transpose();
}

void conv2d_backward_accumulate(const Tensor& input, const std::vector<double>& cols,
                                const Tensor& weights, const Tensor& grad_output,
                                Tensor* grad_input, Tensor& grad_weights, Tensor& grad_bias,
                                std::vector<double>& scratch) {
    const std::size_t h = input.dim(0), w = input.dim(1), c = input.dim(2);
    const std::size_t oh = h - 2, ow = w - 2;
    const std::size_t k = kKernel * kKernel * c;
    const std::size_t cout = weights.dim(3);
    const Shape out_shape{oh, ow, cout};
    if (grad_output.shape() != out_shape) {
        throw ShapeError("conv2d upstream gradient " + format_shape(grad_output.shape()) +
                         " does not match forward output " + format_shape(out_shape));
    }
    const auto p = static_cast<Eigen::Index>(oh * ow);
    CMapMat g(grad_output.ptr(), p, static_cast<Eigen::Index>(cout));
    CMapMat patches(cols.data(), p, static_cast<Eigen::Index>(k));
    MapMat gw(grad_weights.ptr(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(cout));
    // [Cout, K] product then transposed accumulate: faster than patches^T * g here.
    const RowMat gwt = g.transpose() * patches;
    gw += gwt.transpose();
    // Plain loops here and in the dense layer: Eigen's vector kernels peel for
    // alignment, which makes the summation order depend on the heap.
    for (std::size_t i = 0; i < oh * ow; ++i) {
        const double* row = grad_output.ptr() + i * cout;
        for (std::size_t o = 0; o < cout; ++o) grad_bias.ptr()[o] += row[o];
    }
    if (grad_input == nullptr) return;

    scratch.resize(oh * ow * k);
    MapMat gcols(scratch.data(), p, static_cast<Eigen::Index>(k));
    CMapMat wm(weights.ptr(), static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(cout));
    gcols.noalias() = g * wm.transpose();

    grad_input->resize(input.shape());
    grad_input->fill(0.0);
    const std::size_t seg = kKernel * c;
    double* dst = grad_input->ptr();
    const double* src = scratch.data();
    for (std::size_t y = 0; y < oh; ++y) {
        for (std::size_t x = 0; x < ow; ++x) {
            for (std::size_t ky = 0; ky < kKernel; ++ky) {
                double* row = dst + ((y + ky) * w + x) * c;
                for (std::size_t i = 0; i < seg; ++i) row[i] += src[i];
                src += seg;
            }
        }
    }
}

void dense_backward_accumulate(const Tensor& input, const Tensor& weights, const Tensor& grad_output,
                               Tensor* grad_input, Tensor& grad_weights, Tensor& grad_bias) {
    const std::size_t units = weights.dim(0), fan_in = weights.dim(1);
    if (grad_output.size() != units) {
        throw ShapeError("dense upstream gradient " + format_shape(grad_output.shape()) + " does not match " +
                         std::to_string(units) + " units");
    }
    const auto u = static_cast<Eigen::Index>(units), f = static_cast<Eigen::Index>(fan_in);
    CMapVec x(input.ptr(), f);
    CMapVec g(grad_output.ptr(), u);
    MapMat(grad_weights.ptr(), u, f).noalias() += g * x.transpose();
    for (std::size_t i = 0; i < units; ++i) grad_bias.ptr()[i] += grad_output[i];
    if (grad_input == nullptr) return;
    grad_input->resize(input.shape());
    double* gi = grad_input->ptr();
    std::fill(gi, gi + fan_in, 0.0);
    for (std::size_t i = 0; i < units; ++i) {
        const double gu = grad_output[i];
        const double* row = weights.ptr() + i * fan_in;
        for (std::size_t j = 0; j < fan_in; ++j) gi[j] += row[j] * gu;
    }
}

void dense_forward_into(const Tensor& input, const Tensor& weights, const Tensor& bias, Tensor& output) {
    check_dense(input, weights);
    if (bias.rank() != 1 || bias.dim(0) != weights.dim(0)) {
        throw ShapeError("dense bias " + format_shape(bias.shape()) + " does not match " +
                         std::to_string(weights.dim(0)) + " units");
    }
    const std::size_t units = weights.dim(0), fan_in = weights.dim(1);
    ensure_shape(output, Shape{units});
    const double* x = input.ptr();
    for (std::size_t i = 0; i < units; ++i) output.ptr()[i] = bias[i] + dot(weights.ptr() + i * fan_in, x, fan_in);
}

void maxpool_forward_into(const Tensor& input, Tensor& output) {
    check_pool_input(input);
    const std::size_t w = input.dim(1), c = input.dim(2);
    const std::size_t oh = input.dim(0) / 2, ow = w / 2;
    ensure_shape(output, Shape{oh, ow, c});
    const double* src = input.ptr();
    double* dst = output.ptr();
    for (std::size_t y = 0; y < oh; ++y) {
        for (std::size_t x = 0; x < ow; ++x) {
            const double* a = src + ((2 * y) * w + 2 * x) * c;
            const double* b = a + c;
            const double* d = a + w * c;
            const double* e = d + c;
            for (std::size_t ch = 0; ch < c; ++ch) {
                double m = a[ch];
                if (b[ch] > m) m = b[ch];
                if (d[ch] > m) m = d[ch];
                if (e[ch] > m) m = e[ch];
                *dst++ = m;
            }
        }
    }
}

void maxpool_backward_into(const Tensor& input, const Tensor& grad_output, Tensor& grad_input, bool through_relu) {
    check_pool_input(input);
    const std::size_t w = input.dim(1), c = input.dim(2);
    const std::size_t oh = input.dim(0) / 2, ow = w / 2;
    if (grad_output.shape() != Shape{oh, ow, c}) {
        throw ShapeError("max-pool upstream gradient " + format_shape(grad_output.shape()) +
                         " does not match forward output " + format_shape(Shape{oh, ow, c}));
    }
    ensure_shape(grad_input, input.shape());
    if (through_relu) {
        maxpool_route<true>(input, grad_output, grad_input);
    } else {
        maxpool_route<false>(input, grad_output, grad_input);
    }
}

void relu_forward_into(const Tensor& input, Tensor& output) {
    ensure_shape(output, input.shape());
    const double* x = input.ptr();
    double* y = output.ptr();
    for (std::size_t i = 0; i < input.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward_into(const Tensor& input, const Tensor& grad_output, Tensor& grad_input) {
    check_same_shape(input, grad_output, "relu backward");
    ensure_shape(grad_input, input.shape());
    const double* x = input.ptr();
    const double* g = grad_output.ptr();
    double* d = grad_input.ptr();
    for (std::size_t i = 0; i < input.size(); ++i) d[i] = x[i] > 0.0 ? g[i] : 0.0;
}

}  // namespace detail

Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    std::vector<double> cols;
    Tensor out;
    detail::conv2d_forward_into(input, weights, bias, cols, out);
    return out;
}

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_output,
                            bool need_input_grad) {
    check_conv_weights(input, weights);
    std::vector<double> cols, scratch;
    im2col(input, cols);
    Conv2dGrads grads{Tensor(), Tensor(weights.shape()), Tensor(Shape{weights.dim(3)})};
    detail::conv2d_backward_accumulate(input, cols, weights, grad_output,
                                       need_input_grad ? &grads.input : nullptr, grads.weights, grads.bias,
                                       scratch);
    return grads;
}

Tensor maxpool_forward(const Tensor& input) {
    Tensor out;
    detail::maxpool_forward_into(input, out);
    return out;
}

Tensor maxpool_backward(const Tensor& input, const Tensor& grad_output) {
    Tensor grad;
    detail::maxpool_backward_into(input, grad_output, grad);
    return grad;
}

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    Tensor out;
    detail::dense_forward_into(input, weights, bias, out);
    return out;
}

Tensor relu_forward(const Tensor& input) {
    Tensor out;
    detail::relu_forward_into(input, out);
    return out;
}

Tensor relu_backward(const Tensor& input, const Tensor& grad_output) {
    Tensor grad;
    detail::relu_backward_into(input, grad_output, grad);
    return grad;
}

DenseGrads dense_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_output) {
    check_dense(input, weights);
    DenseGrads grads{Tensor(), Tensor(weights.shape()), Tensor(Shape{weights.dim(0)})};
    detail::dense_backward_accumulate(input, weights, grad_output, &grads.input, grads.weights, grads.bias);
    return grads;
}

double mse_loss(const Tensor& pred, const Tensor& target) {
    check_same_shape(pred, target, "mse");
    if (pred.size() == 0) throw ShapeError("mse of empty tensors");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        acc += d * d;
    }
    return acc / static_cast<double>(pred.size());
}

Tensor mse_grad(const Tensor& pred, const Tensor& target) {
    check_same_shape(pred, target, "mse");
    Tensor g(pred.shape());
    const double scale = 2.0 / static_cast<double>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) g[i] = scale * (pred[i] - target[i]);
    return g;
}

}  // namespace cirrange::nn
