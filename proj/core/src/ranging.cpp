// SPDX-License-Identifier: Apache-2.0

#include "cirrange/ranging.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cirrange/errors.hpp"
#include "cirrange/nn/layers.hpp"
#include "cirrange/rng.hpp"

namespace cirrange::ranging {
namespace {

// Gradient-accumulation partition of a mini-batch: one chunk per kChunkSamples
// samples, at most kMaxChunks. Depends only on the batch size, never on the
// thread count, so the summation order is fixed.
constexpr std::size_t kChunkSamples = 32;
constexpr std::size_t kMaxChunks = 8;

std::size_t after_stage(std::size_t side) {
    // valid 3x3 conv then 2x2 pool; 0 means the stage cannot run
    if (side < nn::kKernel) return 0;
    const std::size_t conv = side - 2;
    return conv < 2 ? 0 : conv / 2;
}

void add_head(std::vector<nn::Layer>& layers, std::size_t fan_in) {
    layers.emplace_back(nn::make_dense(fan_in, kHiddenUnits));
    layers.emplace_back(nn::Relu{});
    layers.emplace_back(nn::make_dense(kHiddenUnits, 1));
    layers.emplace_back(nn::Relu{});
}

nn::Tensor standardised(const RangingModel& model, const nn::Tensor& input) {
    if (model.kind != ModelKind::RssiMlp) return input;
    nn::Tensor out = input;
    for (auto& v : out.data()) v = (v - model.input_mean) / model.input_std;
    return out;
}

void check_input(const RangingModel& model, const nn::Tensor& input) {
    if (input.shape() != model.input_spec()) {
        throw ArgumentError(std::string(to_string(model.kind)) + " model expects input shape " +
                            nn::format_shape(model.input_spec()) + ", got " + nn::format_shape(input.shape()));
    }
}

}  // namespace

std::string_view to_string(ModelKind kind) {
    return kind == ModelKind::CirCnn ? "cir_cnn" : "rssi_mlp";
}

RangingModel build_cir_cnn(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::size_t r = rows, c = cols;
    for (int stage = 0; stage < 3; ++stage) {
        r = after_stage(r);
        c = after_stage(c);
    }
    if (r == 0 || c == 0) {
        std::ostringstream msg;
        msg << "CIR image " << rows << " x " << cols << " too small for three conv/pool stages; minimum is "
            << kMinImageSide << " x " << kMinImageSide;
        throw ConfigError(msg.str());
    }
    std::vector<nn::Layer> layers;
    std::size_t channels = 1;
    for (std::size_t filters : {32u, 32u, 64u}) {
        layers.emplace_back(nn::make_conv2d(channels, filters));
        layers.emplace_back(nn::Relu{});
        layers.emplace_back(nn::MaxPool2{});
        channels = filters;
    }
    layers.emplace_back(nn::Flatten{});
    add_head(layers, r * c * channels);
    RangingModel model;
    model.kind = ModelKind::CirCnn;
    model.net = nn::Model(nn::Shape{rows, cols, 1}, std::move(layers));
    model.net.init_kaiming_uniform(seed);
    return model;
}

RangingModel build_rssi_mlp(std::uint64_t seed) {
    std::vector<nn::Layer> layers;
    add_head(layers, 1);
    RangingModel model;
    model.kind = ModelKind::RssiMlp;
    model.net = nn::Model(nn::Shape{1}, std::move(layers));
    model.net.init_kaiming_uniform(seed);
    return model;
}

std::vector<HeadLayer> head_signature(const RangingModel& model) {
    const auto& layers = model.net.layers();
    const auto shapes = model.net.layer_output_shapes();
    std::size_t start = 0;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        if (std::holds_alternative<nn::Flatten>(layers[i])) start = i + 1;
    }
    std::vector<HeadLayer> head;
    for (std::size_t i = start; i < layers.size(); ++i) {
        head.push_back({std::string(nn::layer_name(layers[i])), shapes[i]});
    }
    return head;
}

void TrainConfig::validate() const {
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("train: lr must be positive");
}

TrainResult train(RangingModel model, const TrainingSet& data, const TrainConfig& cfg, const BatchAudit& audit) {
    cfg.validate();
    const std::size_t n = data.inputs.size();
    if (n == 0) throw ConfigError("train: empty training set");
    if (data.labels_m.size() != n) throw ConfigError("train: inputs and labels differ in length");
    if (!data.spot_ids.empty() && data.spot_ids.size() != n) {
        throw ConfigError("train: spot ids and inputs differ in length");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (data.inputs[i].shape() != model.input_spec()) {
            throw ConfigError("train: sample " + std::to_string(i) + " has shape " +
                              nn::format_shape(data.inputs[i].shape()) + " but the model expects " +
                              nn::format_shape(model.input_spec()));
        }
        if (!(data.labels_m[i] > 0.0)) throw ConfigError("train: labels must be positive");
    }

    const bool fresh = !model.optimizer || model.optimizer->state.t == 0;
    if (model.kind == ModelKind::RssiMlp && fresh) {
        double mean = 0.0;
        for (const auto& x : data.inputs) mean += x[0];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (const auto& x : data.inputs) var += (x[0] - mean) * (x[0] - mean);
        const double sd = std::sqrt(var / static_cast<double>(n));
        model.input_mean = mean;
        model.input_std = sd > 0.0 ? sd : 1.0;
    }
    std::vector<nn::Tensor> standardised_inputs;
    if (model.kind == ModelKind::RssiMlp) {
        standardised_inputs.reserve(n);
        for (const auto& x : data.inputs) standardised_inputs.push_back(standardised(model, x));
    }
    const std::vector<nn::Tensor>& inputs =
        model.kind == ModelKind::RssiMlp ? standardised_inputs : data.inputs;

    std::vector<double> targets(n);
    for (std::size_t i = 0; i < n; ++i) targets[i] = data.labels_m[i] / model.range_scale_m;

    if (fresh) {
        // Start the output unit at the mean target with zero weights so the final
        // ReLU is active for every sample at step 0.
        const double mean_target = std::accumulate(targets.begin(), targets.end(), 0.0) / static_cast<double>(n);
        auto params = model.net.parameters();
        params[params.size() - 2]->fill(0.0);  // output weights
        params.back()->fill(mean_target);      // output bias
    }

    nn::AdamHyper hyper;
    hyper.lr = cfg.lr;
    nn::AdamState state = model.optimizer ? model.optimizer->state : nn::AdamState::zeros_like(model.net);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(derive_seed(cfg.seed, {0x5348554646ULL}));

    std::vector<nn::Workspace> workspaces(static_cast<std::size_t>(omp_get_max_threads()));
    auto grads = model.net.zero_gradients();
    // chunk 0 accumulates straight into grads
    std::vector<std::vector<nn::Tensor>> extra_grads(kMaxChunks - 1, model.net.zero_gradients());
    std::vector<std::vector<nn::Tensor>*> chunk_grads{&grads};
    for (auto& g : extra_grads) chunk_grads.push_back(&g);
    std::vector<double> chunk_loss(kMaxChunks);
    std::vector<int> batch_spots;

    TrainResult result;
    result.loss_history.reserve(cfg.epochs);
    const std::size_t n_batches = (n + cfg.batch_size - 1) / cfg.batch_size;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (cfg.shuffle) {
            for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[shuffle_rng.index(i + 1)]);
        }
        double epoch_loss = 0.0;
        for (std::size_t b = 0; b < n_batches; ++b) {
            const std::size_t begin = b * cfg.batch_size;
            const std::size_t end = std::min(n, begin + cfg.batch_size);
            const std::size_t bsz = end - begin;
            if (audit && !data.spot_ids.empty()) {
                batch_spots.clear();
                for (std::size_t i = begin; i < end; ++i) batch_spots.push_back(data.spot_ids[order[i]]);
                audit(batch_spots);
            }
            const double scale = 2.0 / static_cast<double>(bsz);
            const std::size_t n_chunks = std::min(kMaxChunks, (bsz + kChunkSamples - 1) / kChunkSamples);

#pragma omp parallel for schedule(static)
            for (std::size_t c = 0; c < n_chunks; ++c) {
                auto& g = *chunk_grads[c];
                for (auto& t : g) t.fill(0.0);
                double loss = 0.0;
                const std::size_t lo = begin + bsz * c / n_chunks;
                const std::size_t hi = begin + bsz * (c + 1) / n_chunks;
                nn::Tensor upstream(nn::Shape{1});
                nn::Workspace& ws = workspaces[static_cast<std::size_t>(omp_get_thread_num())];
                for (std::size_t i = lo; i < hi; ++i) {
                    const std::size_t s = order[i];
                    const nn::Tensor& out = model.net.forward(inputs[s], ws);
                    const double err = out[0] - targets[s];
                    loss += err * err;
                    upstream[0] = scale * err;
                    model.net.backward(ws, upstream, g);
                }
                chunk_loss[c] = loss;
            }

            double batch_loss = chunk_loss[0];
            for (std::size_t c = 1; c < n_chunks; ++c) {
                batch_loss += chunk_loss[c];
                for (std::size_t p = 0; p < grads.size(); ++p) {
                    auto dst = grads[p].data();
                    const auto src = (*chunk_grads[c])[p].data();
                    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
                }
            }
            if (!std::isfinite(batch_loss)) {
                throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                    std::to_string(b));
            }
            epoch_loss += batch_loss;
            nn::adam_step(model.net, grads, state, hyper);
        }
        result.loss_history.push_back(epoch_loss / static_cast<double>(n));
    }
    model.optimizer = nn::OptimizerSnapshot{hyper, std::move(state)};
    result.model = std::move(model);
    return result;
}

double predict(const RangingModel& model, const nn::Tensor& input) {
    check_input(model, input);
    const nn::Tensor out = model.net.forward(standardised(model, input));
    return out[0] * model.range_scale_m;
}

std::vector<double> predict_batch(const RangingModel& model, std::span<const nn::Tensor> inputs) {
    for (const auto& x : inputs) check_input(model, x);
    std::vector<double> out(inputs.size());
#pragma omp parallel
    {
        nn::Workspace ws;
#pragma omp for schedule(static)
        for (std::size_t i = 0; i < inputs.size(); ++i) {
            out[i] = model.net.forward(standardised(model, inputs[i]), ws)[0] * model.range_scale_m;
        }
    }
    return out;
}

nn::Tensor cir_input(const rx::CirImage& image) {
    nn::Tensor t(nn::Shape{static_cast<std::size_t>(image.rows), static_cast<std::size_t>(image.cols), 1});
    for (std::size_t i = 0; i < image.pixels.size(); ++i) t[i] = static_cast<double>(image.pixels[i]);
    return t;
}

nn::Tensor rssi_input(double rssi_db) {
    return nn::Tensor(nn::Shape{1}, rssi_db);
}

nn::Checkpoint to_checkpoint(const RangingModel& model) {
    nn::Checkpoint ckpt{model.net, model.optimizer, {}};
    ckpt.attributes["kind"] = model.kind == ModelKind::CirCnn ? 0.0 : 1.0;
    ckpt.attributes["range_scale_m"] = model.range_scale_m;
    ckpt.attributes["input_mean"] = model.input_mean;
    ckpt.attributes["input_std"] = model.input_std;
    return ckpt;
}

RangingModel from_checkpoint(nn::Checkpoint ckpt) {
    auto attr = [&](const char* key) {
        auto it = ckpt.attributes.find(key);
        if (it == ckpt.attributes.end()) throw FormatError(std::string("checkpoint lacks attribute ") + key);
        return it->second;
    };
    RangingModel model;
    const double kind = attr("kind");
    if (kind != 0.0 && kind != 1.0) throw FormatError("checkpoint: unknown model kind");
    model.kind = kind == 0.0 ? ModelKind::CirCnn : ModelKind::RssiMlp;
    model.range_scale_m = attr("range_scale_m");
    model.input_mean = attr("input_mean");
    model.input_std = attr("input_std");
    if (!(model.range_scale_m > 0.0)) throw FormatError("checkpoint: range_scale_m must be positive");
    model.net = std::move(ckpt.model);
    model.optimizer = std::move(ckpt.optimizer);
    return model;
}

void save_model(const std::filesystem::path& path, const RangingModel& model) {
    nn::save_checkpoint(path, to_checkpoint(model));
}

RangingModel load_model(const std::filesystem::path& path) {
    return from_checkpoint(nn::load_checkpoint(path));
}

}  // namespace cirrange::ranging
