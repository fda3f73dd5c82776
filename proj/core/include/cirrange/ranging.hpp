// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cirrange/nn/checkpoint.hpp"
#include "cirrange/nn/model.hpp"
#include "cirrange/receiver.hpp"

namespace cirrange::ranging {

enum class ModelKind { CirCnn, RssiMlp };

std::string_view to_string(ModelKind kind);

inline constexpr std::size_t kHiddenUnits = 64;
inline constexpr double kDefaultRangeScaleM = 300.0;
/// Smallest image side that survives three conv+pool stages.
inline constexpr std::size_t kMinImageSide = 22;

/// A range regressor: the network predicts range / range_scale_m.
struct RangingModel {
    ModelKind kind = ModelKind::CirCnn;
    nn::Model net;
    double range_scale_m = kDefaultRangeScaleM;
    /// Input standardisation (RSSI model only; identity for the CNN).
    double input_mean = 0.0;
    double input_std = 1.0;
    std::optional<nn::OptimizerSnapshot> optimizer;

    const nn::Shape& input_spec() const { return net.input_shape(); }
};

/// Conv(32)-ReLU-Pool-Conv(32)-ReLU-Pool-Conv(64)-ReLU-Pool-Flatten-Dense(64)-ReLU-Dense(1)-ReLU
/// over a [rows, cols, 1] |CIR| image. Throws ConfigError below 22 x 22.
RangingModel build_cir_cnn(std::size_t rows, std::size_t cols, std::uint64_t seed);

/// Dense(64)-ReLU-Dense(1)-ReLU over a single standardised RSSI value.
RangingModel build_rssi_mlp(std::uint64_t seed);

struct HeadLayer {
    std::string type;
    nn::Shape output_shape;
    bool operator==(const HeadLayer&) const = default;
};

/// Layers after feature extraction (after Flatten for the CNN, all layers for the MLP).
std::vector<HeadLayer> head_signature(const RangingModel& model);

struct TrainConfig {
    std::size_t batch_size = 256;
    std::size_t epochs = 300;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    bool shuffle = true;

    void validate() const;
};

/// Training inputs with labels in metres and the spot each sample came from.
struct TrainingSet {
    std::vector<nn::Tensor> inputs;
    std::vector<double> labels_m;
    std::vector<int> spot_ids;
};

/// Called with the spot ids of every mini-batch before it is used.
using BatchAudit = std::function<void(std::span<const int> spot_ids)>;

struct TrainResult {
    RangingModel model;
    std::vector<double> loss_history;  // mean normalised MSE per epoch
};

/// Mini-batch Adam on MSE of range / range_scale_m. Deterministic for a given
/// cfg.seed; gradients are accumulated in a fixed order regardless of thread count.
TrainResult train(RangingModel model, const TrainingSet& data, const TrainConfig& cfg,
                  const BatchAudit& audit = {});

/// Estimated range in metres (never negative).
double predict(const RangingModel& model, const nn::Tensor& input);
std::vector<double> predict_batch(const RangingModel& model, std::span<const nn::Tensor> inputs);

nn::Tensor cir_input(const rx::CirImage& image);
nn::Tensor rssi_input(double rssi_db);

nn::Checkpoint to_checkpoint(const RangingModel& model);
RangingModel from_checkpoint(nn::Checkpoint ckpt);
void save_model(const std::filesystem::path& path, const RangingModel& model);
RangingModel load_model(const std::filesystem::path& path);

}  // namespace cirrange::ranging
