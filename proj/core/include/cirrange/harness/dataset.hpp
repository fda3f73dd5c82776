// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cirrange/harness/config.hpp"
#include "cirrange/ranging.hpp"
#include "cirrange/receiver.hpp"

// Dataset file (little-endian):
//
//   "CIRD" | u16 version | u32 rows | u32 cols | u64 n_samples | u32 n_spots
//   n_samples x { u32 spot_id | u32 frame_id | u32 split | f64 rssi_db | f64 true_range_m
//                 | f32 pixels[rows * cols] }
//
// Records have a fixed stride. A text sidecar "<file>.manifest" holds the
// generating configuration (itself a valid config file) and a per-spot summary.
namespace cirrange::harness {

inline constexpr std::uint16_t kDatasetVersion = 1;

enum class Split : std::uint32_t { Train = 0, Test = 1 };

struct Sample {
    rx::CirImage image;  // carries true_range_m, spot_id, frame_id
    double rssi_db = 0.0;
    Split split = Split::Train;

    double true_range_m() const { return image.true_range_m; }
    int spot_id() const { return image.spot_id; }
};

struct SpotInfo {
    int spot_id;
    double range_m;
    double shadowing_db;
    int n_frames;
    Split split;
};

struct RangingDataset {
    int rows = 0;
    int cols = 0;
    std::vector<Sample> samples;
    std::vector<SpotInfo> spots;  // filled by generate_dataset; empty after read_dataset
    std::string manifest;
};

/// Synthesises every (spot, frame) through transmitter, channel and receiver.
/// The first n_train_spots spots are TRAIN, the rest TEST. Frames are processed
/// in parallel with per-frame seeds, so output is independent of thread count.
RangingDataset generate_dataset(const ExperimentConfig& config);

/// Throws std::logic_error if any spot id appears in both splits.
void audit_split(const RangingDataset& dataset);

std::vector<const Sample*> select(const RangingDataset& dataset, Split split);

/// Model inputs and labels for one split.
ranging::TrainingSet training_set(const RangingDataset& dataset, ranging::ModelKind kind, Split split);

void write_dataset(const std::filesystem::path& path, const RangingDataset& dataset);
RangingDataset read_dataset(const std::filesystem::path& path);

}  // namespace cirrange::harness
