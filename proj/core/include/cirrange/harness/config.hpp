// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "cirrange/channel.hpp"
#include "cirrange/ranging.hpp"
#include "cirrange/receiver.hpp"

namespace cirrange::harness {

/// Training epochs used by ExperimentConfig::defaults.
inline constexpr std::size_t kDefaultExperimentEpochs = 20;

/// Everything needed to regenerate a dataset and rerun an experiment.
struct ExperimentConfig {
    std::uint64_t master_seed = 1;
    double bandwidth_hz = 10e6;
    int cell_id = 0;
    int n_train_spots = 21;
    int n_test_spots = 6;
    int frames_per_spot_min = 100;
    int frames_per_spot_max = 200;

    channel::ScenarioConfig scenario;

    int n_cir = 128;
    int n_taps_kept = 64;
    double floor_db = -60.0;
    double rx_gain_db = 60.0;
    bool correct_cfo = true;
    bool refine_cfo = true;

    ranging::TrainConfig train;
    /// When unset the training seed is derived from master_seed.
    std::optional<std::uint64_t> train_seed;

    /// Defaults for a scenario kind: 21/6 spots for LOS, 12/3 for multipath.
    static ExperimentConfig defaults(channel::ScenarioKind kind);

    void validate() const;
    rx::ReceiverConfig receiver() const;
    std::uint64_t effective_train_seed() const;
};

/// Parses the sectioned `key = value` format. Unknown sections or keys,
/// duplicates and malformed values raise ConfigError with the line number.
///
///   [experiment] master_seed cell_id bandwidth_hz n_train_spots n_test_spots
///                frames_per_spot_min frames_per_spot_max
///   [scenario]   kind (los|multipath, selects defaults) range_min_m range_max_m
///                n_extra_taps excess_delay_mean_s tap_decay_db_per_us
///                los_suppression_db shadowing_sigma_db snr_db cfo_min_hz
///                cfo_max_hz path_loss_exponent ref_loss_db_at_1m
///   [receiver]   n_cir n_taps_kept floor_db rx_gain_db correct_cfo
///                refine_cfo
///   [train]      batch_size epochs lr shuffle seed
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical text form listing every key; parse_config(format_config(c)) == c.
std::string format_config(const ExperimentConfig& config);

}  // namespace cirrange::harness
