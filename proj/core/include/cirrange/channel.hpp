// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "cirrange/lte_grid.hpp"

namespace cirrange::channel {

using cf64 = std::complex<double>;

inline constexpr double kSpeedOfLight = 299792458.0;

/// Direct-path suppression at or above this level removes the direct tap.
inline constexpr double kLosRemovalDb = 60.0;

struct Tap {
    double delay_s;
    cf64 gain;
};

/// One frame's propagation channel with ground truth.
struct ChannelRealization {
    std::vector<Tap> taps;  // strictly increasing delay
    double cfo_hz = 0.0;
    double snr_db = 0.0;  // +inf disables noise
    double true_range_m = 0.0;
    double shadowing_db = 0.0;
};

enum class ScenarioKind { Los, Multipath };

std::string_view to_string(ScenarioKind kind);
ScenarioKind parse_scenario_kind(std::string_view text);

struct ScenarioConfig {
    ScenarioKind kind = ScenarioKind::Los;
    std::pair<double, double> range_interval_m{60.0, 100.0};
    int n_extra_taps = 3;
    double excess_delay_mean_s = 300e-9;
    double tap_decay_db_per_us = 13.0;
    double los_suppression_db = 0.0;
    double shadowing_sigma_db = 7.0;
    double snr_db = 15.0;
    std::pair<double, double> cfo_range_hz{-200.0, 200.0};
    double path_loss_exponent = 3.0;
    double ref_loss_db_at_1m = 40.0;

    /// Line-of-sight street scenario, 60-100 m.
    static ScenarioConfig los_default();
    /// Severe multipath scenario, 100-200 m, direct path suppressed.
    static ScenarioConfig multipath_default();

    /// Throws ConfigError if any field is out of its domain.
    void validate() const;
};

/// Log-distance path loss in dB. Throws ArgumentError for range_m < 1.
double path_loss_db(double range_m, double exponent, double ref_loss_db_at_1m, double shadowing_db);

/// Lognormal shadowing draw in dB for one location.
double draw_shadowing_db(const ScenarioConfig& config, std::uint64_t seed);

/// Draws a tapped-delay-line realization for a receiver at \p range_m.
///
/// The direct tap sits at range/c with amplitude set by path loss and a uniform
/// carrier phase. Extra taps have exponential excess delays, mean power decaying
/// with excess delay, and Rayleigh amplitudes. \p shadowing_db overrides the
/// shadowing draw so a spot can share one value across frames.
ChannelRealization sample_channel(const ScenarioConfig& config, double range_m, std::uint64_t seed,
                                  std::optional<double> shadowing_db = std::nullopt);

/// Passes \p waveform through the channel: integer-sample tapped delay line,
/// CFO rotation, then AWGN scaled to chan.snr_db against the received signal power.
std::vector<cf64> apply_channel(std::span<const cf64> waveform, const ChannelRealization& chan,
                                const lte::Numerology& num, std::uint64_t seed);

/// Analytic frequency response of the tap set at the given baseband frequencies.
std::vector<cf64> true_cfr(const ChannelRealization& chan, std::span<const double> frequencies_hz);

}  // namespace cirrange::channel
