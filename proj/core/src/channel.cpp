// SPDX-License-Identifier: Apache-2.0

#include "cirrange/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include "cirrange/errors.hpp"
#include "phase_ramp.hpp"
#include "cirrange/rng.hpp"

namespace cirrange::channel {

std::string_view to_string(ScenarioKind kind) {
    return kind == ScenarioKind::Los ? "los" : "multipath";
}

ScenarioKind parse_scenario_kind(std::string_view text) {
    if (text == "los") return ScenarioKind::Los;
    if (text == "multipath") return ScenarioKind::Multipath;
    throw ConfigError("unknown scenario kind '" + std::string(text) + "' (expected los or multipath)");
}

ScenarioConfig ScenarioConfig::los_default() {
    return ScenarioConfig{};
}

ScenarioConfig ScenarioConfig::multipath_default() {
    ScenarioConfig c;
    c.kind = ScenarioKind::Multipath;
    c.range_interval_m = {100.0, 200.0};
    c.n_extra_taps = 8;
    c.los_suppression_db = 15.0;
    return c;
}

void ScenarioConfig::validate() const {
    auto fail = [](const std::string& what) { throw ConfigError("scenario: " + what); };
    if (!(range_interval_m.first > 0.0) || !(range_interval_m.second > range_interval_m.first)) {
        fail("range interval must satisfy 0 < min < max");
    }
    if (range_interval_m.first < 1.0) fail("range interval must start at or above 1 m");
    if (n_extra_taps < 0) fail("n_extra_taps must be >= 0");
    if (!(excess_delay_mean_s > 0.0)) fail("excess_delay_mean must be positive");
    if (!(tap_decay_db_per_us >= 0.0)) fail("tap_decay_db_per_us must be >= 0");
    if (!(los_suppression_db >= 0.0)) fail("los_suppression_db must be >= 0");
    if (!(shadowing_sigma_db >= 0.0)) fail("shadowing_sigma_db must be >= 0");
    if (std::isnan(snr_db)) fail("snr_db must be a number");
    if (!(cfo_range_hz.first <= cfo_range_hz.second)) fail("cfo range must be ordered");
    if (!(path_loss_exponent > 0.0)) fail("path_loss_exponent must be positive");
}

double path_loss_db(double range_m, double exponent, double ref_loss_db_at_1m, double shadowing_db) {
    if (!(range_m >= 1.0)) {
        throw ArgumentError("path loss needs range >= 1 m, got " + std::to_string(range_m));
    }
    return ref_loss_db_at_1m + 10.0 * exponent * std::log10(range_m) + shadowing_db;
}

double draw_shadowing_db(const ScenarioConfig& config, std::uint64_t seed) {
    Rng rng(seed);
    return config.shadowing_sigma_db * rng.normal();
}

ChannelRealization sample_channel(const ScenarioConfig& config, double range_m, std::uint64_t seed,
                                  std::optional<double> shadowing_db) {
    const auto [lo, hi] = config.range_interval_m;
    if (!(range_m > 0.0) || range_m < lo || range_m > hi) {
        std::ostringstream msg;
        msg << "range " << range_m << " m outside scenario interval [" << lo << ", " << hi << "]";
        throw ArgumentError(msg.str());
    }
    Rng rng(seed);
    // Always consume the shadowing draw so the remaining stream does not
    // depend on whether an override was supplied.
    const double drawn_shadow = config.shadowing_sigma_db * rng.normal();
    const double shadow = shadowing_db.value_or(drawn_shadow);

    ChannelRealization chan;
    chan.true_range_m = range_m;
    chan.snr_db = config.snr_db;
    chan.shadowing_db = shadow;
    chan.cfo_hz = rng.uniform(config.cfo_range_hz.first, config.cfo_range_hz.second);

    const double amplitude =
        std::pow(10.0, -path_loss_db(range_m, config.path_loss_exponent, config.ref_loss_db_at_1m, shadow) / 20.0);
    const double direct_delay = range_m / kSpeedOfLight;

    const double direct_phase = 2.0 * std::numbers::pi * rng.uniform();
    const double suppression =
        config.kind == ScenarioKind::Multipath ? config.los_suppression_db : 0.0;
    if (suppression < kLosRemovalDb) {
        chan.taps.push_back({direct_delay, std::polar(amplitude * std::pow(10.0, -suppression / 20.0),
                                                      direct_phase)});
    }

    std::vector<double> excess(static_cast<std::size_t>(config.n_extra_taps));
    for (auto& e : excess) e = rng.exponential(config.excess_delay_mean_s);
    std::vector<cf64> fading(excess.size());
    for (auto& f : fading) f = rng.complex_normal();
    std::sort(excess.begin(), excess.end());
    for (std::size_t i = 0; i < excess.size(); ++i) {
        const double rel_power_db = -config.tap_decay_db_per_us * excess[i] * 1e6;
        const double mean_amp = amplitude * std::pow(10.0, rel_power_db / 20.0);
        chan.taps.push_back({direct_delay + excess[i], mean_amp * fading[i]});
    }
    return chan;
}

std::vector<cf64> apply_channel(std::span<const cf64> waveform, const ChannelRealization& chan,
                                const lte::Numerology& num, std::uint64_t seed) {
    if (waveform.empty()) throw ArgumentError("apply_channel: empty waveform");
    const std::size_t n = waveform.size();
    const double fs = num.sample_rate_hz;
    const double duration = static_cast<double>(n) / fs;
    std::vector<cf64> out(n);
    for (const auto& tap : chan.taps) {
        if (tap.delay_s < 0.0 || tap.delay_s > duration) {
            std::ostringstream msg;
            msg << "tap delay " << tap.delay_s << " s exceeds waveform duration " << duration << " s";
            throw ArgumentError(msg.str());
        }
        const auto d = static_cast<std::size_t>(std::llround(tap.delay_s * fs));
        for (std::size_t i = d; i < n; ++i) out[i] += tap.gain * waveform[i - d];
    }
    if (chan.cfo_hz != 0.0) {
        detail::apply_phase_ramp(out, 2.0 * std::numbers::pi * chan.cfo_hz / fs);
    }
    if (std::isfinite(chan.snr_db)) {
        double power = 0.0;
        for (const auto& x : out) power += std::norm(x);
        power /= static_cast<double>(n);
        const double sigma = std::sqrt(power / std::pow(10.0, chan.snr_db / 10.0));
        Rng rng(seed);
        for (auto& x : out) x += sigma * rng.complex_normal();
    }
    return out;
}

std::vector<cf64> true_cfr(const ChannelRealization& chan, std::span<const double> frequencies_hz) {
    std::vector<cf64> h(frequencies_hz.size());
    for (std::size_t k = 0; k < frequencies_hz.size(); ++k) {
        cf64 acc{};
        for (const auto& tap : chan.taps) {
            acc += tap.gain * std::polar(1.0, -2.0 * std::numbers::pi * frequencies_hz[k] * tap.delay_s);
        }
        h[k] = acc;
    }
    return h;
}

}  // namespace cirrange::channel
