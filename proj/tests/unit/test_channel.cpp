// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include "cirrange/channel.hpp"
#include "cirrange/errors.hpp"
#include "cirrange/rng.hpp"
#include "doctest.h"

using namespace cirrange;
using channel::cf64;

namespace {

const lte::Numerology& num10() {
    static const auto n = lte::build_numerology(10e6);
    return n;
}

std::vector<cf64> noise_waveform(std::size_t n, std::uint64_t seed) {
    std::vector<cf64> w(n);
    Rng rng(seed);
    for (auto& x : w) x = rng.complex_normal();
    return w;
}

channel::ChannelRealization single_tap(double delay_s, cf64 gain = 1.0) {
    channel::ChannelRealization c;
    c.taps.push_back({delay_s, gain});
    c.snr_db = std::numeric_limits<double>::infinity();
    return c;
}

}  // namespace

TEST_CASE("path loss") {
    CHECK(channel::path_loss_db(1.0, 3.7, 42.0, 0.0) == doctest::Approx(42.0).epsilon(1e-15));
    CHECK(channel::path_loss_db(10.0, 3.0, 40.0, 0.0) == doctest::Approx(70.0).epsilon(1e-15));
    CHECK(channel::path_loss_db(100.0, 2.0, 40.0, 0.0) == doctest::Approx(80.0).epsilon(1e-15));
    CHECK(channel::path_loss_db(100.0, 2.0, 40.0, -3.5) == doctest::Approx(76.5).epsilon(1e-15));
    CHECK_THROWS_AS(channel::path_loss_db(0.5, 3.0, 40.0, 0.0), ArgumentError);
}

TEST_CASE("LOS first tap sits at range / c") {
    auto cfg = channel::ScenarioConfig::los_default();
    cfg.range_interval_m = {60.0, 100.0};
    const auto c = channel::sample_channel(cfg, 89.9377374, 4);
    CHECK(c.taps.front().delay_s == doctest::Approx(300e-9).epsilon(1e-8));
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const double r = 60.0 + 0.8 * static_cast<double>(seed);
        const auto ch = channel::sample_channel(cfg, r, seed);
        REQUIRE(ch.taps.front().delay_s == r / channel::kSpeedOfLight);
        REQUIRE(channel::kSpeedOfLight * ch.taps.front().delay_s == doctest::Approx(r).epsilon(1e-15));
        for (std::size_t i = 1; i < ch.taps.size(); ++i) REQUIRE(ch.taps[i].delay_s > ch.taps[i - 1].delay_s);
        REQUIRE(ch.cfo_hz >= cfg.cfo_range_hz.first);
        REQUIRE(ch.cfo_hz <= cfg.cfo_range_hz.second);
    }
}

TEST_CASE("degenerate LOS: one tap whose gain is path loss alone") {
    auto cfg = channel::ScenarioConfig::los_default();
    cfg.shadowing_sigma_db = 0.0;
    cfg.n_extra_taps = 0;
    const auto c = channel::sample_channel(cfg, 75.0, 9);
    REQUIRE(c.taps.size() == 1);
    const double expect = std::pow(10.0, -channel::path_loss_db(75.0, 3.0, 40.0, 0.0) / 20.0);
    CHECK(std::abs(c.taps[0].gain) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("shadowing override is honoured and leaves the rest of the draw unchanged") {
    const auto cfg = channel::ScenarioConfig::los_default();
    const auto a = channel::sample_channel(cfg, 80.0, 21);
    const auto b = channel::sample_channel(cfg, 80.0, 21, 4.0);
    CHECK(b.shadowing_db == 4.0);
    CHECK(a.cfo_hz == b.cfo_hz);
    REQUIRE(a.taps.size() == b.taps.size());
    const double ratio = std::abs(b.taps[0].gain) / std::abs(a.taps[0].gain);
    CHECK(20.0 * std::log10(ratio) == doctest::Approx(a.shadowing_db - 4.0).epsilon(1e-9));
    for (std::size_t i = 0; i < a.taps.size(); ++i) CHECK(a.taps[i].delay_s == b.taps[i].delay_s);
}

TEST_CASE("multipath suppression") {
    auto cfg = channel::ScenarioConfig::multipath_default();
    cfg.shadowing_sigma_db = 0.0;
    auto ref = cfg;
    ref.los_suppression_db = 0.0;
    const auto sup = channel::sample_channel(cfg, 150.0, 3);
    const auto raw = channel::sample_channel(ref, 150.0, 3);
    CHECK(20.0 * std::log10(std::abs(raw.taps[0].gain) / std::abs(sup.taps[0].gain)) ==
          doctest::Approx(cfg.los_suppression_db).epsilon(1e-9));

    cfg.los_suppression_db = channel::kLosRemovalDb;
    const auto gone = channel::sample_channel(cfg, 150.0, 3);
    CHECK(gone.taps.size() == static_cast<std::size_t>(cfg.n_extra_taps));
    CHECK(gone.taps.front().delay_s > 150.0 / channel::kSpeedOfLight);
}

TEST_CASE("multipath excess delays follow the configured mean") {
    const auto cfg = channel::ScenarioConfig::multipath_default();
    double sum = 0.0;
    std::size_t n = 0;
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
        const auto c = channel::sample_channel(cfg, 150.0, seed);
        const double direct = 150.0 / channel::kSpeedOfLight;
        for (std::size_t i = 1; i < c.taps.size(); ++i) {
            sum += c.taps[i].delay_s - direct;
            ++n;
        }
    }
    CHECK(n == 10000u * static_cast<std::size_t>(cfg.n_extra_taps));
    CHECK(std::abs(sum / static_cast<double>(n) - cfg.excess_delay_mean_s) < 0.05 * cfg.excess_delay_mean_s);
}

TEST_CASE("sample_channel preconditions and determinism") {
    const auto cfg = channel::ScenarioConfig::los_default();
    CHECK_THROWS_AS(channel::sample_channel(cfg, 59.0, 1), ArgumentError);
    CHECK_THROWS_AS(channel::sample_channel(cfg, 101.0, 1), ArgumentError);
    const auto a = channel::sample_channel(cfg, 70.0, 5);
    const auto b = channel::sample_channel(cfg, 70.0, 5);
    REQUIRE(a.taps.size() == b.taps.size());
    for (std::size_t i = 0; i < a.taps.size(); ++i) {
        CHECK(a.taps[i].delay_s == b.taps[i].delay_s);
        CHECK(a.taps[i].gain == b.taps[i].gain);
    }
    CHECK(a.cfo_hz == b.cfo_hz);
}

TEST_CASE("scenario validation") {
    auto cfg = channel::ScenarioConfig::los_default();
    cfg.range_interval_m = {100.0, 60.0};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = channel::ScenarioConfig::los_default();
    cfg.shadowing_sigma_db = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK(channel::parse_scenario_kind("multipath") == channel::ScenarioKind::Multipath);
    CHECK_THROWS_AS(channel::parse_scenario_kind("nlos"), ConfigError);
}

TEST_CASE("identity and pure-delay channels") {
    const auto w = noise_waveform(4096, 1);
    const auto same = channel::apply_channel(w, single_tap(0.0), num10(), 2);
    double err = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) err = std::max(err, std::abs(same[i] - w[i]));
    CHECK(err < 1e-12);

    const auto shifted = channel::apply_channel(w, single_tap(5.0 / num10().sample_rate_hz), num10(), 2);
    REQUIRE(shifted.size() == w.size());
    for (std::size_t i = 0; i < 5; ++i) CHECK(shifted[i] == cf64{});
    for (std::size_t i = 5; i < w.size(); ++i) REQUIRE(shifted[i] == w[i - 5]);
}

TEST_CASE("CFO rotation") {
    const auto w = noise_waveform(2048, 3);
    auto c = single_tap(0.0);
    c.cfo_hz = 1234.5;
    const auto out = channel::apply_channel(w, c, num10(), 2);
    for (std::size_t n : {0u, 1u, 700u, 2047u}) {
        const cf64 want = w[n] * std::polar(1.0, 2.0 * std::numbers::pi * c.cfo_hz * static_cast<double>(n) /
                                                      num10().sample_rate_hz);
        CHECK(std::abs(out[n] - want) < 1e-12);
    }
}

TEST_CASE("measured SNR matches the setting") {
    const auto w = noise_waveform(1000000, 5);
    auto c = single_tap(0.0);
    c.snr_db = 20.0;
    const auto out = channel::apply_channel(w, c, num10(), 6);
    double ps = 0.0, pn = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        ps += std::norm(w[i]);
        pn += std::norm(out[i] - w[i]);
    }
    const double snr = 10.0 * std::log10(ps / pn);
    CHECK(snr > 19.5);
    CHECK(snr < 20.5);
}

TEST_CASE("apply_channel rejects taps beyond the waveform") {
    const auto w = noise_waveform(100, 1);
    CHECK_THROWS_AS(channel::apply_channel(w, single_tap(1e-3), num10(), 1), ArgumentError);
    CHECK_THROWS_AS(channel::apply_channel(std::vector<cf64>{}, single_tap(0.0), num10(), 1), ArgumentError);
}

TEST_CASE("apply_channel is deterministic per seed") {
    const auto w = noise_waveform(1000, 1);
    auto c = single_tap(0.0);
    c.snr_db = 10.0;
    CHECK(channel::apply_channel(w, c, num10(), 8) == channel::apply_channel(w, c, num10(), 8));
    CHECK(channel::apply_channel(w, c, num10(), 8) != channel::apply_channel(w, c, num10(), 9));
}

TEST_CASE("true CFR") {
    const std::vector<double> f{-4.5e6, -15e3, 0.0, 15e3, 2.2e6};
    for (const auto& h : channel::true_cfr(single_tap(0.0), f)) CHECK(std::abs(h - cf64{1.0, 0.0}) < 1e-15);

    const double tau = 730e-9;
    const auto h = channel::true_cfr(single_tap(tau), f);
    for (std::size_t k = 0; k < f.size(); ++k) {
        CHECK(std::abs(h[k]) == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(std::abs(h[k] - std::polar(1.0, -2.0 * std::numbers::pi * f[k] * tau)) < 1e-12);
    }
}

TEST_CASE("two equal taps null at half the inverse spacing") {
    const double dt = 1e-6;
    channel::ChannelRealization c;
    c.taps = {{0.0, 1.0}, {dt, 1.0}};
    std::vector<double> f;
    for (int i = 0; i <= 10000; ++i) f.push_back(i * 100.0);  // 0 .. 1 MHz in 100 Hz steps
    const auto h = channel::true_cfr(c, f);
    std::size_t arg = 0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        if (f[i] > 1.0 / dt) break;
        if (std::abs(h[i]) < std::abs(h[arg])) arg = i;
    }
    CHECK(f[arg] == doctest::Approx(1.0 / (2.0 * dt)).epsilon(1e-3));
    CHECK(std::abs(h[arg]) < 1e-9);
}
