// SPDX-License-Identifier: Apache-2.0

#include "cirrange/receiver.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "cirrange/dft.hpp"
#include "cirrange/errors.hpp"
#include "phase_ramp.hpp"

namespace cirrange::rx {

double estimate_cfo(std::span<const cf64> waveform, const lte::Numerology& num) {
    const auto n_fft = static_cast<std::size_t>(num.n_fft);
    if (waveform.size() < static_cast<std::size_t>(num.cp_len_first) + n_fft) {
        throw ArgumentError("CFO estimation needs at least one OFDM symbol (" +
                            std::to_string(num.cp_len_first + num.n_fft) + " samples), got " +
                            std::to_string(waveform.size()));
    }
    cf64 corr{};
    std::size_t start = 0;
    for (int s = 0;; ++s) {
        const auto cp = static_cast<std::size_t>(num.cp_len(s % num.symbols_per_frame()));
        if (start + cp + n_fft > waveform.size()) break;
        for (std::size_t i = 0; i < cp; ++i) {
            corr += std::conj(waveform[start + i]) * waveform[start + i + n_fft];
        }
        start += cp + n_fft;
    }
    return std::arg(corr) * num.sample_rate_hz / (2.0 * std::numbers::pi * num.n_fft);
}

std::vector<cf64> remove_cfo(std::span<const cf64> waveform, double cfo_hz, const lte::Numerology& num) {
    std::vector<cf64> out(waveform.begin(), waveform.end());
    if (cfo_hz == 0.0) return out;
    detail::apply_phase_ramp(out, -2.0 * std::numbers::pi * cfo_hz / num.sample_rate_hz);
    return out;
}

lte::ResourceGrid ofdm_demodulate(std::span<const cf64> waveform, const lte::Numerology& num,
                                  std::size_t frame_start, int cell_id) {
    const std::size_t required = frame_start + num.samples_per_frame();
    if (waveform.size() < required) {
        throw ArgumentError("OFDM demodulation needs " + std::to_string(required) +
                            " samples from frame start " + std::to_string(frame_start) +
                            ", only " + std::to_string(waveform.size()) + " available");
    }
    auto grid = lte::ResourceGrid::for_numerology(num, cell_id);
    std::vector<cf64> body(static_cast<std::size_t>(num.n_fft));
    for (int s = 0; s < num.symbols_per_frame(); ++s) {
        const std::size_t begin = frame_start + num.symbol_offset(s) + static_cast<std::size_t>(num.cp_len(s));
        std::copy_n(waveform.begin() + static_cast<std::ptrdiff_t>(begin), body.size(), body.begin());
        unitary_dft(body, DftDirection::Forward);
        auto cells = grid.symbol(s);
        for (int row = 0; row < num.n_used_subcarriers; ++row) {
            cells[static_cast<std::size_t>(row)] = body[static_cast<std::size_t>(num.fft_bin(row))];
        }
    }
    return grid;
}

CfrEstimate ls_channel_estimate(const lte::ResourceGrid& grid, const lte::CrsReference& crs_ref) {
    if (grid.cell_id() != crs_ref.cell_id) {
        throw ArgumentError("grid cell_id " + std::to_string(grid.cell_id()) +
                            " does not match CRS reference cell_id " + std::to_string(crs_ref.cell_id));
    }
    CfrEstimate est;
    for (const auto& e : crs_ref.entries) {
        if (est.symbols.empty() || est.symbols.back().symbol_index != e.symbol) {
            est.symbols.push_back({e.symbol, {}, {}});
        }
        auto& sym = est.symbols.back();
        sym.subcarriers.push_back(e.subcarrier);
        sym.values.push_back(grid.at(e.subcarrier, e.symbol) / e.value);
    }
    return est;
}

double estimate_residual_cfo(const CfrEstimate& cfr, const lte::Numerology& num) {
    const auto& syms = cfr.symbols;
    const int spp = num.symbols_per_slot;
    cf64 corr{};
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < syms.size(); ++i) {
        for (std::size_t j = i + 1; j < syms.size(); ++j) {
            if (syms[j].symbol_index != syms[i].symbol_index + spp) continue;
            if (syms[j].subcarriers != syms[i].subcarriers) continue;
            for (std::size_t k = 0; k < syms[i].values.size(); ++k) corr += std::conj(syms[i].values[k]) * syms[j].values[k];
            ++pairs;
        }
    }
    if (pairs == 0) throw ArgumentError("residual CFO needs CRS symbols one slot apart");
    // Window starts one slot apart are exactly one slot of samples apart.
    const double slot_samples = static_cast<double>(num.symbol_offset(spp));
    return std::arg(corr) * num.sample_rate_hz / (2.0 * std::numbers::pi * slot_samples);
}

CirProfile compute_cir(std::span<const cf64> cfr_values, int n_cir, double crs_spacing_hz) {
    if (n_cir <= 0 || !std::has_single_bit(static_cast<unsigned>(n_cir))) {
        throw ArgumentError("n_cir must be a power of two, got " + std::to_string(n_cir));
    }
    if (static_cast<std::size_t>(n_cir) < cfr_values.size()) {
        throw ArgumentError("n_cir " + std::to_string(n_cir) + " smaller than CFR length " +
                            std::to_string(cfr_values.size()));
    }
    CirProfile profile;
    profile.taps.assign(static_cast<std::size_t>(n_cir), cf64{});
    std::copy(cfr_values.begin(), cfr_values.end(), profile.taps.begin());
    unitary_dft(profile.taps, DftDirection::Inverse);
    profile.tap_resolution_s = 1.0 / (n_cir * crs_spacing_hz);
    return profile;
}

CirImage assemble_cir_image(std::span<const CirProfile> profiles, int n_taps_kept, double floor_db) {
    if (profiles.empty()) throw ArgumentError("CIR image needs at least one profile");
    if (!(floor_db < 0.0)) throw ArgumentError("floor_db must be negative");
    const std::size_t n_cir = profiles.front().taps.size();
    for (const auto& p : profiles) {
        if (p.taps.size() != n_cir) {
            throw ArgumentError("CIR profiles have mismatched lengths (" + std::to_string(n_cir) +
                                " vs " + std::to_string(p.taps.size()) + ")");
        }
    }
    if (n_taps_kept <= 0 || static_cast<std::size_t>(n_taps_kept) > n_cir) {
        throw ArgumentError("n_taps_kept " + std::to_string(n_taps_kept) + " outside [1, " +
                            std::to_string(n_cir) + "]");
    }
    constexpr double kEps = 1e-12;
    CirImage img;
    img.rows = static_cast<int>(profiles.size());
    img.cols = n_taps_kept;
    img.pixels.resize(static_cast<std::size_t>(img.rows) * static_cast<std::size_t>(img.cols));
    for (int r = 0; r < img.rows; ++r) {
        const auto& taps = profiles[static_cast<std::size_t>(r)].taps;
        for (int c = 0; c < img.cols; ++c) {
            const double db = 20.0 * std::log10(std::abs(taps[static_cast<std::size_t>(c)]) + kEps);
            const double v = std::clamp((db - floor_db) / (0.0 - floor_db), 0.0, 1.0);
            img.pixels[static_cast<std::size_t>(r) * static_cast<std::size_t>(img.cols) +
                       static_cast<std::size_t>(c)] = static_cast<float>(v);
        }
    }
    return img;
}

double compute_rssi(std::span<const cf64> waveform) {
    if (waveform.empty()) throw ArgumentError("RSSI of an empty waveform is undefined");
    double power = 0.0;
    for (const auto& x : waveform) power += std::norm(x);
    return 10.0 * std::log10(power / static_cast<double>(waveform.size()));
}

FrameObservation process_frame(std::span<const cf64> waveform, const lte::Numerology& num,
                               const lte::CrsReference& crs_ref, const ReceiverConfig& config,
                               std::size_t frame_start) {
    FrameObservation obs;
    const std::size_t frame_len = num.samples_per_frame();
    if (waveform.size() < frame_start + frame_len) {
        throw ArgumentError("waveform holds " + std::to_string(waveform.size()) +
                            " samples, need " + std::to_string(frame_start + frame_len));
    }
    obs.rssi_db = compute_rssi(waveform.subspan(frame_start, frame_len));

    std::vector<cf64> corrected;
    std::span<const cf64> aligned = waveform;
    if (config.correct_cfo) {
        obs.cfo_estimate_hz = estimate_cfo(waveform.subspan(frame_start, frame_len), num);
        corrected = remove_cfo(waveform, obs.cfo_estimate_hz, num);
        aligned = corrected;
    }
    auto cfr = ls_channel_estimate(ofdm_demodulate(aligned, num, frame_start, config.cell_id), crs_ref);
    if (config.correct_cfo && config.refine_cfo) {
        obs.cfo_estimate_hz += estimate_residual_cfo(cfr, num);
        corrected = remove_cfo(waveform, obs.cfo_estimate_hz, num);
        cfr = ls_channel_estimate(ofdm_demodulate(corrected, num, frame_start, config.cell_id), crs_ref);
    }

    const double gain = std::pow(10.0, config.rx_gain_db / 20.0);
    std::vector<CirProfile> profiles;
    profiles.reserve(cfr.symbols.size());
    for (const auto& sym : cfr.symbols) {
        auto p = compute_cir(sym.values, config.n_cir, num.crs_spacing_hz());
        for (auto& t : p.taps) t *= gain;
        profiles.push_back(std::move(p));
    }
    if (profiles.size() != static_cast<std::size_t>(2 * num.slots_per_frame)) {
        throw ArgumentError("expected " + std::to_string(2 * num.slots_per_frame) +
                            " CRS-bearing symbols per frame, got " + std::to_string(profiles.size()));
    }
    obs.image = assemble_cir_image(profiles, config.n_taps_kept, config.floor_db);
    return obs;
}

}  // namespace cirrange::rx
