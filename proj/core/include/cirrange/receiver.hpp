// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "cirrange/lte_grid.hpp"

namespace cirrange::rx {

using cf64 = std::complex<double>;

/// Least-squares CFR at the CRS resource elements of one frame.
struct CfrEstimate {
    struct Symbol {
        int symbol_index;
        std::vector<int> subcarriers;
        std::vector<cf64> values;
    };
    std::vector<Symbol> symbols;  // CRS-bearing symbols in frame order
};

/// Sampled impulse response of one CRS-bearing symbol. Tap l sits at delay
/// l * tap_resolution_s.
struct CirProfile {
    std::vector<cf64> taps;
    double tap_resolution_s = 0.0;
};

/// Stacked |CIR| image in [0, 1]: one row per CRS-bearing symbol, one column per tap.
struct CirImage {
    int rows = 0;
    int cols = 0;
    std::vector<float> pixels;  // row-major
    double true_range_m = 0.0;
    int spot_id = 0;
    int frame_id = 0;

    float at(int row, int col) const {
        return pixels[static_cast<std::size_t>(row) * static_cast<std::size_t>(cols) +
                      static_cast<std::size_t>(col)];
    }
};

/// Frame-averaged cyclic-prefix correlation CFO estimate in Hz. Unambiguous
/// within +/- subcarrier_spacing/2.
double estimate_cfo(std::span<const cf64> waveform, const lte::Numerology& num);

/// Residual CFO in Hz from the LS pilots: the phase advance between CRS
/// symbols one slot apart (same subcarrier set), summed over the frame.
/// Unambiguous within +/- 1 kHz; meant for the remainder after estimate_cfo.
double estimate_residual_cfo(const CfrEstimate& cfr, const lte::Numerology& num);

/// Counter-rotates \p waveform by \p cfo_hz.
std::vector<cf64> remove_cfo(std::span<const cf64> waveform, double cfo_hz, const lte::Numerology& num);

/// Drops samples before \p frame_start, then strips CPs and applies a unitary
/// DFT per symbol, keeping the used subcarriers.
lte::ResourceGrid ofdm_demodulate(std::span<const cf64> waveform, const lte::Numerology& num,
                                  std::size_t frame_start, int cell_id);

/// Y / X_known at every CRS resource element. No interpolation.
CfrEstimate ls_channel_estimate(const lte::ResourceGrid& grid, const lte::CrsReference& crs_ref);

/// Zero-pads the CRS-bin CFR of one symbol to \p n_cir and applies a unitary
/// inverse DFT. Tap resolution is 1 / (n_cir * crs_spacing_hz).
CirProfile compute_cir(std::span<const cf64> cfr_values, int n_cir, double crs_spacing_hz = 90e3);

/// Maps |tap| to [0, 1] on a dB scale between \p floor_db and 0 dB.
CirImage assemble_cir_image(std::span<const CirProfile> profiles, int n_taps_kept, double floor_db);

/// Mean power in dB.
double compute_rssi(std::span<const cf64> waveform);

struct ReceiverConfig {
    int cell_id = 0;
    int n_cir = 128;
    int n_taps_kept = 64;
    double floor_db = -60.0;
    /// Fixed front-end gain applied to CIR magnitudes before imaging.
    double rx_gain_db = 60.0;
    bool correct_cfo = true;
    /// Second, pilot-aided CFO pass after the CP-correlation estimate.
    bool refine_cfo = true;
};

struct FrameObservation {
    CirImage image;
    double rssi_db = 0.0;
    double cfo_estimate_hz = 0.0;
};

/// Full receive chain for one frame: RSSI, CFO estimation and removal, frame
/// alignment, OFDM demodulation, LS estimation, CIR, image. With refine_cfo the
/// pilot residual is added to the CP estimate and the frame is demodulated again.
FrameObservation process_frame(std::span<const cf64> waveform, const lte::Numerology& num,
                               const lte::CrsReference& crs_ref, const ReceiverConfig& config,
                               std::size_t frame_start = 0);

}  // namespace cirrange::rx
