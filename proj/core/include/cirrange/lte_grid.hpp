// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace cirrange::lte {

using cf64 = std::complex<double>;

inline constexpr int kMaxCellId = 503;
inline constexpr int kCrsSpacing = 6;

/// LTE downlink numerology for one channel bandwidth, normal cyclic prefix.
struct Numerology {
    double bandwidth_hz = 0.0;
    double subcarrier_spacing_hz = 15000.0;
    int n_fft = 0;
    int n_used_subcarriers = 0;
    double sample_rate_hz = 0.0;
    int cp_len_first = 0;
    int cp_len_rest = 0;
    int symbols_per_slot = 7;
    int slots_per_frame = 20;

    int symbols_per_frame() const { return symbols_per_slot * slots_per_frame; }
    int cp_len(int symbol_index) const {
        return symbol_index % symbols_per_slot == 0 ? cp_len_first : cp_len_rest;
    }
    /// Sample offset of the first CP sample of \p symbol_index within a frame.
    std::size_t symbol_offset(int symbol_index) const;
    std::size_t samples_per_frame() const { return symbol_offset(symbols_per_frame()); }
    int crs_per_symbol() const { return n_used_subcarriers / kCrsSpacing; }
    double crs_spacing_hz() const { return kCrsSpacing * subcarrier_spacing_hz; }

    /// Signed subcarrier number (DC excluded) of used-subcarrier row \p row.
    int signed_subcarrier(int row) const;
    /// FFT bin carrying used-subcarrier row \p row.
    int fft_bin(int row) const;
    /// Baseband frequency of used-subcarrier row \p row.
    double subcarrier_frequency_hz(int row) const {
        return signed_subcarrier(row) * subcarrier_spacing_hz;
    }
};

/// Standard numerology row. Throws ConfigError for bandwidths outside
/// {1.4, 3, 5, 10, 15, 20} MHz.
Numerology build_numerology(double bandwidth_hz);

/// One frame of subcarrier x OFDM-symbol cells. Storage is symbol-major so
/// each symbol's subcarriers are contiguous.
class ResourceGrid {
public:
    ResourceGrid(int n_subcarriers, int n_symbols, int cell_id);
    static ResourceGrid for_numerology(const Numerology& num, int cell_id);

    int n_subcarriers() const { return n_subcarriers_; }
    int n_symbols() const { return n_symbols_; }
    int cell_id() const { return cell_id_; }

    cf64& at(int subcarrier, int symbol) { return cells_[index(subcarrier, symbol)]; }
    const cf64& at(int subcarrier, int symbol) const { return cells_[index(subcarrier, symbol)]; }

    std::span<cf64> symbol(int symbol);
    std::span<const cf64> symbol(int symbol) const;
    std::span<const cf64> cells() const { return cells_; }

    bool matches(const Numerology& num) const;

private:
    std::size_t index(int subcarrier, int symbol) const {
        return static_cast<std::size_t>(symbol) * static_cast<std::size_t>(n_subcarriers_) +
               static_cast<std::size_t>(subcarrier);
    }

    int n_subcarriers_;
    int n_symbols_;
    int cell_id_;
    std::vector<cf64> cells_;
};

/// Known pilot values of antenna port 0 across one frame.
struct CrsReference {
    struct Entry {
        int subcarrier;
        int symbol;
        cf64 value;
    };
    int cell_id = 0;
    std::vector<Entry> entries;  // ordered by symbol, then subcarrier
};

/// Port-0 CRS subcarrier rows for \p symbol_index of a frame (empty for
/// symbols that carry no CRS).
std::vector<int> crs_positions(int cell_id, int symbol_index, const Numerology& num);

/// Deterministic unit-modulus QPSK pilot sequence.
///
/// A SplitMix64 state seeded with cell_id * 140 + symbol_index yields one
/// 64-bit word per 32 pilots; pilot i uses bits 2*(i%32) (real sign) and
/// 2*(i%32)+1 (imaginary sign), a set bit meaning negative.
std::vector<cf64> generate_crs_sequence(int cell_id, int symbol_index, int count);

CrsReference make_crs_reference(const Numerology& num, int cell_id);

/// Transmit grid with port-0 CRS. When \p data_seed is given, every non-CRS
/// resource element carries a random unit-power QPSK symbol.
ResourceGrid build_transmit_grid(const Numerology& num, int cell_id,
                                 std::optional<std::uint64_t> data_seed);

/// OFDM-modulates one frame: DC-centred mapping, unitary IDFT, cyclic prefix.
std::vector<cf64> ofdm_modulate(const ResourceGrid& grid, const Numerology& num);

}  // namespace cirrange::lte
