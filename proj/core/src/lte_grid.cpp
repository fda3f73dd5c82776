// SPDX-License-Identifier: Apache-2.0

#include "cirrange/lte_grid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

#include "cirrange/dft.hpp"
#include "cirrange/errors.hpp"
#include "cirrange/rng.hpp"

namespace cirrange::lte {
namespace {

struct BandwidthRow {
    double bandwidth_hz;
    int n_fft;
    int resource_blocks;
};

constexpr std::array<BandwidthRow, 6> kBandwidthTable{{
    {1.4e6, 128, 6},
    {3e6, 256, 15},
    {5e6, 512, 25},
    {10e6, 1024, 50},
    {15e6, 1536, 75},
    {20e6, 2048, 100},
}};

}  // namespace

std::size_t Numerology::symbol_offset(int symbol_index) const {
    const int slot = symbol_index / symbols_per_slot;
    const int within = symbol_index % symbols_per_slot;
    const std::size_t slot_len = static_cast<std::size_t>(cp_len_first) +
                                 static_cast<std::size_t>(symbols_per_slot - 1) * cp_len_rest +
                                 static_cast<std::size_t>(symbols_per_slot) * n_fft;
    std::size_t offset = static_cast<std::size_t>(slot) * slot_len;
    if (within > 0) {
        offset += static_cast<std::size_t>(cp_len_first + n_fft) +
                  static_cast<std::size_t>(within - 1) * (cp_len_rest + n_fft);
    }
    return offset;
}

int Numerology::signed_subcarrier(int row) const {
    const int half = n_used_subcarriers / 2;
    return row < half ? row - half : row - half + 1;
}

int Numerology::fft_bin(int row) const {
    const int k = signed_subcarrier(row);
    return k < 0 ? k + n_fft : k;
}

Numerology build_numerology(double bandwidth_hz) {
    for (const auto& row : kBandwidthTable) {
        if (std::abs(row.bandwidth_hz - bandwidth_hz) < 1.0) {
            Numerology num;
            num.bandwidth_hz = row.bandwidth_hz;
            num.n_fft = row.n_fft;
            num.n_used_subcarriers = row.resource_blocks * 12;
            num.sample_rate_hz = row.n_fft * num.subcarrier_spacing_hz;
            // CP lengths scale with n_fft: 160/144 samples at 2048.
            num.cp_len_first = 160 * row.n_fft / 2048;
            num.cp_len_rest = 144 * row.n_fft / 2048;
            return num;
        }
    }
    std::ostringstream msg;
    msg << "unsupported LTE bandwidth " << bandwidth_hz
        << " Hz; valid values are 1.4e6, 3e6, 5e6, 10e6, 15e6, 20e6";
    throw ConfigError(msg.str());
}

ResourceGrid::ResourceGrid(int n_subcarriers, int n_symbols, int cell_id)
    : n_subcarriers_(n_subcarriers), n_symbols_(n_symbols), cell_id_(cell_id) {
    if (n_subcarriers <= 0 || n_symbols <= 0) {
        throw ArgumentError("resource grid dimensions must be positive");
    }
    if (cell_id < 0 || cell_id > kMaxCellId) {
        throw ArgumentError("cell_id " + std::to_string(cell_id) + " outside [0, 503]");
    }
    cells_.assign(static_cast<std::size_t>(n_subcarriers) * static_cast<std::size_t>(n_symbols),
                  cf64{});
}

ResourceGrid ResourceGrid::for_numerology(const Numerology& num, int cell_id) {
    return ResourceGrid(num.n_used_subcarriers, num.symbols_per_frame(), cell_id);
}

std::span<cf64> ResourceGrid::symbol(int symbol) {
    return std::span<cf64>(cells_).subspan(index(0, symbol), static_cast<std::size_t>(n_subcarriers_));
}

std::span<const cf64> ResourceGrid::symbol(int symbol) const {
    return std::span<const cf64>(cells_).subspan(index(0, symbol),
                                                 static_cast<std::size_t>(n_subcarriers_));
}

bool ResourceGrid::matches(const Numerology& num) const {
    return n_subcarriers_ == num.n_used_subcarriers && n_symbols_ == num.symbols_per_frame();
}

std::vector<int> crs_positions(int cell_id, int symbol_index, const Numerology& num) {
    if (symbol_index < 0 || symbol_index >= num.symbols_per_frame()) {
        throw ArgumentError("symbol_index " + std::to_string(symbol_index) + " outside [0, " +
                            std::to_string(num.symbols_per_frame() - 1) + "]");
    }
    const int slot_symbol = symbol_index % num.symbols_per_slot;
    if (slot_symbol != 0 && slot_symbol != 4) return {};
    const int v = slot_symbol == 0 ? 0 : 3;
    const int shift = (v + cell_id % kCrsSpacing) % kCrsSpacing;
    std::vector<int> rows;
    rows.reserve(static_cast<std::size_t>(num.crs_per_symbol()));
    for (int k = shift; k < num.n_used_subcarriers; k += kCrsSpacing) rows.push_back(k);
    return rows;
}

std::vector<cf64> generate_crs_sequence(int cell_id, int symbol_index, int count) {
    std::uint64_t state = static_cast<std::uint64_t>(cell_id) * 140u +
                          static_cast<std::uint64_t>(symbol_index);
    const double a = std::numbers::sqrt2 / 2.0;
    std::vector<cf64> seq;
    seq.reserve(static_cast<std::size_t>(std::max(count, 0)));
    std::uint64_t word = 0;
    for (int i = 0; i < count; ++i) {
        const int slot = i % 32;
        if (slot == 0) word = splitmix64(state);
        const bool neg_re = (word >> (2 * slot)) & 1u;
        const bool neg_im = (word >> (2 * slot + 1)) & 1u;
        seq.emplace_back(neg_re ? -a : a, neg_im ? -a : a);
    }
    return seq;
}

CrsReference make_crs_reference(const Numerology& num, int cell_id) {
    if (cell_id < 0 || cell_id > kMaxCellId) {
        throw ArgumentError("cell_id " + std::to_string(cell_id) + " outside [0, 503]");
    }
    CrsReference ref;
    ref.cell_id = cell_id;
    for (int s = 0; s < num.symbols_per_frame(); ++s) {
        const auto rows = crs_positions(cell_id, s, num);
        if (rows.empty()) continue;
        const auto seq = generate_crs_sequence(cell_id, s, static_cast<int>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) ref.entries.push_back({rows[i], s, seq[i]});
    }
    return ref;
}

ResourceGrid build_transmit_grid(const Numerology& num, int cell_id,
                                 std::optional<std::uint64_t> data_seed) {
    ResourceGrid grid = ResourceGrid::for_numerology(num, cell_id);
    if (data_seed) {
        Rng rng(*data_seed);
        const double a = std::numbers::sqrt2 / 2.0;
        for (int s = 0; s < grid.n_symbols(); ++s) {
            for (auto& cell : grid.symbol(s)) {
                const std::uint64_t bits = rng.next_u64();
                cell = cf64((bits & 1u) ? -a : a, (bits & 2u) ? -a : a);
            }
        }
    }
    for (const auto& e : make_crs_reference(num, cell_id).entries) {
        grid.at(e.subcarrier, e.symbol) = e.value;
    }
    return grid;
}

std::vector<cf64> ofdm_modulate(const ResourceGrid& grid, const Numerology& num) {
    if (!grid.matches(num)) {
        throw ArgumentError("resource grid is " + std::to_string(grid.n_subcarriers()) + "x" +
                            std::to_string(grid.n_symbols()) + " but numerology expects " +
                            std::to_string(num.n_used_subcarriers) + "x" +
                            std::to_string(num.symbols_per_frame()));
    }
    std::vector<cf64> waveform(num.samples_per_frame());
    std::vector<cf64> body(static_cast<std::size_t>(num.n_fft));
    for (int s = 0; s < num.symbols_per_frame(); ++s) {
        std::fill(body.begin(), body.end(), cf64{});
        const auto cells = grid.symbol(s);
        for (int row = 0; row < num.n_used_subcarriers; ++row) {
            body[static_cast<std::size_t>(num.fft_bin(row))] = cells[static_cast<std::size_t>(row)];
        }
        unitary_dft(body, DftDirection::Inverse);
        const auto cp = static_cast<std::size_t>(num.cp_len(s));
        auto out = waveform.begin() + static_cast<std::ptrdiff_t>(num.symbol_offset(s));
        out = std::copy(body.end() - static_cast<std::ptrdiff_t>(cp), body.end(), out);
        std::copy(body.begin(), body.end(), out);
    }
    return waveform;
}

}  // namespace cirrange::lte
