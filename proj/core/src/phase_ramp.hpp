// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <complex>
#include <span>

namespace cirrange::detail {

/// x[i] *= exp(j * w * i). The phasor is re-anchored every block so rounding
/// drift stays near machine precision.
inline void apply_phase_ramp(std::span<std::complex<double>> x, double w) {
    constexpr std::size_t kBlock = 256;
    const std::complex<double> step = std::polar(1.0, w);
    for (std::size_t base = 0; base < x.size(); base += kBlock) {
        std::complex<double> ph = std::polar(1.0, w * static_cast<double>(base));
        const std::size_t end = std::min(x.size(), base + kBlock);
        for (std::size_t i = base; i < end; ++i) {
            x[i] *= ph;
            ph *= step;
        }
    }
}

}  // namespace cirrange::detail
