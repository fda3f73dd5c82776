// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <span>

namespace cirrange {

enum class DftDirection { Forward, Inverse };

/// In-place unitary DFT (scaled by 1/sqrt(n) in both directions).
///
/// Forward uses the e^{-j2pi kn/N} kernel. Backed by FFTW; plans are cached per
/// (size, direction) and execution is safe from multiple threads.
void unitary_dft(std::span<std::complex<double>> data, DftDirection direction);

}  // namespace cirrange
