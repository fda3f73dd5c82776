// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include "cirrange/receiver.hpp"

namespace cirrange::harness {

/// Binary 8-bit graymap (P5). Rows are CRS symbols, columns are CIR taps;
/// each pixel is replicated into a scale x scale block.
std::string encode_pgm(const rx::CirImage& image, int scale = 1);
void write_pgm(const std::filesystem::path& path, const rx::CirImage& image, int scale = 1);

}  // namespace cirrange::harness
