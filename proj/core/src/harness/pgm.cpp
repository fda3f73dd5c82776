// SPDX-License-Identifier: Apache-2.0

#include "cirrange/harness/pgm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "cirrange/errors.hpp"

namespace cirrange::harness {

std::string encode_pgm(const rx::CirImage& image, int scale) {
    if (scale < 1) throw ArgumentError("pgm scale must be >= 1");
    const int w = image.cols * scale;
    const int h = image.rows * scale;
    std::string out = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    out.reserve(out.size() + static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double v = std::clamp(static_cast<double>(image.at(y / scale, x / scale)), 0.0, 1.0);
            out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
        }
    }
    return out;
}

void write_pgm(const std::filesystem::path& path, const rx::CirImage& image, int scale) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw FormatError("cannot open " + path.string() + " for writing");
    const std::string bytes = encode_pgm(image, scale);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace cirrange::harness
