// SPDX-License-Identifier: Apache-2.0

#include "cirrange/binary_io.hpp"

#include <array>
#include <bit>

#include "cirrange/errors.hpp"

namespace cirrange::binary_io {
namespace {

template <typename U>
void put(std::ostream& os, U v) {
    std::array<char, sizeof(U)> buf{};
    for (std::size_t i = 0; i < sizeof(U); ++i) {
        buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    }
    os.write(buf.data(), buf.size());
}

template <typename U>
U get(std::istream& is) {
    std::array<unsigned char, sizeof(U)> buf{};
    is.read(reinterpret_cast<char*>(buf.data()), buf.size());
    if (!is) throw FormatError("unexpected end of file");
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(buf[i]) << (8 * i);
    return v;
}

}  // namespace

void write_u8(std::ostream& os, std::uint8_t v) { put(os, v); }
void write_u16(std::ostream& os, std::uint16_t v) { put(os, v); }
void write_u32(std::ostream& os, std::uint32_t v) { put(os, v); }
void write_u64(std::ostream& os, std::uint64_t v) { put(os, v); }
void write_f32(std::ostream& os, float v) { put(os, std::bit_cast<std::uint32_t>(v)); }
void write_f64(std::ostream& os, double v) { put(os, std::bit_cast<std::uint64_t>(v)); }
void write_bytes(std::ostream& os, const std::string& bytes) {
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::uint8_t read_u8(std::istream& is) { return get<std::uint8_t>(is); }
std::uint16_t read_u16(std::istream& is) { return get<std::uint16_t>(is); }
std::uint32_t read_u32(std::istream& is) { return get<std::uint32_t>(is); }
std::uint64_t read_u64(std::istream& is) { return get<std::uint64_t>(is); }
float read_f32(std::istream& is) { return std::bit_cast<float>(get<std::uint32_t>(is)); }
double read_f64(std::istream& is) { return std::bit_cast<double>(get<std::uint64_t>(is)); }
std::string read_bytes(std::istream& is, std::size_t n) {
    std::string out(n, '\0');
    is.read(out.data(), static_cast<std::streamsize>(n));
    if (!is) throw FormatError("unexpected end of file");
    return out;
}

}  // namespace cirrange::binary_io
