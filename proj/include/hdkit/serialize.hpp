#pragma once

#include <iosfwd>
#include <string>

#include "hdkit/tensor.hpp"

namespace hdkit::io {

// Binary hypermatrix format, little-endian throughout:
//   magic "HDCM" | version u16 | elem_type u8 | rows u32 | dim u32 |
//   seedless u8 | payload
// Dense payload is row-major elements at native width; Bin1 payload is one
// PackedBits per row (ceil(dim/64) u64 words, LSB-first bit order, zero
// padding past dim-1).
inline constexpr std::uint16_t kHdcmVersion = 1;

void write_hypermatrix(std::ostream& os, const Hypermatrix& m);
Hypermatrix read_hypermatrix(std::istream& is);

void save_hypermatrix(const std::string& path, const Hypermatrix& m);
Hypermatrix load_hypermatrix(const std::string& path);

}  // namespace hdkit::io
