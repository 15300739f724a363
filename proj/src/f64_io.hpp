#pragma once

#include <bit>
#include <cstdint>
#include <fstream>

#include "wavelocate/errors.hpp"

namespace wavelocate::detail {

// explicit little-endian float64 encoding, independent of host byte order

inline void put_f64(std::ofstream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  char bytes[8];
  for (int i = 0; i < 8; ++i) {
    bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
  }
  out.write(bytes, 8);
}

inline double get_f64(std::ifstream& in) {
  char bytes[8];
  in.read(bytes, 8);
  if (!in) throw IoError("unexpected end of float64 blob");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) {
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i]))
            << (8 * i);
  }
  return std::bit_cast<double>(bits);
}

}  // namespace wavelocate::detail
