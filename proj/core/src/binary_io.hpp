#pragma once

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>

// Little-endian scalar packing shared by the RCB1, RFV1 and RSM1 formats.
namespace retina::binio {

inline void put_u8(std::ostream& os, std::uint8_t v) { os.put(static_cast<char>(v)); }

inline void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  os.write(b, 4);
}

inline void put_f32(std::ostream& os, float v) { put_u32(os, std::bit_cast<std::uint32_t>(v)); }

inline bool get_u8(std::istream& is, std::uint8_t& v) {
  char c;
  if (!is.get(c)) return false;
  v = static_cast<std::uint8_t>(c);
  return true;
}

inline bool get_u32(std::istream& is, std::uint32_t& v) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) return false;
  v = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
      (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  return true;
}

inline bool get_f32(std::istream& is, float& v) {
  std::uint32_t u;
  if (!get_u32(is, u)) return false;
  v = std::bit_cast<float>(u);
  return true;
}

}  // namespace retina::binio
