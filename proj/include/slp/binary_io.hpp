#pragma once

// Little-endian scalar encoding shared by the pose and checkpoint formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

namespace slp::io {

inline std::uint32_t to_little(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
  }
}

inline void write_u32(std::ostream& out, std::uint32_t v) {
  const std::uint32_t le = to_little(v);
  out.write(reinterpret_cast<const char*>(&le), sizeof le);
}

inline bool read_u32(std::istream& in, std::uint32_t& v) {
  std::uint32_t le = 0;
  if (!in.read(reinterpret_cast<char*>(&le), sizeof le)) return false;
  v = to_little(le);
  return true;
}

inline void write_f32(std::ostream& out, float v) { write_u32(out, std::bit_cast<std::uint32_t>(v)); }

inline bool read_f32(std::istream& in, float& v) {
  std::uint32_t bits = 0;
  if (!read_u32(in, bits)) return false;
  v = std::bit_cast<float>(bits);
  return true;
}

inline void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline bool read_string(std::istream& in, std::string& s, std::uint32_t max_len = 1u << 28) {
  std::uint32_t len = 0;
  if (!read_u32(in, len) || len > max_len) return false;
  s.resize(len);
  return static_cast<bool>(in.read(s.data(), static_cast<std::streamsize>(len)));
}

}  // namespace slp::io
