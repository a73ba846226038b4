#pragma once

// Little-endian binary file helpers, private to the library sources.

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "h2v/error.hpp"

namespace h2v::binio {

inline void put_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& out, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline void put_i64(std::ostream& out, int64_t v) {
  put_u64(out, static_cast<uint64_t>(v));
}

inline void put_f32(std::ostream& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

inline void put_f64(std::ostream& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

inline void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline void put_f32_array(std::ostream& out, const float* data, size_t n) {
  // Little-endian hosts can write the buffer directly.
  static_assert(sizeof(float) == 4);
  for (size_t i = 0; i < n; ++i) put_f32(out, data[i]);
}

inline bool try_read(std::istream& in, void* dst, size_t n) {
  in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  return static_cast<size_t>(in.gcount()) == n;
}

inline uint32_t get_u32(std::istream& in, const char* what) {
  unsigned char b[4];
  if (!try_read(in, b, 4))
    raise(ErrorKind::Corruption, std::string(what) + ": truncated file");
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}

inline uint64_t get_u64(std::istream& in, const char* what) {
  unsigned char b[8];
  if (!try_read(in, b, 8))
    raise(ErrorKind::Corruption, std::string(what) + ": truncated file");
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

inline int64_t get_i64(std::istream& in, const char* what) {
  return static_cast<int64_t>(get_u64(in, what));
}

inline float get_f32(std::istream& in, const char* what) {
  uint32_t bits = get_u32(in, what);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

inline double get_f64(std::istream& in, const char* what) {
  uint64_t bits = get_u64(in, what);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

inline std::string get_string(std::istream& in, const char* what,
                              uint32_t max_len = 1 << 20) {
  uint32_t len = get_u32(in, what);
  if (len > max_len)
    raise(ErrorKind::Corruption, std::string(what) + ": absurd string length");
  std::string s(len, '\0');
  if (!try_read(in, s.data(), len))
    raise(ErrorKind::Corruption, std::string(what) + ": truncated file");
  return s;
}

}  // namespace h2v::binio
