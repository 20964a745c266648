#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <type_traits>

#include "tmr/errors.hpp"

namespace tmr {

// Little-endian fixed-width payload I/O for the binary sections of the
// codebook, feature-matrix and index files.

template <typename T>
void write_le(std::ostream& out, std::span<const T> values) {
  static_assert(std::is_arithmetic_v<T>);
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
  } else {
    for (const T& v : values) {
      char buf[sizeof(T)];
      std::memcpy(buf, &v, sizeof(T));
      for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
      out.write(buf, sizeof(T));
    }
  }
}

template <typename T>
void read_le(std::istream& in, std::span<T> values) {
  static_assert(std::is_arithmetic_v<T>);
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
  if (static_cast<std::size_t>(in.gcount()) != values.size_bytes())
    throw Error(ErrorKind::Format, "truncated binary payload");
  if constexpr (std::endian::native != std::endian::little) {
    for (T& v : values) {
      char buf[sizeof(T)];
      std::memcpy(buf, &v, sizeof(T));
      for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(buf[i], buf[sizeof(T) - 1 - i]);
      std::memcpy(&v, buf, sizeof(T));
    }
  }
}

inline void write_f32_le(std::ostream& out, std::span<const float> v) { write_le(out, v); }
inline void read_f32_le(std::istream& in, std::span<float> v) { read_le(in, v); }

template <typename T>
void write_scalar_le(std::ostream& out, T v) {
  write_le(out, std::span<const T>(&v, 1));
}

template <typename T>
T read_scalar_le(std::istream& in) {
  T v{};
  read_le(in, std::span<T>(&v, 1));
  return v;
}

}  // namespace tmr
