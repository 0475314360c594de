#pragma once

// Little-endian raw array I/O shared by the bundle, cache and checkpoint files.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include <fmt/format.h>

#include "gpnet/error.hpp"

namespace gpnet::io {

template <typename T>
T byteswap(T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
  std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

template <typename T>
T to_little(T value) {
  if constexpr (std::endian::native == std::endian::little) return value;
  else return byteswap(value);
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, fmt::format("cannot open {} for writing", path.string()));
  return out;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::kMissingFile, fmt::format("missing file {}", path.string()));
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, fmt::format("cannot open {}", path.string()));
  return in;
}

template <typename T>
void write_array(std::ostream& out, std::span<const T> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size_bytes()));
  } else {
    for (T v : values) {
      T le = to_little(v);
      out.write(reinterpret_cast<const char*>(&le), sizeof(T));
    }
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed");
}

template <typename T>
void write_scalar(std::ostream& out, T value) {
  write_array<T>(out, std::span<const T>(&value, 1));
}

template <typename T>
void read_array(std::istream& in, std::span<T> values, const std::string& what) {
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
  if (static_cast<std::size_t>(in.gcount()) != values.size_bytes()) {
    throw Error(ErrorCode::kCountMismatch, fmt::format("{}: truncated payload", what));
  }
  if constexpr (std::endian::native != std::endian::little) {
    for (T& v : values) v = byteswap(v);
  }
}

template <typename T>
T read_scalar(std::istream& in, const std::string& what) {
  T value{};
  read_array<T>(in, std::span<T>(&value, 1), what);
  return value;
}

// Whole file as elements of T; the byte size must be a multiple of sizeof(T).
template <typename T>
std::vector<T> read_file_array(const std::filesystem::path& path) {
  auto in = open_in(path);
  const auto bytes = std::filesystem::file_size(path);
  if (bytes % sizeof(T) != 0) {
    throw Error(ErrorCode::kMalformed,
                fmt::format("{}: size {} is not a multiple of {}", path.string(), bytes, sizeof(T)));
  }
  std::vector<T> values(bytes / sizeof(T));
  read_array<T>(in, values, path.string());
  return values;
}

inline bool at_eof(std::istream& in) {
  return in.peek() == std::char_traits<char>::eof();
}

}  // namespace gpnet::io
