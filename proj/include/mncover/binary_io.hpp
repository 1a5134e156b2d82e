// Copyright 2026 The mncover Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Little-endian primitives and FNV-1a hashing shared by every file format.

#ifndef MNCOVER_BINARY_IO_HPP_
#define MNCOVER_BINARY_IO_HPP_

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mncover/error.hpp"

namespace mncover {

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

inline std::uint64_t Fnv1a(std::string_view bytes,
                           std::uint64_t hash = kFnvOffset) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= kFnvPrime;
  }
  return hash;
}

namespace io {

template <typename T>
void PutLe(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(buf, buf + sizeof(T));
  }
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
void PutLeArray(std::ostream& out, std::span<const T> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size_bytes()));
  } else {
    for (const T& v : values) PutLe(out, v);
  }
}

// Reads exactly sizeof(T) bytes; a short read throws kTruncated with |what|.
template <typename T>
T GetLe(std::istream& in, std::string_view what) {
  unsigned char buf[sizeof(T)];
  in.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(T))) {
    throw Error(ErrorCode::kTruncated,
                "unexpected end of file while reading " + std::string(what));
  }
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(buf, buf + sizeof(T));
  }
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

template <typename T>
void GetLeArray(std::istream& in, std::span<T> out, std::string_view what) {
  const auto bytes = static_cast<std::streamsize>(out.size_bytes());
  in.read(reinterpret_cast<char*>(out.data()), bytes);
  if (in.gcount() != bytes) {
    throw Error(ErrorCode::kTruncated,
                "unexpected end of file while reading " + std::string(what));
  }
  if constexpr (std::endian::native == std::endian::big) {
    for (T& v : out) {
      auto* p = reinterpret_cast<unsigned char*>(&v);
      std::reverse(p, p + sizeof(T));
    }
  }
}

inline void ExpectMagic(std::istream& in, std::string_view magic,
                        std::string_view file_kind) {
  std::string got(magic.size(), '\0');
  in.read(got.data(), static_cast<std::streamsize>(magic.size()));
  if (in.gcount() != static_cast<std::streamsize>(magic.size()) ||
      got != magic) {
    throw Error(ErrorCode::kFormat, std::string(file_kind) +
                                        ": bad magic, expected \"" +
                                        std::string(magic) + "\"");
  }
}

inline std::ifstream OpenIn(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open for reading: " + path);
  return in;
}

inline std::ofstream OpenOut(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open for writing: " + path);
  return out;
}

inline void CheckWritten(const std::ostream& out, const std::string& path) {
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path);
}

}  // namespace io
}  // namespace mncover

#endif  // MNCOVER_BINARY_IO_HPP_
