// Copyright 2026 The subtag Authors.
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

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

#include "subtag/error.h"

// Little-endian primitives shared by the .emb and .rpf formats.

namespace subtag::io {

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_integral_v<T>);
  char buf[sizeof(T)];
  auto u = static_cast<std::make_unsigned_t<T>>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf[i] = static_cast<char>(u & 0xFF);
    u = static_cast<std::make_unsigned_t<T>>(u >> 8);
  }
  out.write(buf, sizeof(T));
}

inline void put_f32(std::ostream& out, float v) {
  put_le(out, std::bit_cast<std::uint32_t>(v));
}

inline void put_f32s(std::ostream& out, std::span<const float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size_bytes()));
  } else {
    for (const float v : values) put_f32(out, v);
  }
}

inline void put_magic(std::ostream& out, std::string_view magic) {
  out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

class Reader {
 public:
  Reader(std::istream& in, std::string what) : in_(in), what_(std::move(what)) {}

  void read_bytes(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw FormatError(what_ + ": truncated file");
    }
  }

  template <typename T>
  T le() {
    unsigned char buf[sizeof(T)];
    read_bytes(reinterpret_cast<char*>(buf), sizeof(T));
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = sizeof(T); i-- > 0;) {
      u = static_cast<std::make_unsigned_t<T>>((u << 8) | buf[i]);
    }
    return static_cast<T>(u);
  }

  float f32() { return std::bit_cast<float>(le<std::uint32_t>()); }

  void f32s(std::span<float> dst) {
    if constexpr (std::endian::native == std::endian::little) {
      read_bytes(reinterpret_cast<char*>(dst.data()), dst.size_bytes());
    } else {
      for (auto& v : dst) v = f32();
    }
  }

  std::string str(std::size_t n) {
    std::string s(n, '\0');
    read_bytes(s.data(), n);
    return s;
  }

  void expect_magic(std::string_view magic) {
    const auto got = str(magic.size());
    if (got != magic) {
      throw FormatError(what_ + ": bad magic, expected " + std::string(magic));
    }
  }

  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) {
      throw FormatError(what_ + ": trailing bytes after payload");
    }
  }

  /// Bytes left in the stream, when the stream is seekable.
  std::optional<std::uint64_t> remaining() {
    const auto pos = in_.tellg();
    if (pos < 0) return std::nullopt;
    in_.seekg(0, std::ios::end);
    const auto end = in_.tellg();
    in_.seekg(pos);
    if (end < pos) return std::nullopt;
    return static_cast<std::uint64_t>(end - pos);
  }

  /// Fails early when a header-declared payload cannot fit in the file.
  void require_available(std::uint64_t bytes) {
    const auto left = remaining();
    if (left && *left < bytes) throw FormatError(what_ + ": truncated file");
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw FormatError(what_ + ": " + msg);
  }

 private:
  std::istream& in_;
  std::string what_;
};

}  // namespace subtag::io
