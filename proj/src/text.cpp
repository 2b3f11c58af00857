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

#include "subtag/text.h"

#include <algorithm>

#include "subtag/error.h"

namespace subtag {

namespace {

constexpr std::string_view kWhitespace = " \t\n\r\f\v";

// Returns the number of bytes consumed, or 0 when the sequence at `pos` is
// ill-formed.
std::size_t decode_one(std::string_view s, std::size_t pos, char32_t& out) noexcept {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  if (b0 < 0x80) {
    out = b0;
    return 1;
  }
  std::size_t len = 0;
  char32_t cp = 0;
  char32_t min = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
    min = 0x80;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
    min = 0x800;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
    min = 0x10000;
  } else {
    return 0;
  }
  if (pos + len > s.size()) return 0;
  for (std::size_t i = 1; i < len; ++i) {
    const auto b = static_cast<unsigned char>(s[pos + i]);
    if ((b & 0xC0) != 0x80) return 0;
    cp = (cp << 6) | (b & 0x3F);
  }
  if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return 0;
  out = cp;
  return len;
}

}  // namespace

std::string_view trim(std::string_view s) noexcept {
  const auto first = s.find_first_not_of(kWhitespace);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(kWhitespace);
  return s.substr(first, last - first + 1);
}

std::vector<char32_t> decode_utf8(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  std::size_t pos = 0;
  while (pos < s.size()) {
    char32_t cp = 0;
    const auto n = decode_one(s, pos, cp);
    if (n == 0) {
      throw InputError("invalid UTF-8 at byte offset " + std::to_string(pos));
    }
    out.push_back(cp);
    pos += n;
  }
  return out;
}

bool is_valid_utf8(std::string_view s) noexcept {
  std::size_t pos = 0;
  while (pos < s.size()) {
    char32_t cp = 0;
    const auto n = decode_one(s, pos, cp);
    if (n == 0) return false;
    pos += n;
  }
  return true;
}

char32_t to_lower(char32_t c) noexcept {
  if (c >= U'A' && c <= U'Z') return c + 0x20;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 0x20;
  if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return c + 0x20;
  if (c >= 0x410 && c <= 0x42F) return c + 0x20;
  if (c >= 0x400 && c <= 0x40F) return c + 0x50;
  return c;
}

std::vector<std::uint64_t> char_trigrams(std::string_view text) {
  const auto cps = decode_utf8(text);
  std::vector<char32_t> padded;
  padded.reserve(cps.size() + 2);
  padded.push_back(kBoundaryMarker);
  for (const char32_t c : cps) padded.push_back(to_lower(c));
  padded.push_back(kBoundaryMarker);

  std::vector<std::uint64_t> grams;
  if (padded.size() < 3) return grams;
  grams.reserve(padded.size() - 2);
  for (std::size_t i = 0; i + 2 < padded.size(); ++i) {
    grams.push_back((std::uint64_t{padded[i]} << 42) |
                    (std::uint64_t{padded[i + 1]} << 21) |
                    std::uint64_t{padded[i + 2]});
  }
  return grams;
}

std::vector<std::uint64_t> trigram_set(std::string_view text) {
  auto grams = char_trigrams(text);
  std::sort(grams.begin(), grams.end());
  grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
  return grams;
}

}  // namespace subtag
