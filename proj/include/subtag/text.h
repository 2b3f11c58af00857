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

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace subtag {

/// Strips ASCII whitespace from both ends.
std::string_view trim(std::string_view s) noexcept;

/// Decodes UTF-8 into code points. Throws InputError on ill-formed input
/// (overlong forms, surrogates, truncated sequences).
std::vector<char32_t> decode_utf8(std::string_view s);

bool is_valid_utf8(std::string_view s) noexcept;

/// Simple case folding for ASCII, Latin-1, Greek and basic Cyrillic capitals.
char32_t to_lower(char32_t c) noexcept;

/// Code point wrapped around the text before 3-gram extraction.
inline constexpr char32_t kBoundaryMarker = U'\x02';

/// Character 3-grams of the lowercased text padded with one boundary marker
/// at each end, in order of occurrence (duplicates kept). Each gram is packed
/// as three 21-bit code points.
std::vector<std::uint64_t> char_trigrams(std::string_view text);

/// Same grams, sorted and de-duplicated.
std::vector<std::uint64_t> trigram_set(std::string_view text);

}  // namespace subtag
