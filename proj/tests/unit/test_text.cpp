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

#include <catch_amalgamated.hpp>

#include "subtag/error.h"
#include "subtag/text.h"

using namespace subtag;

TEST_CASE("trim strips ASCII whitespace only at the ends", "[text]") {
  CHECK(trim("  a b \t\n") == "a b");
  CHECK(trim("   ").empty());
  CHECK(trim("") == "");
  CHECK(trim("x") == "x");
}

TEST_CASE("UTF-8 decoding rejects ill-formed input", "[text]") {
  CHECK(decode_utf8("Erdbeben") .size() == 8);
  CHECK(decode_utf8("B\xC3\xBC" "cher") == std::vector<char32_t>{U'B', U'ü', U'c', U'h', U'e', U'r'});
  CHECK_THROWS_AS(decode_utf8("\xC3"), InputError);          // truncated
  CHECK_THROWS_AS(decode_utf8("\xC0\xAF"), InputError);      // overlong
  CHECK_THROWS_AS(decode_utf8("\xED\xA0\x80"), InputError);  // surrogate
  CHECK_FALSE(is_valid_utf8("\xFF"));
  CHECK(is_valid_utf8("\xE2\x82\xAC"));
}

TEST_CASE("lowercasing covers German capitals", "[text]") {
  CHECK(to_lower(U'A') == U'a');
  CHECK(to_lower(U'Ä') == U'ä');  // Ä
  CHECK(to_lower(U'Ü') == U'ü');  // Ü
  CHECK(to_lower(U'×') == U'×');  // multiplication sign
  CHECK(to_lower(U'ß') == U'ß');  // ß has no single capital here
}

TEST_CASE("trigrams are padded with one boundary marker per side", "[text]") {
  const auto grams = char_trigrams("Abc");
  REQUIRE(grams.size() == 3);
  const auto pack = [](char32_t a, char32_t b, char32_t c) {
    return (std::uint64_t{a} << 42) | (std::uint64_t{b} << 21) | std::uint64_t{c};
  };
  CHECK(grams[0] == pack(kBoundaryMarker, U'a', U'b'));
  CHECK(grams[1] == pack(U'a', U'b', U'c'));
  CHECK(grams[2] == pack(U'b', U'c', kBoundaryMarker));

  CHECK(char_trigrams("a").size() == 1);
  CHECK(char_trigrams("").empty());
  CHECK(trigram_set("aaaa").size() == 3);  // ^aa, aaa, aa$
}
