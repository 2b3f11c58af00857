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

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace subtag {

/// A record to be tagged.
struct Document {
  std::string id;
  std::string title;
  std::string abstract;
  std::string language;  // informational only
  std::vector<std::string> gold_subjects;

  bool operator==(const Document&) const = default;
};

/// One entry of the subject taxonomy.
struct Subject {
  std::string code;
  std::string name;
  std::optional<std::string> definition;

  bool operator==(const Subject&) const = default;
};

struct ValidationReport {
  std::size_t n_documents = 0;
  std::size_t n_subjects = 0;
  std::vector<std::pair<std::string, std::string>> unknown_gold_codes;  // (doc id, code)
  std::vector<std::string> empty_rendered_texts;

  bool valid() const noexcept {
    return unknown_gold_codes.empty() && empty_rendered_texts.empty();
  }

  bool operator==(const ValidationReport&) const = default;
};

struct Corpus {
  std::vector<Document> documents;
  std::vector<Subject> subjects;
};

// Line-delimited JSON readers. Blank lines are skipped; errors carry the
// 1-based line number.
std::vector<Document> parse_documents(std::istream& in);
std::vector<Document> parse_documents(std::string_view text);
std::vector<Subject> parse_subjects(std::istream& in);
std::vector<Subject> parse_subjects(std::string_view text);

std::vector<Document> load_documents(const std::filesystem::path& path);
std::vector<Subject> load_subjects(const std::filesystem::path& path);

void write_documents(std::ostream& out, const std::vector<Document>& docs);
void write_subjects(std::ostream& out, const std::vector<Subject>& subjects);

/// Trimmed title, a newline, then the trimmed abstract. The newline is
/// omitted when the abstract is empty. Throws InputError on an empty title.
std::string render_document_text(const Document& d);

/// Trimmed name, a newline, then the trimmed definition when one is present
/// and non-empty. Throws InputError on an empty name.
std::string render_subject_text(const Subject& s);

ValidationReport validate(const std::vector<Document>& docs,
                          const std::vector<Subject>& subjects);

}  // namespace subtag
