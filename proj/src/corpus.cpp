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

#include "subtag/corpus.h"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "subtag/error.h"
#include "subtag/text.h"

namespace subtag {

namespace {

using nlohmann::json;

std::string at_line(std::size_t line, const std::string& msg) {
  return "line " + std::to_string(line) + ": " + msg;
}

json parse_line(const std::string& line, std::size_t line_no) {
  if (!is_valid_utf8(line)) throw InputError(at_line(line_no, "invalid UTF-8"));
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw InputError(at_line(line_no, std::string("malformed JSON: ") + e.what()));
  }
  if (!obj.is_object()) throw InputError(at_line(line_no, "expected a JSON object"));
  return obj;
}

std::string required_string(const json& obj, const char* key, std::size_t line_no) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    throw InputError(at_line(line_no, std::string("missing key \"") + key + "\""));
  }
  if (!it->is_string()) {
    throw InputError(at_line(line_no, std::string("\"") + key + "\" must be a string"));
  }
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& obj, const char* key,
                                           std::size_t line_no) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw InputError(at_line(line_no, std::string("\"") + key + "\" must be a string"));
  }
  return it->get<std::string>();
}

template <typename Fn>
void for_each_record(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    fn(parse_line(line, line_no), line_no);
  }
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

}  // namespace

std::vector<Document> parse_documents(std::istream& in) {
  std::vector<Document> docs;
  std::unordered_set<std::string> seen;
  for_each_record(in, [&](const json& obj, std::size_t line_no) {
    Document d;
    d.id = required_string(obj, "id", line_no);
    if (trim(d.id).empty()) throw InputError(at_line(line_no, "empty document id"));
    d.title = required_string(obj, "title", line_no);
    d.abstract = optional_string(obj, "abstract", line_no).value_or("");
    d.language = optional_string(obj, "language", line_no).value_or("");
    if (const auto it = obj.find("gold_subjects"); it != obj.end() && !it->is_null()) {
      if (!it->is_array()) {
        throw InputError(at_line(line_no, "\"gold_subjects\" must be an array"));
      }
      for (const auto& code : *it) {
        if (!code.is_string()) {
          throw InputError(at_line(line_no, "gold subject codes must be strings"));
        }
        d.gold_subjects.push_back(code.get<std::string>());
      }
    }
    if (!seen.insert(d.id).second) {
      throw InputError(at_line(line_no, "duplicate document id \"" + d.id + "\""));
    }
    docs.push_back(std::move(d));
  });
  return docs;
}

std::vector<Document> parse_documents(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_documents(in);
}

std::vector<Subject> parse_subjects(std::istream& in) {
  std::vector<Subject> subjects;
  std::unordered_set<std::string> seen;
  for_each_record(in, [&](const json& obj, std::size_t line_no) {
    Subject s;
    s.code = required_string(obj, "code", line_no);
    if (s.code.empty()) throw InputError(at_line(line_no, "empty subject code"));
    if (s.code.find_first_of(" \t\n\r\f\v") != std::string::npos) {
      throw InputError(at_line(line_no, "subject code contains whitespace"));
    }
    s.name = required_string(obj, "name", line_no);
    if (trim(s.name).empty()) {
      throw InputError(at_line(line_no, "empty name for subject \"" + s.code + "\""));
    }
    s.definition = optional_string(obj, "definition", line_no);
    if (!seen.insert(s.code).second) {
      throw InputError(at_line(line_no, "duplicate subject code \"" + s.code + "\""));
    }
    subjects.push_back(std::move(s));
  });
  return subjects;
}

std::vector<Subject> parse_subjects(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_subjects(in);
}

std::vector<Document> load_documents(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return parse_documents(in);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::vector<Subject> load_subjects(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    return parse_subjects(in);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_documents(std::ostream& out, const std::vector<Document>& docs) {
  for (const auto& d : docs) {
    json obj = {{"id", d.id},
                {"title", d.title},
                {"abstract", d.abstract},
                {"language", d.language},
                {"gold_subjects", d.gold_subjects}};
    out << obj.dump() << '\n';
  }
}

void write_subjects(std::ostream& out, const std::vector<Subject>& subjects) {
  for (const auto& s : subjects) {
    json obj = {{"code", s.code}, {"name", s.name}};
    if (s.definition) obj["definition"] = *s.definition;
    out << obj.dump() << '\n';
  }
}

std::string render_document_text(const Document& d) {
  const auto title = trim(d.title);
  if (title.empty()) throw InputError("document \"" + d.id + "\" has an empty title");
  const auto abstract = trim(d.abstract);
  std::string out(title);
  if (!abstract.empty()) {
    out += '\n';
    out += abstract;
  }
  return out;
}

std::string render_subject_text(const Subject& s) {
  const auto name = trim(s.name);
  if (name.empty()) throw InputError("subject \"" + s.code + "\" has an empty name");
  std::string out(name);
  if (s.definition) {
    const auto def = trim(*s.definition);
    if (!def.empty()) {
      out += '\n';
      out += def;
    }
  }
  return out;
}

ValidationReport validate(const std::vector<Document>& docs,
                          const std::vector<Subject>& subjects) {
  ValidationReport report;
  report.n_documents = docs.size();
  report.n_subjects = subjects.size();

  std::unordered_set<std::string_view> codes;
  codes.reserve(subjects.size());
  for (const auto& s : subjects) {
    codes.insert(s.code);
    if (trim(s.name).empty()) report.empty_rendered_texts.push_back(s.code);
  }
  for (const auto& d : docs) {
    if (trim(d.title).empty()) report.empty_rendered_texts.push_back(d.id);
    for (const auto& code : d.gold_subjects) {
      if (!codes.contains(code)) report.unknown_gold_codes.emplace_back(d.id, code);
    }
  }
  return report;
}

}  // namespace subtag
