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

// Writes a deterministic synthetic corpus (docs.jsonl, subjects.jsonl).

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "subtag/corpus.h"
#include "subtag/synthetic.h"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic subject-tagging corpus"};
  subtag::SyntheticSpec spec;
  std::string out_dir = ".";
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--n-subjects", spec.n_subjects);
  app.add_option("--n-docs", spec.n_documents);
  app.add_option("--vocabulary", spec.vocabulary);
  app.add_option("--topical-fraction", spec.topical_fraction);
  app.add_option("--seed", spec.seed);
  CLI11_PARSE(app, argc, argv);

  try {
    const auto corpus = subtag::make_synthetic_corpus(spec);
    std::filesystem::create_directories(out_dir);
    std::ofstream docs(std::filesystem::path(out_dir) / "docs.jsonl", std::ios::binary);
    subtag::write_documents(docs, corpus.documents);
    std::ofstream subjects(std::filesystem::path(out_dir) / "subjects.jsonl", std::ios::binary);
    subtag::write_subjects(subjects, corpus.subjects);
    std::cout << "wrote " << corpus.documents.size() << " documents and "
              << corpus.subjects.size() << " subjects to " << out_dir << '\n';
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
