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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "subtag/corpus.h"
#include "subtag/pipeline.h"

namespace subtag {

/// k = 5, 10, ..., 50.
std::vector<std::size_t> default_cutoffs();

/// |top-k(ranked) ∩ gold| / |gold|. Throws InputError for k = 0 or empty gold.
double recall_at_k(std::span<const std::string> ranked, std::span<const std::string> gold,
                   std::size_t k);

struct EvalReport {
  std::string run_id;
  std::vector<std::size_t> cutoffs;
  std::map<std::size_t, double> avg_recall;
  std::size_t n_docs_evaluated = 0;
  std::size_t n_docs_skipped = 0;  // documents without gold subjects

  bool operator==(const EvalReport&) const = default;
};

/// Macro-averaged recall per cutoff over documents with gold subjects. Documents
/// listed as failures in the run count with zero recall.
EvalReport evaluate_run(const RankedRun& run, const std::vector<Document>& docs,
                        std::span<const std::size_t> cutoffs);

struct ComparisonRow {
  std::size_t k = 0;
  double a = 0.0;
  double b = 0.0;
  double abs_delta = 0.0;             // b - a
  std::optional<double> rel_delta;    // (b - a) / a; absent when a == 0
};

struct Comparison {
  std::string a_run_id;
  std::string b_run_id;
  std::vector<ComparisonRow> rows;
};

Comparison compare_runs(const EvalReport& a, const EvalReport& b);

std::string report_text(const EvalReport& report);
std::string report_json(const EvalReport& report);
std::string comparison_text(const Comparison& c);
std::string comparison_json(const Comparison& c);

}  // namespace subtag
