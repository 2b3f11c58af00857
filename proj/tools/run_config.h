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
#include <cstdint>
#include <filesystem>
#include <vector>

#include "subtag/ann_index.h"
#include "subtag/embedding.h"
#include "subtag/pipeline.h"

namespace subtag::cli {

struct Paths {
  std::filesystem::path docs = "docs.jsonl";
  std::filesystem::path subjects = "subjects.jsonl";
  std::filesystem::path doc_matrix = "docs.emb";
  std::filesystem::path subject_matrix = "subjects.emb";
  std::filesystem::path forest = "subjects.rpf";
  std::filesystem::path candidates_run = "candidates.jsonl";
  std::filesystem::path stage1_run = "stage1.jsonl";
  std::filesystem::path two_stage_run = "two_stage.jsonl";
  std::filesystem::path pairs = "pairs.jsonl";
  std::filesystem::path report = "report.txt";
};

/// Everything a command needs. Defaults are the published settings:
/// 100 trees, search_k 50000, 512 candidates.
struct RunConfig {
  Paths paths;
  EmbedderConfig embedder;
  PromptConfig prompts;
  IndexConfig index;
  PipelineConfig pipeline;
  std::vector<std::size_t> cutoffs;
  std::size_t negatives_per_positive = 1;
  std::size_t threads = 0;
  std::uint64_t seed = 7;

  RunConfig();

  /// Pushes the global seed into the seeded components.
  void apply_seed(std::uint64_t s);
};

/// Reads a JSON config file over the defaults. Relative paths in the file
/// resolve against the file's directory. Unknown keys are rejected.
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace subtag::cli
