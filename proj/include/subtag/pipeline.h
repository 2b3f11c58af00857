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
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "subtag/ann_index.h"
#include "subtag/corpus.h"
#include "subtag/embedding.h"
#include "subtag/error.h"

namespace subtag {

enum class ScorerKind { kPassthrough, kLexical, kRemote, kOracle };

std::string_view scorer_name(ScorerKind kind) noexcept;
ScorerKind parse_scorer_kind(std::string_view name);

struct ScorerConfig {
  ScorerKind kind = ScorerKind::kLexical;
  std::string endpoint;  // remote only
  std::size_t batch_size = 64;
  double timeout_seconds = 120.0;
};

struct PipelineConfig {
  std::size_t n_candidates = 512;
  std::size_t search_k = 50000;
  ScorerConfig scorer;
  std::size_t output_k = 50;

  void check() const;
};

/// One (document, subject) pair presented to a scorer.
struct ScoringPair {
  std::string doc_id;
  std::string subject_code;
  std::string doc_text;
  std::string subject_text;
};

/// Relevance model for stage 2. Implementations return one score in [0, 1]
/// per pair, in input order.
class PairScorer {
 public:
  virtual ~PairScorer() = default;
  virtual std::vector<double> score(std::span<const ScoringPair> pairs) = 0;
};

/// Jaccard similarity of the boundary-padded lowercase 3-gram sets.
double lexical_score(std::string_view a, std::string_view b);

/// `gold` is consulted only by the oracle kind, which throws InputError
/// without it.
std::unique_ptr<PairScorer> make_scorer(const ScorerConfig& cfg,
                                        const std::vector<Document>* gold = nullptr);

/// Runs the scorer and checks the result count and the [0, 1] range; a
/// violation raises ProtocolError.
std::vector<double> score_pairs(PairScorer& scorer, std::span<const ScoringPair> pairs);

enum class Stage { kStage1, kTwoStage, kCandidates };

std::string_view stage_name(Stage stage) noexcept;
std::string_view error_kind_name(ErrorKind kind) noexcept;
ErrorKind parse_error_kind(std::string_view name);
Stage parse_stage(std::string_view name);

struct RankedEntry {
  std::string subject_code;
  double score = 0.0;

  bool operator==(const RankedEntry&) const = default;
};

struct RankedList {
  std::string doc_id;
  std::vector<RankedEntry> ranked;

  bool operator==(const RankedList&) const = default;
};

struct RunFailure {
  std::string doc_id;
  std::string message;
  ErrorKind kind = ErrorKind::kInput;

  bool operator==(const RunFailure&) const = default;
};

struct RankedRun {
  std::string run_id;
  Stage stage = Stage::kStage1;
  std::vector<RankedList> lists;
  std::vector<RunFailure> failures;

  bool operator==(const RankedRun&) const = default;
};

/// Stage 1: the n_candidates nearest subjects under cfg.search_k.
std::vector<Candidate> retrieve_candidates(const ForestSearcher& searcher,
                                           std::span<const float> doc_vec,
                                           const PipelineConfig& cfg);

/// Rendered subject texts addressable by code.
class SubjectTexts {
 public:
  explicit SubjectTexts(const std::vector<Subject>& subjects);

  /// Throws InputError for an unknown code.
  const std::string& text(std::string_view code) const;
  bool contains(std::string_view code) const;

 private:
  std::vector<std::string> codes_;  // sorted
  std::vector<std::string> texts_;  // aligned with codes_
};

/// Stage 2: scores every candidate against the document and orders by
/// (score desc, stage-1 rank asc, code asc), keeping cfg.output_k entries.
std::vector<RankedEntry> rerank(const Document& doc, std::span<const Candidate> candidates,
                                PairScorer& scorer, const PipelineConfig& cfg,
                                const SubjectTexts& subject_texts);

struct LabeledPair {
  std::string doc_id;
  std::string subject_code;
  std::string doc_text;
  std::string subject_text;
  int label = 0;  // 1 iff subject_code is gold for doc_id

  bool operator==(const LabeledPair&) const = default;
};

/// One positive per (document, gold subject), each followed by
/// `negatives_per_positive` non-gold subjects drawn uniformly without
/// replacement within the document. Documents without gold contribute
/// nothing.
std::vector<LabeledPair> generate_training_pairs(const std::vector<Document>& docs,
                                                 const std::vector<Subject>& subjects,
                                                 std::size_t negatives_per_positive,
                                                 std::uint64_t seed);

struct PipelineResult {
  RankedRun candidates;  // full stage-1 lists, up to n_candidates each
  RankedRun stage1;      // stage-1 lists truncated to output_k
  RankedRun two_stage;   // reranked lists
};

/// Runs both stages for every document in corpus order. Per-document
/// failures are recorded in the runs rather than thrown.
PipelineResult run_pipeline(const Corpus& corpus, const EmbeddingMatrix& doc_matrix,
                            const EmbeddingMatrix& subject_matrix, const RPForest& forest,
                            const PipelineConfig& cfg, PairScorer& scorer,
                            std::string_view run_prefix = "run");

/// Stage-1 only; used by the CLI retrieve step.
PipelineResult run_stage1(const Corpus& corpus, const EmbeddingMatrix& doc_matrix,
                          const EmbeddingMatrix& subject_matrix, const RPForest& forest,
                          const PipelineConfig& cfg, std::string_view run_prefix = "run");

/// Stage-2 over a candidates run produced by run_stage1.
RankedRun rerank_run(const Corpus& corpus, const RankedRun& candidates,
                     const PipelineConfig& cfg, PairScorer& scorer, std::string run_id);

// Run files: one {"doc_id":...,"ranked":[{"subject":...,"score":...}]} per
// line, plus a sidecar {"run_id":...,"stage":...,"n_docs":...,"failures":[...]}.
void write_run(std::ostream& out, const RankedRun& run);
void write_run_summary(std::ostream& out, const RankedRun& run);
std::filesystem::path summary_path(const std::filesystem::path& run_path);
void save_run(const RankedRun& run, const std::filesystem::path& path);
RankedRun load_run(const std::filesystem::path& path);

void write_pairs(std::ostream& out, const std::vector<LabeledPair>& pairs);
void save_pairs(const std::vector<LabeledPair>& pairs, const std::filesystem::path& path);

}  // namespace subtag
