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

#include "subtag/pipeline.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "http_client.h"
#include "subtag/error.h"
#include "subtag/random.h"
#include "subtag/text.h"

namespace subtag {

namespace {

using nlohmann::json;

std::size_t intersection_size(const std::vector<std::uint64_t>& a,
                              const std::vector<std::uint64_t>& b) {
  std::size_t n = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

double jaccard(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  const auto inter = intersection_size(a, b);
  const auto uni = a.size() + b.size() - inter;
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

class PassthroughScorer final : public PairScorer {
 public:
  std::vector<double> score(std::span<const ScoringPair> pairs) override {
    return std::vector<double>(pairs.size(), 0.5);
  }
};

class LexicalScorer final : public PairScorer {
 public:
  std::vector<double> score(std::span<const ScoringPair> pairs) override {
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) {
      if (p.doc_text != last_doc_) {
        last_doc_ = p.doc_text;
        last_doc_set_ = trigram_set(p.doc_text);
      }
      auto it = subject_sets_.find(p.subject_text);
      if (it == subject_sets_.end()) {
        it = subject_sets_.emplace(p.subject_text, trigram_set(p.subject_text)).first;
      }
      out.push_back(jaccard(last_doc_set_, it->second));
    }
    return out;
  }

 private:
  std::string last_doc_;
  std::vector<std::uint64_t> last_doc_set_;
  std::unordered_map<std::string, std::vector<std::uint64_t>> subject_sets_;
};

class OracleScorer final : public PairScorer {
 public:
  explicit OracleScorer(const std::vector<Document>& docs) {
    for (const auto& d : docs) {
      for (const auto& code : d.gold_subjects) gold_.insert(d.id + '\x1F' + code);
    }
  }

  std::vector<double> score(std::span<const ScoringPair> pairs) override {
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& p : pairs) {
      out.push_back(gold_.contains(p.doc_id + '\x1F' + p.subject_code) ? 1.0 : 0.0);
    }
    return out;
  }

 private:
  std::unordered_set<std::string> gold_;
};

class RemoteScorer final : public PairScorer {
 public:
  explicit RemoteScorer(const ScorerConfig& cfg)
      : endpoint_(http::parse_endpoint(cfg.endpoint)),
        batch_size_(cfg.batch_size),
        timeout_(cfg.timeout_seconds) {}

  std::vector<double> score(std::span<const ScoringPair> pairs) override {
    std::vector<double> out;
    out.reserve(pairs.size());
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < pairs.size(); begin += batch_size_, ++batch_index) {
      const auto end = std::min(pairs.size(), begin + batch_size_);
      json body_pairs = json::array();
      for (std::size_t i = begin; i < end; ++i) {
        body_pairs.push_back({{"left", pairs[i].doc_text}, {"right", pairs[i].subject_text}});
      }
      const auto response =
          http::post_json(endpoint_, "/score", {{"pairs", body_pairs}}, timeout_, batch_index);
      if (!response.is_object() || !response.contains("scores") ||
          !response["scores"].is_array()) {
        throw ProtocolError("score response must be {\"scores\":[...]}");
      }
      const auto& scores = response["scores"];
      if (scores.size() != end - begin) {
        throw ProtocolError("score response has " + std::to_string(scores.size()) +
                            " scores for " + std::to_string(end - begin) + " pairs");
      }
      for (const auto& s : scores) {
        if (!s.is_number()) throw ProtocolError("score response holds a non-number");
        out.push_back(s.get<double>());
      }
    }
    return out;
  }

 private:
  http::Endpoint endpoint_;
  std::size_t batch_size_;
  double timeout_;
};

json failures_json(const std::vector<RunFailure>& failures) {
  json out = json::array();
  for (const auto& f : failures) {
    out.push_back({{"doc_id", f.doc_id}, {"kind", error_kind_name(f.kind)}, {"error", f.message}});
  }
  return out;
}

std::vector<RankedEntry> to_entries(std::span<const Candidate> candidates, std::size_t limit) {
  std::vector<RankedEntry> out;
  const auto n = std::min(limit, candidates.size());
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({candidates[i].subject_code, static_cast<double>(candidates[i].score)});
  }
  return out;
}

}  // namespace

std::string_view scorer_name(ScorerKind kind) noexcept {
  switch (kind) {
    case ScorerKind::kPassthrough:
      return "passthrough";
    case ScorerKind::kLexical:
      return "lexical";
    case ScorerKind::kRemote:
      return "remote";
    case ScorerKind::kOracle:
      return "oracle";
  }
  return "";
}

ScorerKind parse_scorer_kind(std::string_view name) {
  for (const auto kind : {ScorerKind::kPassthrough, ScorerKind::kLexical, ScorerKind::kRemote,
                          ScorerKind::kOracle}) {
    if (scorer_name(kind) == name) return kind;
  }
  throw InputError("unknown scorer \"" + std::string(name) + "\"");
}

void PipelineConfig::check() const {
  if (n_candidates < 1) throw InputError("n_candidates must be positive");
  if (search_k < 1) throw InputError("search_k must be positive");
  if (output_k < 1) throw InputError("output_k must be positive");
  if (output_k > n_candidates) {
    throw InputError("output_k (" + std::to_string(output_k) + ") exceeds n_candidates (" +
                     std::to_string(n_candidates) + ")");
  }
  if (scorer.batch_size < 1) throw InputError("scorer batch_size must be positive");
  if (scorer.kind == ScorerKind::kRemote && scorer.endpoint.empty()) {
    throw InputError("remote scorer requires an endpoint");
  }
}

double lexical_score(std::string_view a, std::string_view b) {
  return jaccard(trigram_set(a), trigram_set(b));
}

std::unique_ptr<PairScorer> make_scorer(const ScorerConfig& cfg,
                                        const std::vector<Document>* gold) {
  switch (cfg.kind) {
    case ScorerKind::kPassthrough:
      return std::make_unique<PassthroughScorer>();
    case ScorerKind::kLexical:
      return std::make_unique<LexicalScorer>();
    case ScorerKind::kRemote:
      if (cfg.batch_size < 1) throw InputError("scorer batch_size must be positive");
      return std::make_unique<RemoteScorer>(cfg);
    case ScorerKind::kOracle:
      if (gold == nullptr) throw InputError("the oracle scorer needs gold labels");
      return std::make_unique<OracleScorer>(*gold);
  }
  throw InputError("unknown scorer kind");
}

std::vector<double> score_pairs(PairScorer& scorer, std::span<const ScoringPair> pairs) {
  for (const auto& p : pairs) {
    if (trim(p.doc_text).empty() || trim(p.subject_text).empty()) {
      throw InputError("cannot score a pair with an empty text (" + p.doc_id + ", " +
                       p.subject_code + ")");
    }
  }
  auto scores = scorer.score(pairs);
  if (scores.size() != pairs.size()) {
    throw ProtocolError("scorer returned " + std::to_string(scores.size()) + " scores for " +
                        std::to_string(pairs.size()) + " pairs");
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!(scores[i] >= 0.0 && scores[i] <= 1.0)) {
      throw ProtocolError("score " + std::to_string(scores[i]) + " for pair (" +
                          pairs[i].doc_id + ", " + pairs[i].subject_code +
                          ") is outside [0, 1]");
    }
  }
  return scores;
}

std::string_view stage_name(Stage stage) noexcept {
  switch (stage) {
    case Stage::kStage1:
      return "stage1";
    case Stage::kTwoStage:
      return "two_stage";
    case Stage::kCandidates:
      return "candidates";
  }
  return "";
}

std::string_view error_kind_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kInput:
      return "input";
    case ErrorKind::kFormat:
      return "format";
    case ErrorKind::kTransport:
      return "transport";
    case ErrorKind::kProtocol:
      return "protocol";
    case ErrorKind::kInvariant:
      return "invariant";
  }
  return "";
}

ErrorKind parse_error_kind(std::string_view name) {
  for (const auto k : {ErrorKind::kInput, ErrorKind::kFormat, ErrorKind::kTransport,
                       ErrorKind::kProtocol, ErrorKind::kInvariant}) {
    if (error_kind_name(k) == name) return k;
  }
  throw InputError("unknown error kind \"" + std::string(name) + "\"");
}

Stage parse_stage(std::string_view name) {
  for (const auto s : {Stage::kStage1, Stage::kTwoStage, Stage::kCandidates}) {
    if (stage_name(s) == name) return s;
  }
  throw InputError("unknown stage \"" + std::string(name) + "\"");
}

std::vector<Candidate> retrieve_candidates(const ForestSearcher& searcher,
                                           std::span<const float> doc_vec,
                                           const PipelineConfig& cfg) {
  return searcher.query(doc_vec, cfg.n_candidates, cfg.search_k);
}

SubjectTexts::SubjectTexts(const std::vector<Subject>& subjects) {
  std::vector<std::size_t> order(subjects.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return subjects[a].code < subjects[b].code; });
  codes_.reserve(subjects.size());
  texts_.reserve(subjects.size());
  for (const auto i : order) {
    codes_.push_back(subjects[i].code);
    texts_.push_back(render_subject_text(subjects[i]));
  }
}

bool SubjectTexts::contains(std::string_view code) const {
  return std::binary_search(codes_.begin(), codes_.end(), code);
}

const std::string& SubjectTexts::text(std::string_view code) const {
  const auto it = std::lower_bound(codes_.begin(), codes_.end(), code);
  if (it == codes_.end() || *it != code) {
    throw InputError("unknown subject code \"" + std::string(code) + "\"");
  }
  return texts_[static_cast<std::size_t>(it - codes_.begin())];
}

std::vector<RankedEntry> rerank(const Document& doc, std::span<const Candidate> candidates,
                                PairScorer& scorer, const PipelineConfig& cfg,
                                const SubjectTexts& subject_texts) {
  if (candidates.empty()) {
    throw InputError("no stage-1 candidates for document \"" + doc.id + "\"");
  }
  const auto doc_text = render_document_text(doc);
  std::vector<ScoringPair> pairs;
  pairs.reserve(candidates.size());
  for (const auto& c : candidates) {
    pairs.push_back({doc.id, c.subject_code, doc_text, subject_texts.text(c.subject_code)});
  }
  const auto scores = score_pairs(scorer, pairs);

  // Candidates arrive in stage-1 order, so the position is the stage-1 rank.
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    if (candidates[a].rank != candidates[b].rank) return candidates[a].rank < candidates[b].rank;
    return candidates[a].subject_code < candidates[b].subject_code;
  });
  const auto n = std::min(cfg.output_k, order.size());
  std::vector<RankedEntry> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({candidates[order[i]].subject_code, scores[order[i]]});
  }
  return out;
}

std::vector<LabeledPair> generate_training_pairs(const std::vector<Document>& docs,
                                                 const std::vector<Subject>& subjects,
                                                 std::size_t negatives_per_positive,
                                                 std::uint64_t seed) {
  if (negatives_per_positive < 1) throw InputError("negatives_per_positive must be positive");
  std::unordered_map<std::string_view, std::size_t> by_code;
  std::vector<std::string> subject_texts;
  subject_texts.reserve(subjects.size());
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    by_code.emplace(subjects[i].code, i);
    subject_texts.push_back(render_subject_text(subjects[i]));
  }

  std::vector<LabeledPair> pairs;
  std::vector<char> is_gold(subjects.size());
  std::vector<std::size_t> pool;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const auto& doc = docs[d];
    std::vector<std::size_t> gold;
    std::fill(is_gold.begin(), is_gold.end(), 0);
    for (const auto& code : doc.gold_subjects) {
      const auto it = by_code.find(code);
      if (it == by_code.end()) {
        throw InputError("document \"" + doc.id + "\" references unknown subject \"" + code +
                         "\"");
      }
      if (!is_gold[it->second]) {
        is_gold[it->second] = 1;
        gold.push_back(it->second);
      }
    }
    if (gold.empty()) continue;

    const auto wanted = gold.size() * negatives_per_positive;
    const auto available = subjects.size() - gold.size();
    if (wanted > available) {
      throw InputError("document \"" + doc.id + "\" needs " + std::to_string(wanted) +
                       " negatives but only " + std::to_string(available) +
                       " non-gold subjects exist");
    }
    pool.clear();
    for (std::size_t s = 0; s < subjects.size(); ++s) {
      if (!is_gold[s]) pool.push_back(s);
    }
    // Partial Fisher-Yates: the first `wanted` slots become the sample.
    Rng rng(derive_seed(seed, d));
    for (std::size_t i = 0; i < wanted; ++i) {
      const auto j = i + rng.uniform_index(pool.size() - i);
      std::swap(pool[i], pool[j]);
    }

    const auto doc_text = render_document_text(doc);
    std::size_t next_negative = 0;
    for (const auto g : gold) {
      pairs.push_back({doc.id, subjects[g].code, doc_text, subject_texts[g], 1});
      for (std::size_t n = 0; n < negatives_per_positive; ++n) {
        const auto s = pool[next_negative++];
        pairs.push_back({doc.id, subjects[s].code, doc_text, subject_texts[s], 0});
      }
    }
  }
  return pairs;
}

PipelineResult run_stage1(const Corpus& corpus, const EmbeddingMatrix& doc_matrix,
                          const EmbeddingMatrix& subject_matrix, const RPForest& forest,
                          const PipelineConfig& cfg, std::string_view run_prefix) {
  cfg.check();
  const ForestSearcher searcher(forest, subject_matrix);
  const SubjectTexts texts(corpus.subjects);
  for (const auto& code : subject_matrix.ids()) {
    if (!texts.contains(code)) {
      throw InputError("subject matrix id \"" + code + "\" is not in the taxonomy");
    }
  }

  PipelineResult result;
  result.candidates = {std::string(run_prefix) + ".candidates", Stage::kCandidates, {}, {}};
  result.stage1 = {std::string(run_prefix) + ".stage1", Stage::kStage1, {}, {}};
  for (const auto& doc : corpus.documents) {
    try {
      const auto row = doc_matrix.find(doc.id);
      if (!row) throw InputError("document \"" + doc.id + "\" has no embedding");
      const auto cands = retrieve_candidates(searcher, doc_matrix.row(*row), cfg);
      result.candidates.lists.push_back({doc.id, to_entries(cands, cfg.n_candidates)});
      result.stage1.lists.push_back({doc.id, to_entries(cands, cfg.output_k)});
    } catch (const Error& e) {
      result.candidates.failures.push_back({doc.id, e.what(), e.kind()});
      result.stage1.failures.push_back({doc.id, e.what(), e.kind()});
    }
  }
  return result;
}

RankedRun rerank_run(const Corpus& corpus, const RankedRun& candidates,
                     const PipelineConfig& cfg, PairScorer& scorer, std::string run_id) {
  cfg.check();
  const SubjectTexts texts(corpus.subjects);
  std::unordered_map<std::string_view, const Document*> docs;
  for (const auto& d : corpus.documents) docs.emplace(d.id, &d);

  RankedRun out{std::move(run_id), Stage::kTwoStage, {}, candidates.failures};
  for (const auto& list : candidates.lists) {
    try {
      const auto it = docs.find(list.doc_id);
      if (it == docs.end()) {
        throw InputError("candidate list for unknown document \"" + list.doc_id + "\"");
      }
      std::vector<Candidate> cands;
      cands.reserve(list.ranked.size());
      for (std::size_t i = 0; i < list.ranked.size(); ++i) {
        cands.push_back({list.ranked[i].subject_code,
                         static_cast<float>(list.ranked[i].score), i + 1});
      }
      out.lists.push_back({list.doc_id, rerank(*it->second, cands, scorer, cfg, texts)});
    } catch (const Error& e) {
      out.failures.push_back({list.doc_id, e.what(), e.kind()});
    }
  }
  return out;
}

PipelineResult run_pipeline(const Corpus& corpus, const EmbeddingMatrix& doc_matrix,
                            const EmbeddingMatrix& subject_matrix, const RPForest& forest,
                            const PipelineConfig& cfg, PairScorer& scorer,
                            std::string_view run_prefix) {
  auto result = run_stage1(corpus, doc_matrix, subject_matrix, forest, cfg, run_prefix);
  result.two_stage =
      rerank_run(corpus, result.candidates, cfg, scorer, std::string(run_prefix) + ".two_stage");
  return result;
}

void write_run(std::ostream& out, const RankedRun& run) {
  for (const auto& list : run.lists) {
    json ranked = json::array();
    for (const auto& e : list.ranked) {
      ranked.push_back({{"subject", e.subject_code}, {"score", e.score}});
    }
    out << json{{"doc_id", list.doc_id}, {"ranked", std::move(ranked)}}.dump() << '\n';
  }
}

void write_run_summary(std::ostream& out, const RankedRun& run) {
  const json summary = {{"run_id", run.run_id},
                        {"stage", stage_name(run.stage)},
                        {"n_docs", run.lists.size()},
                        {"failures", failures_json(run.failures)}};
  out << summary.dump(2) << '\n';
}

std::filesystem::path summary_path(const std::filesystem::path& run_path) {
  auto p = run_path;
  p += ".summary.json";
  return p;
}

void save_run(const RankedRun& run, const std::filesystem::path& path) {
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    write_run(out, run);
    if (!out) throw InputError("failed writing " + path.string());
  }
  const auto sidecar = summary_path(path);
  std::ofstream out(sidecar, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + sidecar.string());
  write_run_summary(out, run);
  if (!out) throw InputError("failed writing " + sidecar.string());
}

RankedRun load_run(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  RankedRun run;
  run.run_id = path.stem().string();
  std::string line;
  std::size_t line_no = 0;
  std::unordered_set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto where = path.string() + " line " + std::to_string(line_no);
    const auto obj = json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object() || !obj.contains("doc_id") ||
        !obj["doc_id"].is_string() || !obj.contains("ranked") || !obj["ranked"].is_array()) {
      throw InputError(where + ": expected {\"doc_id\":...,\"ranked\":[...]}");
    }
    RankedList list{obj["doc_id"].get<std::string>(), {}};
    if (!seen.insert(list.doc_id).second) {
      throw InputError(where + ": duplicate doc_id \"" + list.doc_id + "\"");
    }
    for (const auto& e : obj["ranked"]) {
      if (!e.is_object() || !e.contains("subject") || !e["subject"].is_string() ||
          !e.contains("score") || !e["score"].is_number()) {
        throw InputError(where + ": ranked entries need \"subject\" and \"score\"");
      }
      list.ranked.push_back({e["subject"].get<std::string>(), e["score"].get<double>()});
    }
    run.lists.push_back(std::move(list));
  }

  std::ifstream side(summary_path(path));
  if (side) {
    const auto summary = json::parse(side, nullptr, false);
    if (summary.is_discarded() || !summary.is_object()) {
      throw InputError(summary_path(path).string() + ": malformed run summary");
    }
    if (summary.contains("run_id") && summary["run_id"].is_string()) {
      run.run_id = summary["run_id"].get<std::string>();
    }
    if (summary.contains("stage") && summary["stage"].is_string()) {
      run.stage = parse_stage(summary["stage"].get<std::string>());
    }
    if (summary.contains("failures") && summary["failures"].is_array()) {
      for (const auto& f : summary["failures"]) {
        run.failures.push_back({f.value("doc_id", ""), f.value("error", ""),
                                parse_error_kind(f.value("kind", "input"))});
      }
    }
  }
  return run;
}

void write_pairs(std::ostream& out, const std::vector<LabeledPair>& pairs) {
  for (const auto& p : pairs) {
    const json obj = {{"doc_id", p.doc_id},
                      {"subject_code", p.subject_code},
                      {"doc_text", p.doc_text},
                      {"subject_text", p.subject_text},
                      {"label", p.label}};
    out << obj.dump() << '\n';
  }
}

void save_pairs(const std::vector<LabeledPair>& pairs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  write_pairs(out, pairs);
  if (!out) throw InputError("failed writing " + path.string());
}

}  // namespace subtag
