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

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include <catch_amalgamated.hpp>
#include <json.hpp>

#include "stub_server.h"
#include "subtag/evaluation.h"
#include "subtag/pipeline.h"
#include "subtag/synthetic.h"
#include "test_support.h"

using namespace subtag;
using Catch::Matchers::WithinAbs;
using nlohmann::json;

namespace {

struct World {
  Corpus corpus;
  EmbeddingMatrix docs;
  EmbeddingMatrix subjects;
  RPForest forest;
};

std::vector<TextRecord> doc_records(const Corpus& c) {
  std::vector<TextRecord> out;
  for (const auto& d : c.documents) out.push_back({d.id, render_document_text(d)});
  return out;
}

std::vector<TextRecord> subject_records(const Corpus& c) {
  std::vector<TextRecord> out;
  for (const auto& s : c.subjects) out.push_back({s.code, render_subject_text(s)});
  return out;
}

World make_world(std::size_t n_subjects, std::size_t n_docs, std::uint64_t seed = 7) {
  SyntheticSpec spec;
  spec.n_subjects = n_subjects;
  spec.n_documents = n_docs;
  spec.seed = seed;
  auto corpus = make_synthetic_corpus(spec);
  EmbedderConfig emb;
  emb.dim = 64;
  const PromptConfig prompts;
  auto d = embed_corpus(emb, doc_records(corpus), Role::kDocument, prompts);
  auto s = embed_corpus(emb, subject_records(corpus), Role::kSubject, prompts);
  auto f = build_forest(s, {20, 16, 42});
  return {std::move(corpus), std::move(d), std::move(s), std::move(f)};
}

std::vector<Candidate> fake_candidates(const std::vector<std::string>& codes) {
  std::vector<Candidate> out;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    out.push_back({codes[i], 1.0f - 0.001f * static_cast<float>(i), i + 1});
  }
  return out;
}

std::vector<std::string> codes_of(const std::vector<RankedEntry>& entries) {
  std::vector<std::string> out;
  for (const auto& e : entries) out.push_back(e.subject_code);
  return out;
}

class FixedScorer : public PairScorer {
 public:
  explicit FixedScorer(std::vector<double> scores) : scores_(std::move(scores)) {}
  std::vector<double> score(std::span<const ScoringPair>) override { return scores_; }

 private:
  std::vector<double> scores_;
};

class FailingScorer : public PairScorer {
 public:
  explicit FailingScorer(std::string bad_doc) : bad_doc_(std::move(bad_doc)) {}
  std::vector<double> score(std::span<const ScoringPair> pairs) override {
    if (!pairs.empty() && pairs.front().doc_id == bad_doc_) {
      throw TransportError("scorer unavailable", 0);
    }
    return std::vector<double>(pairs.size(), 0.5);
  }

 private:
  std::string bad_doc_;
};

}  // namespace

TEST_CASE("lexical score", "[pipeline][scorer]") {
  CHECK(lexical_score("graph theory", "graph theory") == 1.0);
  CHECK(lexical_score("abc", "xyz") == 0.0);
  CHECK_THAT(lexical_score("abcd", "bcde"), WithinAbs(1.0 / 7.0, 1e-12));
  CHECK(lexical_score("Graph", "gRAPH") == 1.0);

  Rng rng(3);
  const std::string alphabet = "abcdefgh ";
  for (int i = 0; i < 100; ++i) {
    std::string a, b;
    for (std::size_t j = 0, n = 1 + rng.uniform_index(20); j < n; ++j) {
      a += alphabet[rng.uniform_index(alphabet.size())];
    }
    for (std::size_t j = 0, n = 1 + rng.uniform_index(20); j < n; ++j) {
      b += alphabet[rng.uniform_index(alphabet.size())];
    }
    const auto s = lexical_score(a, b);
    CHECK(s == lexical_score(b, a));
    CHECK(s >= 0.0);
    CHECK(s <= 1.0);
  }
}

TEST_CASE("scorer kinds", "[pipeline][scorer]") {
  CHECK(parse_scorer_kind("passthrough") == ScorerKind::kPassthrough);
  CHECK(parse_scorer_kind("lexical") == ScorerKind::kLexical);
  CHECK(parse_scorer_kind("remote") == ScorerKind::kRemote);
  CHECK(parse_scorer_kind("oracle") == ScorerKind::kOracle);
  CHECK_THROWS_AS(parse_scorer_kind("bm25"), InputError);
  for (const auto k : {ScorerKind::kPassthrough, ScorerKind::kLexical, ScorerKind::kRemote,
                       ScorerKind::kOracle}) {
    CHECK(parse_scorer_kind(scorer_name(k)) == k);
  }

  const std::vector<ScoringPair> pairs = {{"d1", "s1", "alpha", "alpha"},
                                          {"d1", "s2", "alpha", "omega"},
                                          {"d2", "s1", "beta", "alpha"}};
  auto passthrough = make_scorer({ScorerKind::kPassthrough});
  CHECK(score_pairs(*passthrough, pairs) == std::vector<double>{0.5, 0.5, 0.5});

  const std::vector<Document> gold = {{"d1", "t", "", "", {"s2"}}, {"d2", "t", "", "", {"s1"}}};
  auto oracle = make_scorer({ScorerKind::kOracle}, &gold);
  CHECK(score_pairs(*oracle, pairs) == std::vector<double>{0.0, 1.0, 1.0});
  CHECK_THROWS_AS(make_scorer({ScorerKind::kOracle}), InputError);

  ScorerConfig remote{ScorerKind::kRemote};
  CHECK_THROWS_AS(make_scorer(remote), InputError);
}

TEST_CASE("score_pairs rejects malformed scorer output", "[pipeline][scorer]") {
  const std::vector<ScoringPair> pairs = {{"d", "a", "x", "y"}, {"d", "b", "x", "z"}};
  FixedScorer too_high({0.2, 1.5});
  CHECK_THROWS_AS(score_pairs(too_high, pairs), ProtocolError);
  FixedScorer negative({-0.1, 0.3});
  CHECK_THROWS_AS(score_pairs(negative, pairs), ProtocolError);
  FixedScorer short_reply({0.2});
  CHECK_THROWS_AS(score_pairs(short_reply, pairs), ProtocolError);
  FixedScorer nan({0.2, std::nan("")});
  CHECK_THROWS_AS(score_pairs(nan, pairs), ProtocolError);
  FixedScorer ok({0.0, 1.0});
  CHECK(score_pairs(ok, pairs) == std::vector<double>{0.0, 1.0});
}

TEST_CASE("remote scorer batches requests", "[pipeline][scorer][remote]") {
  testing::StubServer server;
  std::vector<std::size_t> batch_sizes;
  server.post("/score", [&](const httplib::Request& req, httplib::Response& res) {
    const auto body = json::parse(req.body);
    json scores = json::array();
    for (const auto& p : body["pairs"]) {
      scores.push_back(lexical_score(p["left"].get<std::string>(),
                                     p["right"].get<std::string>()));
    }
    batch_sizes.push_back(body["pairs"].size());
    res.set_content(json{{"scores", scores}}.dump(), "application/json");
  });
  server.start();

  std::vector<ScoringPair> pairs;
  for (int i = 0; i < 10; ++i) {
    pairs.push_back({"d", "s" + std::to_string(i), "graph theory", "graph " + std::to_string(i)});
  }
  ScorerConfig cfg{ScorerKind::kRemote, server.url(), 4, 5.0};
  auto scorer = make_scorer(cfg);
  const auto got = score_pairs(*scorer, pairs);
  CHECK(server.requests() == 3);
  CHECK(batch_sizes == std::vector<std::size_t>{4, 4, 2});
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CHECK_THAT(got[i], WithinAbs(lexical_score(pairs[i].doc_text, pairs[i].subject_text), 1e-12));
  }
}

TEST_CASE("remote scorer failures", "[pipeline][scorer][remote]") {
  testing::StubServer server;
  server.post("/score", [](const httplib::Request& req, httplib::Response& res) {
    const auto body = json::parse(req.body);
    if (body["pairs"][0]["right"] == "boom") {
      res.status = 500;
      res.set_content(R"({"error":"model crashed"})", "application/json");
    } else if (body["pairs"][0]["right"] == "short") {
      res.set_content(R"({"scores":[]})", "application/json");
    } else {
      res.set_content("not json", "text/plain");
    }
  });
  server.start();
  auto scorer = make_scorer({ScorerKind::kRemote, server.url(), 8, 5.0});

  const std::vector<ScoringPair> boom = {{"d", "s", "x", "boom"}};
  try {
    scorer->score(boom);
    FAIL("expected TransportError");
  } catch (const TransportError& e) {
    CHECK(std::string(e.what()).find("model crashed") != std::string::npos);
  }
  const std::vector<ScoringPair> short_reply = {{"d", "s", "x", "short"}};
  CHECK_THROWS_AS(scorer->score(short_reply), ProtocolError);
  const std::vector<ScoringPair> garbage = {{"d", "s", "x", "other"}};
  CHECK_THROWS_AS(scorer->score(garbage), ProtocolError);
}

TEST_CASE("PipelineConfig validation", "[pipeline]") {
  PipelineConfig cfg;
  CHECK(cfg.n_candidates == 512);
  CHECK(cfg.search_k == 50000);
  CHECK(cfg.output_k == 50);
  CHECK_NOTHROW(cfg.check());
  cfg.output_k = 600;
  CHECK_THROWS_AS(cfg.check(), InputError);
  cfg = {};
  cfg.n_candidates = 0;
  CHECK_THROWS_AS(cfg.check(), InputError);
  cfg = {};
  cfg.search_k = 0;
  CHECK_THROWS_AS(cfg.check(), InputError);
}

TEST_CASE("stage-1 retrieval clamps to the taxonomy size", "[pipeline]") {
  const auto world = make_world(300, 5);
  const ForestSearcher searcher(world.forest, world.subjects);
  PipelineConfig cfg;
  const auto row = world.subjects.row(12);
  const auto got = retrieve_candidates(searcher, row, cfg);
  CHECK(got.size() == 300);
  CHECK(got.front().subject_code == world.subjects.ids()[12]);
  CHECK(got.front().rank == 1);
}

TEST_CASE("rerank ordering", "[pipeline][rerank]") {
  const std::vector<Subject> subjects = {{"s1", "graph theory", std::nullopt},
                                         {"s2", "medieval music", std::nullopt},
                                         {"s3", "graph colouring", std::nullopt},
                                         {"s4", "soil science", std::nullopt}};
  const SubjectTexts texts(subjects);
  const Document doc{"d1", "Graph theory", "colouring of planar graphs", "en", {"s3"}};
  const auto cands = fake_candidates({"s2", "s4", "s1", "s3"});
  PipelineConfig cfg;
  cfg.n_candidates = 4;
  cfg.output_k = 4;

  SECTION("passthrough keeps stage-1 order") {
    auto scorer = make_scorer({ScorerKind::kPassthrough});
    CHECK(codes_of(rerank(doc, cands, *scorer, cfg, texts)) ==
          std::vector<std::string>{"s2", "s4", "s1", "s3"});
  }
  SECTION("oracle lifts gold to the top") {
    const std::vector<Document> gold = {doc};
    auto scorer = make_scorer({ScorerKind::kOracle}, &gold);
    const auto got = rerank(doc, cands, *scorer, cfg, texts);
    CHECK(got.front() == RankedEntry{"s3", 1.0});
    CHECK(codes_of(got) == std::vector<std::string>{"s3", "s2", "s4", "s1"});
  }
  SECTION("output_k truncates") {
    cfg.output_k = 2;
    auto scorer = make_scorer({ScorerKind::kLexical});
    CHECK(rerank(doc, cands, *scorer, cfg, texts).size() == 2);
  }
  SECTION("empty candidates and unknown codes") {
    auto scorer = make_scorer({ScorerKind::kLexical});
    CHECK_THROWS_AS(rerank(doc, {}, *scorer, cfg, texts), InputError);
    const auto unknown = fake_candidates({"s1", "zz"});
    CHECK_THROWS_AS(rerank(doc, unknown, *scorer, cfg, texts), InputError);
  }
}

TEST_CASE("lexical rerank recovers a deeply ranked gold subject", "[pipeline][rerank]") {
  std::vector<Subject> subjects;
  std::vector<std::string> order;
  for (int i = 0; i < 60; ++i) {
    const auto code = "x" + std::to_string(i);
    subjects.push_back({code, "unrelated heading number " + std::to_string(i), std::nullopt});
    order.push_back(code);
  }
  subjects.push_back({"gold", "Quantum error correction codes", std::nullopt});
  order.insert(order.begin() + 39, "gold");
  const Document doc{"d", "Quantum error correction",
                     "Stabilizer codes for quantum error correction", "en", {"gold"}};
  const auto cands = fake_candidates(order);
  REQUIRE(cands[39].subject_code == "gold");
  PipelineConfig cfg;
  cfg.n_candidates = 61;
  cfg.output_k = 10;
  auto scorer = make_scorer({ScorerKind::kLexical});
  const auto got = codes_of(rerank(doc, cands, *scorer, cfg, SubjectTexts(subjects)));
  const auto pos = std::find(got.begin(), got.end(), "gold") - got.begin();
  CHECK(pos < 5);
}

TEST_CASE("per-document rerank failures are recorded", "[pipeline][rerank]") {
  const auto world = make_world(200, 6);
  PipelineConfig cfg;
  cfg.n_candidates = 40;
  cfg.output_k = 10;
  const auto stage1 = run_stage1(world.corpus, world.docs, world.subjects, world.forest, cfg);
  const auto& bad = world.corpus.documents[2].id;
  FailingScorer scorer(bad);
  const auto run = rerank_run(world.corpus, stage1.candidates, cfg, scorer, "partial");
  CHECK(run.lists.size() == 5);
  REQUIRE(run.failures.size() == 1);
  CHECK(run.failures[0].doc_id == bad);
  CHECK(run.failures[0].kind == ErrorKind::kTransport);
  for (const auto& list : run.lists) CHECK(list.doc_id != bad);
}

TEST_CASE("training pair generation", "[pipeline][pairs]") {
  const auto corpus = make_synthetic_corpus({.n_subjects = 80, .n_documents = 30});
  std::size_t n_gold = 0;
  for (const auto& d : corpus.documents) {
    n_gold += std::set<std::string>(d.gold_subjects.begin(), d.gold_subjects.end()).size();
  }

  for (const std::size_t neg : {1u, 3u}) {
    const auto pairs = generate_training_pairs(corpus.documents, corpus.subjects, neg, 11);
    CHECK(pairs.size() == n_gold * (1 + neg));
    std::size_t positives = 0;
    std::map<std::string, const Document*> docs;
    for (const auto& d : corpus.documents) docs[d.id] = &d;
    for (const auto& p : pairs) {
      const auto& gold = docs.at(p.doc_id)->gold_subjects;
      const bool is_gold = std::find(gold.begin(), gold.end(), p.subject_code) != gold.end();
      CHECK(p.label == (is_gold ? 1 : 0));
      positives += p.label;
      CHECK(p.doc_text == render_document_text(*docs.at(p.doc_id)));
    }
    CHECK(positives == n_gold);
    CHECK(pairs.front().label == 1);
  }

  const auto a = generate_training_pairs(corpus.documents, corpus.subjects, 2, 5);
  CHECK(a == generate_training_pairs(corpus.documents, corpus.subjects, 2, 5));
  CHECK(a != generate_training_pairs(corpus.documents, corpus.subjects, 2, 6));

  CHECK_THROWS_AS(generate_training_pairs(corpus.documents, corpus.subjects, 0, 1), InputError);
  CHECK_THROWS_AS(generate_training_pairs(corpus.documents, corpus.subjects, 1000, 1),
                  InputError);
  auto dangling = corpus.documents;
  dangling[0].gold_subjects.push_back("missing");
  CHECK_THROWS_AS(generate_training_pairs(dangling, corpus.subjects, 1, 1), InputError);

  auto no_gold = corpus.documents;
  no_gold[0].gold_subjects.clear();
  const auto fewer = generate_training_pairs(no_gold, corpus.subjects, 1, 1);
  for (const auto& p : fewer) CHECK(p.doc_id != no_gold[0].id);
}

TEST_CASE("two-stage lists permute the candidate lists", "[pipeline][property]") {
  const auto world = make_world(400, 40);
  PipelineConfig cfg;
  cfg.n_candidates = 60;
  cfg.output_k = 60;
  auto scorer = make_scorer({ScorerKind::kLexical});
  const auto result =
      run_pipeline(world.corpus, world.docs, world.subjects, world.forest, cfg, *scorer, "t");
  CHECK(result.candidates.run_id == "t.candidates");
  CHECK(result.stage1.run_id == "t.stage1");
  CHECK(result.two_stage.run_id == "t.two_stage");
  CHECK(result.two_stage.failures.empty());
  REQUIRE(result.two_stage.lists.size() == result.candidates.lists.size());
  for (std::size_t i = 0; i < result.candidates.lists.size(); ++i) {
    auto a = codes_of(result.candidates.lists[i].ranked);
    auto b = codes_of(result.two_stage.lists[i].ranked);
    CHECK(a.size() == 60);
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
  }

  // Reranking cannot beat the candidate recall ceiling.
  const std::vector<std::size_t> cutoffs = {60};
  const auto ceiling = evaluate_run(result.candidates, world.corpus.documents, cutoffs);
  const auto reranked = evaluate_run(result.two_stage, world.corpus.documents, cutoffs);
  CHECK(reranked.avg_recall.at(60) <= ceiling.avg_recall.at(60) + 1e-12);
}

TEST_CASE("stage-1 failures for missing embeddings", "[pipeline]") {
  auto world = make_world(100, 4);
  world.corpus.documents.push_back({"orphan", "Title", "", "en", {}});
  PipelineConfig cfg;
  cfg.n_candidates = 20;
  cfg.output_k = 5;
  const auto r = run_stage1(world.corpus, world.docs, world.subjects, world.forest, cfg);
  CHECK(r.stage1.lists.size() == 4);
  REQUIRE(r.stage1.failures.size() == 1);
  CHECK(r.stage1.failures[0].doc_id == "orphan");
  CHECK(r.stage1.lists[0].ranked.size() == 5);
  CHECK(r.candidates.lists[0].ranked.size() == 20);
}

TEST_CASE("run files round-trip", "[pipeline][io]") {
  RankedRun run{"demo", Stage::kTwoStage,
                {{"d1", {{"s1", 0.75}, {"s2", 0.125}}}, {"d2", {{"s9", 1.0 / 3.0}}}},
                {{"d3", "scorer unavailable", ErrorKind::kTransport}}};
  const auto path = testing::temp_path("demo.jsonl");
  save_run(run, path);
  CHECK(std::filesystem::exists(summary_path(path)));
  CHECK(load_run(path) == run);

  std::ostringstream lines;
  write_run(lines, run);
  const auto first = json::parse(lines.str().substr(0, lines.str().find('\n')));
  CHECK(first["doc_id"] == "d1");
  CHECK(first["ranked"][0]["subject"] == "s1");

  for (const auto s : {Stage::kStage1, Stage::kTwoStage, Stage::kCandidates}) {
    CHECK(parse_stage(stage_name(s)) == s);
  }
  for (const auto k : {ErrorKind::kInput, ErrorKind::kFormat, ErrorKind::kTransport,
                       ErrorKind::kProtocol, ErrorKind::kInvariant}) {
    CHECK(parse_error_kind(error_kind_name(k)) == k);
  }
  CHECK_THROWS_AS(load_run(testing::temp_path("absent.jsonl")), InputError);
}
