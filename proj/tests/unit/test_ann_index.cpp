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
#include <numeric>
#include <set>
#include <sstream>

#include <catch_amalgamated.hpp>

#include "subtag/ann_index.h"
#include "subtag/error.h"
#include "test_support.h"

using namespace subtag;
using Catch::Matchers::WithinAbs;
using testing::random_matrix;
using testing::random_unit_vector;

namespace {

// Test-only brute force: full sort by (score desc, id asc).
std::vector<std::string> brute_force_ids(const EmbeddingMatrix& m, std::span<const float> q,
                                         std::size_t k) {
  std::vector<std::pair<float, std::string>> scored;
  for (std::size_t i = 0; i < m.size(); ++i) {
    double s = 0.0;
    for (std::size_t d = 0; d < m.dim(); ++d) s += static_cast<double>(m.row(i)[d]) * q[d];
    scored.emplace_back(static_cast<float>(s), m.ids()[i]);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(k, scored.size()); ++i) out.push_back(scored[i].second);
  return out;
}

std::vector<std::string> ids_of(const std::vector<Candidate>& cands) {
  std::vector<std::string> out;
  for (const auto& c : cands) out.push_back(c.subject_code);
  return out;
}

std::size_t overlap(const std::vector<Candidate>& a, const std::vector<Candidate>& b) {
  std::set<std::string> sa;
  for (const auto& c : a) sa.insert(c.subject_code);
  std::size_t n = 0;
  for (const auto& c : b) n += sa.count(c.subject_code);
  return n;
}

// Every tree's leaves are disjoint and cover all items.
void check_partition(const RPForest& f) {
  for (std::size_t t = 0; t < f.trees().size(); ++t) {
    std::vector<int> seen(f.size(), 0);
    const auto& nodes = f.trees()[t].nodes;
    for (std::size_t n = 0; n < nodes.size(); ++n) {
      if (!nodes[n].is_leaf()) {
        const auto hp = f.hyperplane(t, n);
        double sq = 0.0;
        for (const float x : hp.normal) sq += static_cast<double>(x) * x;
        CHECK(sq > 0.0);
        continue;
      }
      const auto items = f.leaf_items(t, n);
      if (nodes[n].kind == RPForest::NodeKind::kLeaf) {
        CHECK(items.size() <= f.config().leaf_size);
      }
      for (const auto item : items) ++seen[item];
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
  }
}

std::string serialized(const RPForest& f) {
  std::ostringstream out;
  write_forest(out, f);
  return out.str();
}

}  // namespace

TEST_CASE("IndexConfig validation", "[ann]") {
  IndexConfig cfg;
  CHECK(cfg.n_trees == 100);
  CHECK(cfg.leaf_size == 16);
  CHECK_NOTHROW(cfg.check());
  cfg.n_trees = 0;
  CHECK_THROWS_AS(cfg.check(), InputError);
  cfg.n_trees = 1;
  cfg.leaf_size = 1;
  CHECK_THROWS_AS(cfg.check(), InputError);
}

TEST_CASE("small inputs become a single leaf per tree", "[ann]") {
  const auto m = random_matrix(10, 16, 1);
  const auto f = build_forest(m, {3, 16, 9});
  REQUIRE(f.trees().size() == 3);
  for (const auto& tree : f.trees()) {
    REQUIRE(tree.nodes.size() == 1);
    CHECK(tree.nodes[0].kind == RPForest::NodeKind::kLeaf);
    CHECK(tree.nodes[0].count == 10);
  }
}

TEST_CASE("leaves partition the items in every tree", "[ann]") {
  const auto m = random_matrix(1000, 32, 2);
  const auto f = build_forest(m, {8, 16, 3});
  check_partition(f);
  CHECK(f.trees()[0].nodes.size() > 1);
}

TEST_CASE("build output does not depend on thread count", "[ann]") {
  const auto m = random_matrix(800, 24, 3);
  const IndexConfig cfg{12, 8, 77};
  const auto serial = build_forest(m, cfg, 1);
  const auto parallel = build_forest(m, cfg, 4);
  CHECK(serialized(serial) == serialized(parallel));
  CHECK(serial == parallel);
  CHECK(serialized(build_forest(m, {12, 8, 78}, 1)) != serialized(serial));
}

TEST_CASE("duplicate-heavy corpora fall back to degenerate leaves", "[ann]") {
  std::vector<std::string> ids;
  std::vector<float> values;
  for (int i = 0; i < 60; ++i) {
    ids.push_back("dup" + std::to_string(i));
    values.insert(values.end(), {1.0f, 0.0f, 0.0f, 0.0f, 0.0f, 0.0f, 0.0f, 0.0f});
  }
  for (int i = 0; i < 5; ++i) {
    ids.push_back("odd" + std::to_string(i));
    std::vector<float> v(8, 0.0f);
    v[1 + i % 7] = 1.0f;
    values.insert(values.end(), v.begin(), v.end());
  }
  const EmbeddingMatrix m(ids, 8, values);
  const auto f = build_forest(m, {5, 4, 1});
  check_partition(f);
  bool degenerate = false;
  for (const auto& tree : f.trees()) {
    for (const auto& n : tree.nodes) degenerate |= n.kind == RPForest::NodeKind::kDegenerateLeaf;
  }
  CHECK(degenerate);

  const std::vector<float> q = {1, 0, 0, 0, 0, 0, 0, 0};
  const auto got = query(f, m, q, 3, 1'000'000);
  CHECK(ids_of(got) == std::vector<std::string>{"dup0", "dup1", "dup10"});  // ties by id
}

TEST_CASE("exact_topk orders by score then id and clamps k", "[ann]") {
  const EmbeddingMatrix basis({"b", "a", "c"}, 3, {0, 1, 0, 1, 0, 0, 0, 0, 1});
  const std::vector<float> q = {1, 0, 0};
  const auto got = exact_topk(basis, q, 10);
  REQUIRE(got.size() == 3);
  CHECK(got[0] == Candidate{"a", 1.0f, 1});
  CHECK(got[1] == Candidate{"b", 0.0f, 2});
  CHECK(got[2] == Candidate{"c", 0.0f, 3});

  CHECK_THROWS_AS(exact_topk(basis, std::vector<float>{1, 0}, 1), InputError);
  CHECK_THROWS_AS(exact_topk(basis, q, 0), InputError);
}

TEST_CASE("exact_topk agrees with an independent brute force", "[ann][property]") {
  Rng rng(5);
  const auto m = random_matrix(500, 16, 6);
  for (int i = 0; i < 50; ++i) {
    const auto q = random_unit_vector(rng, 16);
    const auto k = 1 + rng.uniform_index(40);
    CHECK(ids_of(exact_topk(m, q, k)) == brute_force_ids(m, q, k));
  }
}

TEST_CASE("exhaustive search_k reproduces the exact scan", "[ann][property]") {
  Rng rng(8);
  const auto m = random_matrix(400, 16, 9);
  const IndexConfig cfg{6, 8, 10};
  const auto f = build_forest(m, cfg);
  const ForestSearcher searcher(f, m);
  const std::size_t exhaustive = m.size() * cfg.n_trees;
  for (int i = 0; i < 200; ++i) {
    const auto q = random_unit_vector(rng, 16);
    const auto k = 1 + rng.uniform_index(60);
    REQUIRE(searcher.query(q, k, exhaustive) == exact_topk(m, q, k));
  }
}

TEST_CASE("indexed rows retrieve themselves", "[ann]") {
  const auto m = random_matrix(300, 32, 11);
  const auto f = build_forest(m, {10, 16, 12});
  for (const std::size_t row : {0u, 17u, 299u}) {
    const auto got = query(f, m, m.row(row), 1, m.size() * 10);
    REQUIRE(got.size() == 1);
    CHECK(got[0].subject_code == m.ids()[row]);
    CHECK_THAT(got[0].score, WithinAbs(1.0, 1e-5));
    CHECK(got[0].rank == 1);
  }
}

TEST_CASE("results are ordered with contiguous ranks", "[ann][property]") {
  Rng rng(13);
  const auto m = random_matrix(600, 16, 14);
  const auto f = build_forest(m, {10, 16, 15});
  const ForestSearcher searcher(f, m);
  for (int i = 0; i < 50; ++i) {
    const auto q = random_unit_vector(rng, 16);
    const auto got = searcher.query(q, 25, 1 + rng.uniform_index(3000));
    for (std::size_t r = 0; r < got.size(); ++r) {
      CHECK(got[r].rank == r + 1);
      if (r > 0) {
        const bool ordered = got[r - 1].score > got[r].score ||
                             (got[r - 1].score == got[r].score &&
                              got[r - 1].subject_code < got[r].subject_code);
        CHECK(ordered);
      }
    }
  }
}

TEST_CASE("oracle overlap never drops as search_k grows", "[ann][property]") {
  Rng rng(16);
  const auto m = random_matrix(2000, 32, 17);
  const auto f = build_forest(m, {20, 16, 18});
  const ForestSearcher searcher(f, m);
  for (int i = 0; i < 20; ++i) {
    const auto q = random_unit_vector(rng, 32);
    const auto exact = exact_topk(m, q, 10);
    std::size_t previous = 0;
    for (const std::size_t sk : {10u, 100u, 1000u, 5000u, 20000u, 40000u}) {
      const auto got = overlap(searcher.query(q, 10, sk), exact);
      CHECK(got >= previous);
      previous = got;
    }
    CHECK(previous == 10);
  }
}

TEST_CASE("the candidate pool respects the search budget", "[ann]") {
  Rng rng(19);
  const auto m = random_matrix(1000, 16, 20);
  const IndexConfig cfg{10, 16, 21};
  const auto f = build_forest(m, cfg);
  const ForestSearcher searcher(f, m);
  const auto q = random_unit_vector(rng, 16);
  for (const std::size_t sk : {1u, 5u, 40u, 500u}) {
    const auto pool = searcher.candidate_pool(q, sk);
    CHECK(!pool.empty());
    CHECK(pool.size() < sk + cfg.leaf_size);
    std::set<std::uint32_t> unique(pool.begin(), pool.end());
    CHECK(unique.size() == pool.size());
  }
  CHECK(searcher.candidate_pool(q, m.size() * cfg.n_trees).size() == m.size());
}

TEST_CASE("query argument and compatibility errors", "[ann]") {
  const auto m = random_matrix(100, 8, 22);
  const auto f = build_forest(m, {4, 8, 23});
  const std::vector<float> q(m.row(0).begin(), m.row(0).end());
  CHECK_THROWS_AS(query(f, m, q, 0, 10), InputError);
  CHECK_THROWS_AS(query(f, m, q, 1, 0), InputError);
  CHECK_THROWS_AS(query(f, m, std::vector<float>(7, 0.1f), 1, 10), InputError);

  const auto other = random_matrix(99, 8, 22);
  try {
    ForestSearcher s(f, other);
    FAIL("expected a mismatch error");
  } catch (const InputError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("100") != std::string::npos);
    CHECK(msg.find("99") != std::string::npos);
  }
  CHECK_THROWS_AS(ForestSearcher(f, random_matrix(100, 8, 99)), InputError);
  CHECK_THROWS_AS(build_forest(EmbeddingMatrix({}, 8, {}), IndexConfig{}), InputError);
}

TEST_CASE(".rpf files round-trip to query-identical forests", "[ann][io]") {
  Rng rng(24);
  const auto m = random_matrix(700, 16, 25);
  const auto f = build_forest(m, {15, 10, 26});
  const auto path = testing::temp_path("roundtrip.rpf");
  save_forest(f, path);
  const auto loaded = load_forest(path);
  CHECK(loaded == f);
  const ForestSearcher a(f, m);
  const ForestSearcher b(loaded, m);
  for (int i = 0; i < 50; ++i) {
    const auto q = random_unit_vector(rng, 16);
    const auto sk = 1 + rng.uniform_index(5000);
    REQUIRE(a.query(q, 20, sk) == b.query(q, 20, sk));
  }
  CHECK_THROWS_AS(b.query(std::vector<float>(15, 0.25f), 5, 100), InputError);

  const auto bytes = serialized(f);
  CHECK(bytes.substr(0, 4) == "RPF1");
  SECTION("wrong magic") {
    auto bad = bytes;
    bad[3] = '2';
    std::istringstream in(bad);
    CHECK_THROWS_AS(read_forest(in), FormatError);
  }
  SECTION("wrong version") {
    auto bad = bytes;
    bad[4] = 9;
    std::istringstream in(bad);
    CHECK_THROWS_AS(read_forest(in), FormatError);
  }
  SECTION("truncated") {
    for (const std::size_t cut : {std::size_t{2}, std::size_t{40}, bytes.size() / 2, bytes.size() - 1}) {
      std::istringstream in(bytes.substr(0, cut));
      CHECK_THROWS_AS(read_forest(in), FormatError);
    }
  }
}
