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
#include <span>
#include <string>
#include <vector>

#include "subtag/embedding.h"

namespace subtag {

struct IndexConfig {
  std::uint32_t n_trees = 100;
  std::uint32_t leaf_size = 16;
  std::uint64_t seed = 42;

  /// Throws InputError unless n_trees >= 1 and leaf_size >= 2.
  void check() const;

  bool operator==(const IndexConfig&) const = default;
};

/// A splitting hyperplane. Items with dot(normal, x) - offset >= 0 go right.
struct Hyperplane {
  std::span<const float> normal;
  float offset = 0.0f;

  double margin(std::span<const float> x) const noexcept;
};

/// One retrieved item. Lists are ordered by score descending, then code
/// ascending; ranks are 1-based and contiguous.
struct Candidate {
  std::string subject_code;
  float score = 0.0f;
  std::size_t rank = 0;

  bool operator==(const Candidate&) const = default;
};

/// Forest of random-projection trees over the rows of an EmbeddingMatrix.
/// The forest stores structure only; queries re-score against the matrix it
/// was built from, which is identified by its ids and a content fingerprint.
class RPForest {
 public:
  static constexpr std::uint32_t kNoChild = 0xFFFFFFFFu;

  enum class NodeKind : std::uint8_t { kLeaf = 0, kSplit = 1, kDegenerateLeaf = 2 };

  struct Node {
    NodeKind kind = NodeKind::kLeaf;
    std::uint32_t left = kNoChild;   // split only
    std::uint32_t right = kNoChild;  // split only
    float offset = 0.0f;             // split only
    std::uint32_t begin = 0;         // split: normal row; leaf: first slot in items
    std::uint32_t count = 0;         // leaf: number of items

    bool is_leaf() const noexcept { return kind != NodeKind::kSplit; }
    bool operator==(const Node&) const = default;
  };

  struct Tree {
    std::vector<Node> nodes;       // nodes[0] is the root; children follow parents
    std::vector<float> normals;    // one dim-sized row per split node
    std::vector<std::uint32_t> items;  // leaf ranges index into this permutation

    bool operator==(const Tree&) const = default;
  };

  RPForest() = default;
  RPForest(IndexConfig config, std::size_t dim, std::vector<std::string> item_ids,
           std::uint64_t fingerprint, std::vector<Tree> trees);

  const IndexConfig& config() const noexcept { return config_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return item_ids_.size(); }
  const std::vector<std::string>& item_ids() const noexcept { return item_ids_; }
  std::uint64_t fingerprint() const noexcept { return fingerprint_; }
  const std::vector<Tree>& trees() const noexcept { return trees_; }

  Hyperplane hyperplane(std::size_t tree, std::size_t node) const;
  std::span<const std::uint32_t> leaf_items(std::size_t tree, std::size_t node) const;

  /// Throws InputError naming both sides when `m` is not the matrix the
  /// forest was built over.
  void check_compatible(const EmbeddingMatrix& m) const;

  bool operator==(const RPForest&) const = default;

 private:
  IndexConfig config_;
  std::size_t dim_ = 0;
  std::vector<std::string> item_ids_;
  std::uint64_t fingerprint_ = 0;
  std::vector<Tree> trees_;
};

/// Content hash of a matrix's ids and vector bytes.
std::uint64_t matrix_fingerprint(const EmbeddingMatrix& m);

/// Builds cfg.n_trees trees. Tree t draws from derive_seed(cfg.seed, t), so
/// the result does not depend on `n_threads` (0 = hardware concurrency).
RPForest build_forest(const EmbeddingMatrix& m, const IndexConfig& cfg,
                      std::size_t n_threads = 0);

/// Forest bound to its item matrix. Construction checks compatibility once;
/// queries are const and may run concurrently.
class ForestSearcher {
 public:
  ForestSearcher(const RPForest& forest, const EmbeddingMatrix& items);

  /// Best-first search over all trees until `search_k` leaf items have been
  /// inspected, then exact re-scoring of the de-duplicated pool.
  std::vector<Candidate> query(std::span<const float> q, std::size_t k,
                               std::size_t search_k) const;

  /// Distinct items the traversal would score for `search_k`, in discovery
  /// order.
  std::vector<std::uint32_t> candidate_pool(std::span<const float> q,
                                            std::size_t search_k) const;

  const RPForest& forest() const noexcept { return forest_; }
  const EmbeddingMatrix& items() const noexcept { return items_; }

 private:
  const RPForest& forest_;
  const EmbeddingMatrix& items_;
};

std::vector<Candidate> query(const RPForest& forest, const EmbeddingMatrix& items,
                             std::span<const float> q, std::size_t k, std::size_t search_k);

/// Brute-force cosine top-k with the same ordering contract as query().
std::vector<Candidate> exact_topk(const EmbeddingMatrix& m, std::span<const float> q,
                                  std::size_t k);

/// Cosine score used by both the forest and the exact scan.
float cosine_score(std::span<const float> a, std::span<const float> b) noexcept;

// .rpf files: "RPF1", u32 version, u32 dim, u64 item count, u32 tree count,
// config (u32 n_trees, u32 leaf_size, u64 seed), u64 fingerprint, id table
// (u16 length + bytes per id), then per tree: u32 node count, u32 split
// count, node records (u8 kind, u32 left, u32 right, f32 offset, u32 begin,
// u32 count), split normals as f32, then the u32 item permutation.
inline constexpr std::uint32_t kForestFormatVersion = 1;

void write_forest(std::ostream& out, const RPForest& f);
RPForest read_forest(std::istream& in);
void save_forest(const RPForest& f, const std::filesystem::path& path);
RPForest load_forest(const std::filesystem::path& path);

}  // namespace subtag
