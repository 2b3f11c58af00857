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

#include "subtag/ann_index.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <thread>

#include "binary_io.h"
#include "subtag/error.h"
#include "subtag/random.h"

namespace subtag {

namespace {

constexpr std::string_view kForestMagic = "RPF1";
constexpr int kSplitAttempts = 3;

double dot(std::span<const float> a, std::span<const float> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

class TreeBuilder {
 public:
  TreeBuilder(const EmbeddingMatrix& m, const IndexConfig& cfg, std::uint64_t seed)
      : m_(m), cfg_(cfg), rng_(seed) {}

  RPForest::Tree build() {
    tree_.items.resize(m_.size());
    for (std::uint32_t i = 0; i < tree_.items.size(); ++i) tree_.items[i] = i;
    build_node(0, static_cast<std::uint32_t>(tree_.items.size()));
    return std::move(tree_);
  }

 private:
  std::uint32_t make_leaf(std::uint32_t begin, std::uint32_t end, RPForest::NodeKind kind) {
    const auto id = static_cast<std::uint32_t>(tree_.nodes.size());
    RPForest::Node node;
    node.kind = kind;
    node.begin = begin;
    node.count = end - begin;
    tree_.nodes.push_back(node);
    return id;
  }

  // Hyperplane through the midpoint of two sampled items, normal along their
  // difference. Falls back to a Gaussian direction through the median
  // projection when every sampled pair coincides.
  void choose_hyperplane(std::span<const std::uint32_t> items, std::vector<float>& normal,
                         float& offset) {
    const std::size_t dim = m_.dim();
    const auto n = items.size();
    std::vector<double> diff(dim);
    for (int attempt = 0; attempt < kSplitAttempts; ++attempt) {
      const auto i = rng_.uniform_index(n);
      auto j = rng_.uniform_index(n - 1);
      if (j >= i) ++j;
      const auto a = m_.row(items[i]);
      const auto b = m_.row(items[j]);
      double sq = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        diff[d] = static_cast<double>(a[d]) - b[d];
        sq += diff[d] * diff[d];
      }
      if (sq == 0.0) continue;
      const double inv = 1.0 / std::sqrt(sq);
      double off = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        normal[d] = static_cast<float>(diff[d] * inv);
        off += static_cast<double>(normal[d]) * 0.5 * (static_cast<double>(a[d]) + b[d]);
      }
      offset = static_cast<float>(off);
      return;
    }

    double sq = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      diff[d] = rng_.gaussian();
      sq += diff[d] * diff[d];
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (std::size_t d = 0; d < dim; ++d) normal[d] = static_cast<float>(diff[d] * inv);
    std::vector<double> proj(n);
    for (std::size_t i = 0; i < n; ++i) proj[i] = dot(normal, m_.row(items[i]));
    std::sort(proj.begin(), proj.end());
    const double median =
        n % 2 == 1 ? proj[n / 2] : 0.5 * (proj[n / 2 - 1] + proj[n / 2]);
    offset = static_cast<float>(median);
  }

  std::uint32_t build_node(std::uint32_t begin, std::uint32_t end) {
    if (end - begin <= cfg_.leaf_size) return make_leaf(begin, end, RPForest::NodeKind::kLeaf);

    const std::span<std::uint32_t> items(tree_.items.data() + begin, end - begin);
    std::vector<float> normal(m_.dim());
    float offset = 0.0f;
    std::vector<std::uint32_t> left;
    std::vector<std::uint32_t> right;
    bool split = false;
    for (int attempt = 0; attempt < kSplitAttempts && !split; ++attempt) {
      choose_hyperplane(items, normal, offset);
      const Hyperplane hp{normal, offset};
      left.clear();
      right.clear();
      for (const auto item : items) {
        (hp.margin(m_.row(item)) >= 0.0 ? right : left).push_back(item);
      }
      split = !left.empty() && !right.empty();
    }
    if (!split) return make_leaf(begin, end, RPForest::NodeKind::kDegenerateLeaf);

    std::copy(left.begin(), left.end(), items.begin());
    std::copy(right.begin(), right.end(), items.begin() + static_cast<std::ptrdiff_t>(left.size()));
    const auto mid = begin + static_cast<std::uint32_t>(left.size());

    const auto id = static_cast<std::uint32_t>(tree_.nodes.size());
    RPForest::Node node;
    node.kind = RPForest::NodeKind::kSplit;
    node.offset = offset;
    node.begin = static_cast<std::uint32_t>(tree_.normals.size() / m_.dim());
    tree_.nodes.push_back(node);
    tree_.normals.insert(tree_.normals.end(), normal.begin(), normal.end());

    const auto l = build_node(begin, mid);
    const auto r = build_node(mid, end);
    tree_.nodes[id].left = l;
    tree_.nodes[id].right = r;
    return id;
  }

  const EmbeddingMatrix& m_;
  const IndexConfig& cfg_;
  Rng rng_;
  RPForest::Tree tree_;
};

// Total order used for every result list: score descending, id ascending.
struct ByScoreThenId {
  const std::vector<float>& scores;
  const std::vector<std::string>& ids;

  bool operator()(std::uint32_t a, std::uint32_t b) const noexcept {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids[a] < ids[b];
  }
};

std::vector<Candidate> top_k(std::vector<std::uint32_t> pool, const EmbeddingMatrix& m,
                             std::span<const float> q, std::size_t k) {
  std::vector<float> scores(m.size(), 0.0f);
  for (const auto i : pool) scores[i] = cosine_score(m.row(i), q);
  const auto take = std::min(k, pool.size());
  const ByScoreThenId cmp{scores, m.ids()};
  std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take), pool.end(),
                    cmp);
  std::vector<Candidate> out;
  out.reserve(take);
  for (std::size_t r = 0; r < take; ++r) {
    out.push_back(Candidate{m.ids()[pool[r]], scores[pool[r]], r + 1});
  }
  return out;
}

void check_query(std::size_t dim, std::span<const float> q, std::size_t k) {
  if (k < 1) throw InputError("k must be at least 1");
  if (q.size() != dim) {
    throw InputError("query has dimension " + std::to_string(q.size()) + ", index expects " +
                     std::to_string(dim));
  }
}

}  // namespace

void IndexConfig::check() const {
  if (n_trees < 1) throw InputError("n_trees must be at least 1");
  if (leaf_size < 2) throw InputError("leaf_size must be at least 2");
}

double Hyperplane::margin(std::span<const float> x) const noexcept {
  return dot(normal, x) - static_cast<double>(offset);
}

float cosine_score(std::span<const float> a, std::span<const float> b) noexcept {
  return static_cast<float>(dot(a, b));
}

RPForest::RPForest(IndexConfig config, std::size_t dim, std::vector<std::string> item_ids,
                   std::uint64_t fingerprint, std::vector<Tree> trees)
    : config_(config),
      dim_(dim),
      item_ids_(std::move(item_ids)),
      fingerprint_(fingerprint),
      trees_(std::move(trees)) {}

Hyperplane RPForest::hyperplane(std::size_t tree, std::size_t node) const {
  const auto& t = trees_.at(tree);
  const auto& n = t.nodes.at(node);
  if (n.kind != NodeKind::kSplit) throw InputError("node is a leaf");
  return Hyperplane{std::span<const float>(t.normals).subspan(std::size_t{n.begin} * dim_, dim_),
                    n.offset};
}

std::span<const std::uint32_t> RPForest::leaf_items(std::size_t tree, std::size_t node) const {
  const auto& t = trees_.at(tree);
  const auto& n = t.nodes.at(node);
  if (!n.is_leaf()) throw InputError("node is not a leaf");
  return std::span<const std::uint32_t>(t.items).subspan(n.begin, n.count);
}

void RPForest::check_compatible(const EmbeddingMatrix& m) const {
  if (m.size() != size()) {
    throw InputError("forest indexes " + std::to_string(size()) + " items but the matrix has " +
                     std::to_string(m.size()));
  }
  if (m.dim() != dim_) {
    throw InputError("forest dimension " + std::to_string(dim_) + " differs from matrix dimension " +
                     std::to_string(m.dim()));
  }
  if (m.ids() != item_ids_) throw InputError("forest item ids differ from matrix ids");
  if (matrix_fingerprint(m) != fingerprint_) {
    throw InputError("matrix vectors differ from those the forest was built over");
  }
}

std::uint64_t matrix_fingerprint(const EmbeddingMatrix& m) {
  // FNV-1a over (u64 id length, id bytes) and the little-endian float words.
  std::uint64_t h = 0xCBF29CE484222325ULL;
  const auto feed = [&h](std::uint64_t word, int bytes) {
    for (int i = 0; i < bytes; ++i) {
      h ^= (word >> (8 * i)) & 0xFF;
      h *= 0x100000001B3ULL;
    }
  };
  feed(m.dim(), 8);
  for (const auto& id : m.ids()) {
    feed(id.size(), 8);
    for (const char c : id) feed(static_cast<unsigned char>(c), 1);
  }
  for (const float v : m.values()) feed(std::bit_cast<std::uint32_t>(v), 4);
  return h;
}

RPForest build_forest(const EmbeddingMatrix& m, const IndexConfig& cfg, std::size_t n_threads) {
  cfg.check();
  if (m.empty()) throw InputError("cannot build a forest over an empty matrix");
  if (m.size() >= RPForest::kNoChild) throw InputError("too many items for one forest");

  std::vector<RPForest::Tree> trees(cfg.n_trees);
  const auto build_tree = [&](std::size_t t) {
    trees[t] = TreeBuilder(m, cfg, derive_seed(cfg.seed, t)).build();
  };
  if (n_threads == 0) n_threads = std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<std::size_t>(n_threads, cfg.n_trees);
  if (n_threads <= 1) {
    for (std::size_t t = 0; t < cfg.n_trees; ++t) build_tree(t);
  } else {
    std::vector<std::jthread> workers;
    workers.reserve(n_threads);
    for (std::size_t w = 0; w < n_threads; ++w) {
      workers.emplace_back([&, w] {
        for (std::size_t t = w; t < cfg.n_trees; t += n_threads) build_tree(t);
      });
    }
  }
  return RPForest(cfg, m.dim(), m.ids(), matrix_fingerprint(m), std::move(trees));
}

ForestSearcher::ForestSearcher(const RPForest& forest, const EmbeddingMatrix& items)
    : forest_(forest), items_(items) {
  forest_.check_compatible(items_);
}

std::vector<std::uint32_t> ForestSearcher::candidate_pool(std::span<const float> q,
                                                          std::size_t search_k) const {
  if (search_k < 1) throw InputError("search_k must be at least 1");
  if (q.size() != forest_.dim()) {
    throw InputError("query has dimension " + std::to_string(q.size()) + ", index expects " +
                     std::to_string(forest_.dim()));
  }

  struct Entry {
    double priority;
    std::uint32_t tree;
    std::uint32_t node;
  };
  // Max-heap on priority; ties pop the lower (tree, node) first.
  const auto lower = [](const Entry& a, const Entry& b) {
    if (a.priority != b.priority) return a.priority < b.priority;
    if (a.tree != b.tree) return a.tree > b.tree;
    return a.node > b.node;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(lower)> heap(lower);
  const auto& trees = forest_.trees();
  for (std::uint32_t t = 0; t < trees.size(); ++t) {
    heap.push({std::numeric_limits<double>::infinity(), t, 0});
  }

  std::vector<char> seen(forest_.size(), 0);
  std::vector<std::uint32_t> pool;
  std::size_t inspected = 0;
  while (!heap.empty() && inspected < search_k) {
    const Entry e = heap.top();
    heap.pop();
    const auto& node = trees[e.tree].nodes[e.node];
    if (node.is_leaf()) {
      for (const auto item : forest_.leaf_items(e.tree, e.node)) {
        ++inspected;
        if (!seen[item]) {
          seen[item] = 1;
          pool.push_back(item);
        }
      }
      continue;
    }
    const double margin = forest_.hyperplane(e.tree, e.node).margin(q);
    const auto near = margin >= 0.0 ? node.right : node.left;
    const auto far = margin >= 0.0 ? node.left : node.right;
    heap.push({std::min(e.priority, std::abs(margin)), e.tree, near});
    heap.push({std::min(e.priority, -std::abs(margin)), e.tree, far});
  }
  return pool;
}

std::vector<Candidate> ForestSearcher::query(std::span<const float> q, std::size_t k,
                                             std::size_t search_k) const {
  check_query(forest_.dim(), q, k);
  return top_k(candidate_pool(q, search_k), items_, q, k);
}

std::vector<Candidate> query(const RPForest& forest, const EmbeddingMatrix& items,
                             std::span<const float> q, std::size_t k, std::size_t search_k) {
  return ForestSearcher(forest, items).query(q, k, search_k);
}

std::vector<Candidate> exact_topk(const EmbeddingMatrix& m, std::span<const float> q,
                                  std::size_t k) {
  check_query(m.dim(), q, k);
  std::vector<std::uint32_t> all(m.size());
  for (std::uint32_t i = 0; i < all.size(); ++i) all[i] = i;
  return top_k(std::move(all), m, q, k);
}

void write_forest(std::ostream& out, const RPForest& f) {
  io::put_magic(out, kForestMagic);
  io::put_le<std::uint32_t>(out, kForestFormatVersion);
  io::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.dim()));
  io::put_le<std::uint64_t>(out, f.size());
  io::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(f.trees().size()));
  io::put_le<std::uint32_t>(out, f.config().n_trees);
  io::put_le<std::uint32_t>(out, f.config().leaf_size);
  io::put_le<std::uint64_t>(out, f.config().seed);
  io::put_le<std::uint64_t>(out, f.fingerprint());
  for (const auto& id : f.item_ids()) {
    if (id.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw InputError("id longer than 65535 bytes cannot be stored");
    }
    io::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
  }
  for (const auto& tree : f.trees()) {
    io::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tree.nodes.size()));
    io::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tree.normals.size() / f.dim()));
    for (const auto& node : tree.nodes) {
      io::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(node.kind));
      io::put_le<std::uint32_t>(out, node.left);
      io::put_le<std::uint32_t>(out, node.right);
      io::put_f32(out, node.offset);
      io::put_le<std::uint32_t>(out, node.begin);
      io::put_le<std::uint32_t>(out, node.count);
    }
    io::put_f32s(out, tree.normals);
    for (const auto item : tree.items) io::put_le<std::uint32_t>(out, item);
  }
}

RPForest read_forest(std::istream& in) {
  io::Reader r(in, "forest file");
  r.expect_magic(kForestMagic);
  const auto version = r.le<std::uint32_t>();
  if (version != kForestFormatVersion) r.fail("unsupported version " + std::to_string(version));
  const auto dim = r.le<std::uint32_t>();
  const auto n_items = r.le<std::uint64_t>();
  const auto n_trees = r.le<std::uint32_t>();
  IndexConfig cfg;
  cfg.n_trees = r.le<std::uint32_t>();
  cfg.leaf_size = r.le<std::uint32_t>();
  cfg.seed = r.le<std::uint64_t>();
  const auto fingerprint = r.le<std::uint64_t>();
  if (dim == 0) r.fail("dimension is zero");
  if (n_items == 0 || n_items >= RPForest::kNoChild) r.fail("implausible item count");
  if (n_trees != cfg.n_trees) r.fail("tree count disagrees with config");
  try {
    cfg.check();
  } catch (const InputError& e) {
    r.fail(e.what());
  }
  // Every id takes two bytes, every tree at least one node and the item
  // permutation.
  r.require_available(n_items * 2 + std::uint64_t{n_trees} * (n_items * 4 + 25));

  std::vector<std::string> ids;
  ids.reserve(n_items);
  for (std::uint64_t i = 0; i < n_items; ++i) ids.push_back(r.str(r.le<std::uint16_t>()));

  std::vector<RPForest::Tree> trees(n_trees);
  std::vector<char> covered(n_items);
  for (auto& tree : trees) {
    const auto n_nodes = r.le<std::uint32_t>();
    const auto n_splits = r.le<std::uint32_t>();
    if (n_nodes == 0 || n_splits >= n_nodes) r.fail("malformed tree header");
    r.require_available(std::uint64_t{n_nodes} * 21 + std::uint64_t{n_splits} * dim * 4 +
                        n_items * 4);
    tree.nodes.resize(n_nodes);
    std::uint32_t splits_seen = 0;
    for (std::uint32_t i = 0; i < n_nodes; ++i) {
      auto& node = tree.nodes[i];
      const auto kind = r.le<std::uint8_t>();
      if (kind > 2) r.fail("unknown node kind " + std::to_string(kind));
      node.kind = static_cast<RPForest::NodeKind>(kind);
      node.left = r.le<std::uint32_t>();
      node.right = r.le<std::uint32_t>();
      node.offset = r.f32();
      node.begin = r.le<std::uint32_t>();
      node.count = r.le<std::uint32_t>();
      if (node.kind == RPForest::NodeKind::kSplit) {
        ++splits_seen;
        if (node.left <= i || node.right <= i || node.left >= n_nodes || node.right >= n_nodes ||
            node.begin >= n_splits) {
          r.fail("split node " + std::to_string(i) + " has invalid links");
        }
      } else if (std::uint64_t{node.begin} + node.count > n_items) {
        r.fail("leaf node " + std::to_string(i) + " exceeds the item range");
      }
    }
    if (splits_seen != n_splits) r.fail("split count disagrees with node records");
    tree.normals.resize(std::size_t{n_splits} * dim);
    r.f32s(tree.normals);
    tree.items.resize(n_items);
    std::fill(covered.begin(), covered.end(), 0);
    for (auto& item : tree.items) {
      item = r.le<std::uint32_t>();
      if (item >= n_items || covered[item]) r.fail("item permutation is not a permutation");
      covered[item] = 1;
    }
  }
  r.expect_end();
  return RPForest(cfg, dim, std::move(ids), fingerprint, std::move(trees));
}

void save_forest(const RPForest& f, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  write_forest(out, f);
  out.flush();
  if (!out) throw InputError("failed writing " + path.string());
}

RPForest load_forest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return read_forest(in);
}

}  // namespace subtag
