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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace subtag {

enum class Role { kDocument, kSubject };

std::string_view role_name(Role role) noexcept;

inline constexpr std::string_view kDefaultDocumentPrompt =
    "Instruct: Given the following title and abstract for the document, retrieve "
    "the relevant subjects classifying the document";
inline constexpr std::string_view kDefaultSubjectPrompt = "Query:";

/// Role-specific prefixes. Texts are encoded as `prompt + "\n" + text`.
struct PromptConfig {
  std::string document_prompt{kDefaultDocumentPrompt};
  std::string subject_prompt{kDefaultSubjectPrompt};

  const std::string& for_role(Role role) const noexcept {
    return role == Role::kDocument ? document_prompt : subject_prompt;
  }
};

std::string apply_prompt(const std::string& prompt, std::string_view text);

/// Id-aligned row-major matrix of unit-norm float vectors. Immutable once
/// constructed; the constructor checks shape, id uniqueness and row norms.
class EmbeddingMatrix {
 public:
  static constexpr double kNormTolerance = 1e-4;

  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::vector<std::string> ids, std::size_t dim, std::vector<float> values);

  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  std::span<const float> values() const noexcept { return values_; }

  std::span<const float> row(std::size_t i) const noexcept {
    return {values_.data() + i * dim_, dim_};
  }

  std::optional<std::size_t> find(std::string_view id) const;

  /// Bit-for-bit equality of ids, dim and values.
  bool operator==(const EmbeddingMatrix& other) const noexcept;

 private:
  std::vector<std::string> ids_;
  std::size_t dim_ = 0;
  std::vector<float> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

enum class EmbedderKind { kHash, kRemote };

struct EmbedderConfig {
  EmbedderKind kind = EmbedderKind::kHash;
  std::size_t dim = 256;        // hash kind
  std::uint64_t seed = 7;       // hash kind
  std::string endpoint;         // remote kind
  std::size_t batch_size = 64;
  double timeout_seconds = 120.0;

  void check() const;
};

/// Signed feature hashing of boundary-padded lowercase character 3-grams,
/// L2-normalized. Pure function of (text, dim, seed).
std::vector<float> hash_embed(std::string_view text, std::size_t dim, std::uint64_t seed);

/// One request to `{endpoint}/embed`. The shim prepends the prompt. Vectors
/// are re-normalized locally. `batch_index` only labels errors.
std::vector<std::vector<float>> remote_embed(const std::string& endpoint,
                                             std::span<const std::string> batch, Role role,
                                             const PromptConfig& prompts,
                                             double timeout_seconds = 120.0,
                                             std::size_t batch_index = 0);

struct TextRecord {
  std::string id;
  std::string text;
};

/// Embeds every text with the role's prompt, preserving input order.
EmbeddingMatrix embed_corpus(const EmbedderConfig& embedder, std::span<const TextRecord> texts,
                             Role role, const PromptConfig& prompts);

// .emb files: "EMB1", u32 version, u32 dim, u64 count, per id (u16 length,
// UTF-8 bytes), then count*dim little-endian f32 in row-major order.
inline constexpr std::uint32_t kMatrixFormatVersion = 1;

void write_matrix(std::ostream& out, const EmbeddingMatrix& m);
EmbeddingMatrix read_matrix(std::istream& in);
void save_matrix(const EmbeddingMatrix& m, const std::filesystem::path& path);
EmbeddingMatrix load_matrix(const std::filesystem::path& path);

}  // namespace subtag
