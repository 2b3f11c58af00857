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

#include "subtag/embedding.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "binary_io.h"
#include "http_client.h"
#include "subtag/error.h"
#include "subtag/random.h"
#include "subtag/text.h"

namespace subtag {

namespace {

constexpr std::string_view kMatrixMagic = "EMB1";

// Normalizes in double precision, then rounds to float.
std::vector<float> normalized(std::span<const double> v) {
  double sq = 0.0;
  for (const double x : v) sq += x * x;
  const double norm = std::sqrt(sq);
  std::vector<float> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] / norm);
  return out;
}

}  // namespace

std::string_view role_name(Role role) noexcept {
  return role == Role::kDocument ? "document" : "subject";
}

std::string apply_prompt(const std::string& prompt, std::string_view text) {
  std::string out;
  out.reserve(prompt.size() + 1 + text.size());
  out += prompt;
  out += '\n';
  out += text;
  return out;
}

EmbeddingMatrix::EmbeddingMatrix(std::vector<std::string> ids, std::size_t dim,
                                 std::vector<float> values)
    : ids_(std::move(ids)), dim_(dim), values_(std::move(values)) {
  if (dim_ == 0) throw InputError("embedding dimension must be positive");
  if (values_.size() != ids_.size() * dim_) {
    throw InputError("embedding matrix has " + std::to_string(values_.size()) +
                     " values, expected " + std::to_string(ids_.size()) + " x " +
                     std::to_string(dim_));
  }
  index_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (!index_.emplace(ids_[i], i).second) {
      throw InputError("duplicate id \"" + ids_[i] + "\" in embedding matrix");
    }
    double sq = 0.0;
    for (const float x : row(i)) sq += static_cast<double>(x) * x;
    if (!(std::abs(std::sqrt(sq) - 1.0) <= kNormTolerance)) {
      throw InputError("row \"" + ids_[i] + "\" is not unit-norm (norm " +
                       std::to_string(std::sqrt(sq)) + ")");
    }
  }
}

std::optional<std::size_t> EmbeddingMatrix::find(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool EmbeddingMatrix::operator==(const EmbeddingMatrix& other) const noexcept {
  return dim_ == other.dim_ && ids_ == other.ids_ &&
         values_.size() == other.values_.size() &&
         std::memcmp(values_.data(), other.values_.data(),
                     values_.size() * sizeof(float)) == 0;
}

void EmbedderConfig::check() const {
  if (batch_size == 0) throw InputError("batch_size must be positive");
  if (kind == EmbedderKind::kHash && dim < 8) {
    throw InputError("hash embedder dim must be at least 8");
  }
  if (kind == EmbedderKind::kRemote && endpoint.empty()) {
    throw InputError("remote embedder requires an endpoint");
  }
}

std::vector<float> hash_embed(std::string_view text, std::size_t dim, std::uint64_t seed) {
  if (dim < 8) throw InputError("hash_embed dim must be at least 8");
  if (trim(text).empty()) throw InputError("cannot embed an empty or all-whitespace text");

  const std::uint64_t key = mix64(seed);
  std::vector<double> acc(dim, 0.0);
  for (const auto gram : char_trigrams(text)) {
    const std::uint64_t h = mix64(gram ^ key);
    const double sign = (h >> 63) != 0 ? -1.0 : 1.0;
    acc[h % dim] += sign;
  }
  bool all_zero = true;
  for (const double x : acc) all_zero = all_zero && x == 0.0;
  if (all_zero) {
    // Every bucket cancelled out; fall back to a seed-determined basis vector.
    acc[mix64(key ^ 0xA5A5A5A5A5A5A5A5ULL) % dim] = 1.0;
  }
  return normalized(acc);
}

std::vector<std::vector<float>> remote_embed(const std::string& endpoint,
                                             std::span<const std::string> batch, Role role,
                                             const PromptConfig& prompts,
                                             double timeout_seconds,
                                             std::size_t batch_index) {
  if (batch.empty()) return {};
  const auto ep = http::parse_endpoint(endpoint);
  nlohmann::json request = {{"role", role_name(role)},
                            {"prompt", prompts.for_role(role)},
                            {"texts", batch}};
  const auto response = http::post_json(ep, "/embed", request, timeout_seconds, batch_index);

  if (!response.is_object() || !response.contains("dim") ||
      !response["dim"].is_number_unsigned() || !response.contains("vectors") ||
      !response["vectors"].is_array()) {
    throw ProtocolError("embed response must be {\"dim\":D,\"vectors\":[...]}");
  }
  const auto dim = response["dim"].get<std::size_t>();
  const auto& vectors = response["vectors"];
  if (dim == 0) throw ProtocolError("embed response has dim 0");
  if (vectors.size() != batch.size()) {
    throw ProtocolError("embed response has " + std::to_string(vectors.size()) +
                        " vectors for " + std::to_string(batch.size()) + " texts");
  }
  std::vector<std::vector<float>> out;
  out.reserve(batch.size());
  std::vector<double> row(dim);
  for (const auto& v : vectors) {
    if (!v.is_array() || v.size() != dim) {
      throw ProtocolError("embed response vector length differs from dim " +
                          std::to_string(dim));
    }
    double sq = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      if (!v[j].is_number()) throw ProtocolError("embed response holds a non-number");
      row[j] = v[j].get<double>();
      if (!std::isfinite(row[j])) throw ProtocolError("embed response holds a non-finite value");
      sq += row[j] * row[j];
    }
    if (sq == 0.0) throw ProtocolError("embed response holds a zero vector");
    out.push_back(normalized(row));
  }
  return out;
}

EmbeddingMatrix embed_corpus(const EmbedderConfig& embedder, std::span<const TextRecord> texts,
                             Role role, const PromptConfig& prompts) {
  embedder.check();
  if (texts.empty()) throw InputError("nothing to embed");
  for (const auto& t : texts) {
    if (trim(t.text).empty()) throw InputError("empty text for \"" + t.id + "\"");
  }

  std::vector<std::string> ids;
  ids.reserve(texts.size());
  for (const auto& t : texts) ids.push_back(t.id);

  std::vector<float> values;
  std::size_t dim = 0;
  if (embedder.kind == EmbedderKind::kHash) {
    dim = embedder.dim;
    values.reserve(texts.size() * dim);
    const auto& prompt = prompts.for_role(role);
    for (const auto& t : texts) {
      const auto v = hash_embed(apply_prompt(prompt, t.text), dim, embedder.seed);
      values.insert(values.end(), v.begin(), v.end());
    }
  } else {
    std::vector<std::string> batch;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < texts.size(); begin += embedder.batch_size, ++batch_index) {
      const auto end = std::min(texts.size(), begin + embedder.batch_size);
      batch.clear();
      for (std::size_t i = begin; i < end; ++i) batch.push_back(texts[i].text);
      const auto rows = remote_embed(embedder.endpoint, batch, role, prompts,
                                     embedder.timeout_seconds, batch_index);
      for (const auto& r : rows) {
        if (dim == 0) {
          dim = r.size();
          values.reserve(texts.size() * dim);
        } else if (r.size() != dim) {
          throw ProtocolError("embed batch " + std::to_string(batch_index) + " returned dim " +
                              std::to_string(r.size()) + ", earlier batches returned " +
                              std::to_string(dim));
        }
        values.insert(values.end(), r.begin(), r.end());
      }
    }
  }
  return EmbeddingMatrix(std::move(ids), dim, std::move(values));
}

void write_matrix(std::ostream& out, const EmbeddingMatrix& m) {
  if (m.dim() > std::numeric_limits<std::uint32_t>::max()) {
    throw InputError("dimension too large for the .emb format");
  }
  io::put_magic(out, kMatrixMagic);
  io::put_le<std::uint32_t>(out, kMatrixFormatVersion);
  io::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.dim()));
  io::put_le<std::uint64_t>(out, m.size());
  for (const auto& id : m.ids()) {
    if (id.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw InputError("id longer than 65535 bytes cannot be stored");
    }
    io::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
  }
  io::put_f32s(out, m.values());
}

EmbeddingMatrix read_matrix(std::istream& in) {
  io::Reader r(in, "embedding file");
  r.expect_magic(kMatrixMagic);
  const auto version = r.le<std::uint32_t>();
  if (version != kMatrixFormatVersion) {
    r.fail("unsupported version " + std::to_string(version));
  }
  const auto dim = r.le<std::uint32_t>();
  const auto count = r.le<std::uint64_t>();
  if (dim == 0) r.fail("dimension is zero");
  // Each id costs at least two bytes, each row dim*4.
  if (count > (std::numeric_limits<std::uint64_t>::max() / 4) / (dim + 1)) {
    r.fail("implausible item count");
  }
  r.require_available(count * (2 + std::uint64_t{dim} * 4));

  std::vector<std::string> ids;
  ids.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto len = r.le<std::uint16_t>();
    ids.push_back(r.str(len));
  }
  std::vector<float> values(count * dim);
  r.f32s(values);
  r.expect_end();
  try {
    return EmbeddingMatrix(std::move(ids), dim, std::move(values));
  } catch (const InputError& e) {
    r.fail(e.what());
  }
}

void save_matrix(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  write_matrix(out, m);
  out.flush();
  if (!out) throw InputError("failed writing " + path.string());
}

EmbeddingMatrix load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return read_matrix(in);
}

}  // namespace subtag
