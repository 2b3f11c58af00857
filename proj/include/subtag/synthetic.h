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

#include "subtag/corpus.h"
#include "subtag/embedding.h"

namespace subtag {

/// Parameters of the deterministic synthetic corpus used by tests, the
/// acceptance suite and the bundled data set.
///
/// Every subject owns a small set of pseudo-words; its name and definition
/// are drawn from that set. A document picks its gold subjects uniformly and
/// writes an abstract in which each word comes from one of its gold
/// subjects' sets with probability `topical_fraction`, otherwise from the
/// whole vocabulary.
struct SyntheticSpec {
  std::size_t n_subjects = 1000;
  std::size_t n_documents = 200;
  std::size_t vocabulary = 4000;
  std::size_t words_per_subject = 8;
  std::size_t definition_words = 12;
  std::size_t abstract_words = 60;
  std::size_t min_gold = 1;
  std::size_t max_gold = 4;
  double topical_fraction = 0.6;
  double definition_fraction = 0.8;  // share of subjects that get a definition
  std::uint64_t seed = 7;
};

Corpus make_synthetic_corpus(const SyntheticSpec& spec);

/// Adds isotropic Gaussian noise of scale `sigma` to every row and
/// re-normalizes. Deterministic in `seed`.
EmbeddingMatrix add_embedding_noise(const EmbeddingMatrix& m, double sigma, std::uint64_t seed);

}  // namespace subtag
