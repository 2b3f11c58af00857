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

#include "subtag/synthetic.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_set>

#include "subtag/error.h"
#include "subtag/random.h"

namespace subtag {

namespace {

constexpr std::string_view kOnsets[] = {"b",  "d",  "f",  "g",  "k",  "l",  "m",  "n",
                                        "p",  "r",  "s",  "t",  "v",  "w",  "z",  "br",
                                        "st", "kr", "pl", "sch", "tr", "gl", "fr", "sp"};
constexpr std::string_view kNuclei[] = {"a", "e", "i", "o", "u", "ei", "au", "ie", "ä", "ü"};
constexpr std::string_view kCodas[] = {"", "", "", "n", "r", "s", "t", "l", "ng", "ch"};

template <std::size_t N>
std::string_view pick(Rng& rng, const std::string_view (&arr)[N]) {
  return arr[rng.uniform_index(N)];
}

std::vector<std::string> make_vocabulary(std::size_t n, Rng& rng) {
  std::vector<std::string> words;
  std::unordered_set<std::string> seen;
  words.reserve(n);
  while (words.size() < n) {
    std::string w;
    const auto syllables = 2 + rng.uniform_index(2);
    for (std::size_t s = 0; s < syllables; ++s) {
      w += pick(rng, kOnsets);
      w += pick(rng, kNuclei);
      w += pick(rng, kCodas);
    }
    if (seen.insert(w).second) words.push_back(std::move(w));
  }
  return words;
}

std::string capitalized(std::string w) {
  if (!w.empty() && w[0] >= 'a' && w[0] <= 'z') w[0] = static_cast<char>(w[0] - 'a' + 'A');
  return w;
}

std::string numbered(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%05zu", prefix, i);
  return buf;
}

}  // namespace

Corpus make_synthetic_corpus(const SyntheticSpec& spec) {
  if (spec.n_subjects == 0 || spec.vocabulary < spec.words_per_subject ||
      spec.words_per_subject < 2 || spec.min_gold < 1 || spec.max_gold < spec.min_gold ||
      spec.max_gold > spec.n_subjects) {
    throw InputError("inconsistent synthetic corpus parameters");
  }
  Rng rng(derive_seed(spec.seed, 0));
  const auto vocab = make_vocabulary(spec.vocabulary, rng);

  Corpus corpus;
  std::vector<std::vector<std::size_t>> topic(spec.n_subjects);
  for (std::size_t s = 0; s < spec.n_subjects; ++s) {
    auto& words = topic[s];
    while (words.size() < spec.words_per_subject) {
      const auto w = rng.uniform_index(vocab.size());
      if (std::find(words.begin(), words.end(), w) == words.end()) words.push_back(w);
    }
    Subject subject;
    subject.code = numbered("gnd", s);
    subject.name = capitalized(vocab[words[0]]) + " " + capitalized(vocab[words[1]]);
    if (rng.uniform01() < spec.definition_fraction) {
      std::string def;
      for (std::size_t i = 0; i < spec.definition_words; ++i) {
        if (i > 0) def += ' ';
        def += vocab[words[rng.uniform_index(words.size())]];
      }
      subject.definition = def + ".";
    }
    corpus.subjects.push_back(std::move(subject));
  }

  for (std::size_t d = 0; d < spec.n_documents; ++d) {
    Document doc;
    doc.id = numbered("doc", d);
    doc.language = d % 2 == 0 ? "de" : "en";
    const auto n_gold = spec.min_gold + rng.uniform_index(spec.max_gold - spec.min_gold + 1);
    std::vector<std::size_t> gold;
    while (gold.size() < n_gold) {
      const auto s = rng.uniform_index(spec.n_subjects);
      if (std::find(gold.begin(), gold.end(), s) == gold.end()) gold.push_back(s);
    }
    for (const auto s : gold) doc.gold_subjects.push_back(corpus.subjects[s].code);

    const auto& lead = topic[gold[0]];
    doc.title = capitalized(vocab[lead[rng.uniform_index(lead.size())]]) + " " +
                vocab[lead[rng.uniform_index(lead.size())]] + " " +
                vocab[rng.uniform_index(vocab.size())];
    for (std::size_t i = 0; i < spec.abstract_words; ++i) {
      if (i > 0) doc.abstract += ' ';
      if (rng.uniform01() < spec.topical_fraction) {
        const auto& words = topic[gold[rng.uniform_index(gold.size())]];
        doc.abstract += vocab[words[rng.uniform_index(words.size())]];
      } else {
        doc.abstract += vocab[rng.uniform_index(vocab.size())];
      }
    }
    doc.abstract += '.';
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

EmbeddingMatrix add_embedding_noise(const EmbeddingMatrix& m, double sigma, std::uint64_t seed) {
  std::vector<float> values(m.values().begin(), m.values().end());
  std::vector<double> row(m.dim());
  for (std::size_t i = 0; i < m.size(); ++i) {
    Rng rng(derive_seed(seed, i));
    double sq = 0.0;
    for (std::size_t j = 0; j < m.dim(); ++j) {
      row[j] = values[i * m.dim() + j] + sigma * rng.gaussian();
      sq += row[j] * row[j];
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (std::size_t j = 0; j < m.dim(); ++j) {
      values[i * m.dim() + j] = static_cast<float>(row[j] * inv);
    }
  }
  return EmbeddingMatrix(m.ids(), m.dim(), std::move(values));
}

}  // namespace subtag
