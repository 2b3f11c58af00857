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

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "subtag/embedding.h"
#include "subtag/random.h"

namespace subtag::testing {

inline std::vector<float> random_unit_vector(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  double sq = 0.0;
  for (auto& x : v) {
    x = rng.gaussian();
    sq += x * x;
  }
  std::vector<float> out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(v[i] / std::sqrt(sq));
  return out;
}

inline EmbeddingMatrix random_matrix(std::size_t n, std::size_t dim, std::uint64_t seed,
                                     const std::string& prefix = "item-") {
  Rng rng(seed);
  std::vector<std::string> ids;
  std::vector<float> values;
  values.reserve(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    ids.push_back(prefix + std::to_string(i));
    const auto v = random_unit_vector(rng, dim);
    values.insert(values.end(), v.begin(), v.end());
  }
  return EmbeddingMatrix(std::move(ids), dim, std::move(values));
}

inline std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("subtag_test_" + name);
}

}  // namespace subtag::testing
