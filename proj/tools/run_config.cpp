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

#include "run_config.h"

#include <fstream>
#include <set>

#include <json.hpp>

#include "subtag/error.h"
#include "subtag/evaluation.h"

namespace subtag::cli {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (!known.contains(key)) throw InputError(where + ": unknown key \"" + key + "\"");
  }
}

const json* section(const json& root, const char* key) {
  const auto it = root.find(key);
  if (it == root.end()) return nullptr;
  if (!it->is_object()) throw InputError(std::string("config: \"") + key + "\" must be an object");
  return &*it;
}

template <typename T>
void read(const json& obj, const char* key, T& dst, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    dst = it->get<T>();
  } catch (const json::exception&) {
    throw InputError(where + ": \"" + key + "\" has the wrong type");
  }
}

}  // namespace

RunConfig::RunConfig() : cutoffs(default_cutoffs()) { apply_seed(seed); }

void RunConfig::apply_seed(std::uint64_t s) {
  seed = s;
  embedder.seed = s;
  index.seed = s;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config " + path.string());
  const json root = json::parse(in, nullptr, false);
  if (root.is_discarded() || !root.is_object()) {
    throw InputError("config " + path.string() + " is not a JSON object");
  }
  reject_unknown(root,
                 {"seed", "paths", "embedder", "prompts", "index", "pipeline", "cutoffs",
                  "negatives_per_positive", "threads"},
                 "config");

  RunConfig cfg;
  std::uint64_t seed = cfg.seed;
  read(root, "seed", seed, "config");
  cfg.apply_seed(seed);
  read(root, "cutoffs", cfg.cutoffs, "config");
  read(root, "negatives_per_positive", cfg.negatives_per_positive, "config");
  read(root, "threads", cfg.threads, "config");

  const auto base = path.parent_path();
  const std::pair<const char*, std::filesystem::path*> fields[] = {
      {"docs", &cfg.paths.docs},
      {"subjects", &cfg.paths.subjects},
      {"doc_matrix", &cfg.paths.doc_matrix},
      {"subject_matrix", &cfg.paths.subject_matrix},
      {"forest", &cfg.paths.forest},
      {"candidates_run", &cfg.paths.candidates_run},
      {"stage1_run", &cfg.paths.stage1_run},
      {"two_stage_run", &cfg.paths.two_stage_run},
      {"pairs", &cfg.paths.pairs},
        {"report", &cfg.paths.report},
  };
  if (const auto* p = section(root, "paths")) {
    std::set<std::string> known;
    for (const auto& [key, dst] : fields) {
      known.insert(key);
      std::string value;
      read(*p, key, value, "config.paths");
      if (!value.empty()) *dst = value;
    }
    reject_unknown(*p, known, "config.paths");
  }
  // Relative paths, including defaults, are relative to the config file.
  for (const auto& [key, dst] : fields) {
    if (dst->is_relative()) *dst = base / *dst;
  }
  if (const auto* e = section(root, "embedder")) {
    reject_unknown(*e, {"kind", "dim", "endpoint", "batch_size", "timeout_seconds"},
                   "config.embedder");
    std::string kind = "hash";
    read(*e, "kind", kind, "config.embedder");
    if (kind == "hash") {
      cfg.embedder.kind = EmbedderKind::kHash;
    } else if (kind == "remote") {
      cfg.embedder.kind = EmbedderKind::kRemote;
    } else {
      throw InputError("config.embedder: unknown kind \"" + kind + "\"");
    }
    read(*e, "dim", cfg.embedder.dim, "config.embedder");
    read(*e, "endpoint", cfg.embedder.endpoint, "config.embedder");
    read(*e, "batch_size", cfg.embedder.batch_size, "config.embedder");
    read(*e, "timeout_seconds", cfg.embedder.timeout_seconds, "config.embedder");
  }
  if (const auto* p = section(root, "prompts")) {
    reject_unknown(*p, {"document", "subject"}, "config.prompts");
    read(*p, "document", cfg.prompts.document_prompt, "config.prompts");
    read(*p, "subject", cfg.prompts.subject_prompt, "config.prompts");
  }
  if (const auto* i = section(root, "index")) {
    reject_unknown(*i, {"n_trees", "leaf_size"}, "config.index");
    read(*i, "n_trees", cfg.index.n_trees, "config.index");
    read(*i, "leaf_size", cfg.index.leaf_size, "config.index");
  }
  if (const auto* p = section(root, "pipeline")) {
    reject_unknown(*p, {"n_candidates", "search_k", "output_k", "scorer"}, "config.pipeline");
    read(*p, "n_candidates", cfg.pipeline.n_candidates, "config.pipeline");
    read(*p, "search_k", cfg.pipeline.search_k, "config.pipeline");
    read(*p, "output_k", cfg.pipeline.output_k, "config.pipeline");
    if (const auto* s = section(*p, "scorer")) {
      reject_unknown(*s, {"kind", "endpoint", "batch_size", "timeout_seconds"},
                     "config.pipeline.scorer");
      std::string kind(scorer_name(cfg.pipeline.scorer.kind));
      read(*s, "kind", kind, "config.pipeline.scorer");
      cfg.pipeline.scorer.kind = parse_scorer_kind(kind);
      read(*s, "endpoint", cfg.pipeline.scorer.endpoint, "config.pipeline.scorer");
      read(*s, "batch_size", cfg.pipeline.scorer.batch_size, "config.pipeline.scorer");
      read(*s, "timeout_seconds", cfg.pipeline.scorer.timeout_seconds, "config.pipeline.scorer");
    }
  }
  return cfg;
}

}  // namespace subtag::cli
