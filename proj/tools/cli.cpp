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

#include "cli.h"

#include <algorithm>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "run_config.h"
#include "subtag/ann_index.h"
#include "subtag/corpus.h"
#include "subtag/embedding.h"
#include "subtag/error.h"
#include "subtag/evaluation.h"
#include "subtag/pipeline.h"

namespace subtag::cli {

namespace {

namespace fs = std::filesystem;

struct Flags {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> threads;
  std::optional<std::string> embedder;
  std::optional<std::string> scorer;
  std::optional<std::string> endpoint;
  std::optional<std::string> docs;
  std::optional<std::string> subjects;
  std::optional<std::string> doc_matrix;
  std::optional<std::string> subject_matrix;
  std::optional<std::string> forest;
  std::optional<std::string> candidates;
  std::optional<std::size_t> dim;
  std::optional<std::size_t> batch_size;
  std::optional<std::uint32_t> n_trees;
  std::optional<std::uint32_t> leaf_size;
  std::optional<std::size_t> n_candidates;
  std::optional<std::size_t> search_k;
  std::optional<std::size_t> output_k;
  std::optional<std::size_t> negatives;
  std::vector<std::size_t> cutoffs;
  // eval
  std::optional<std::string> run;
  std::vector<std::string> compare;
  std::string format = "text";
};

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInput:
    case ErrorKind::kFormat:
      return kExitInput;
    case ErrorKind::kTransport:
    case ErrorKind::kProtocol:
      return kExitTransport;
    case ErrorKind::kInvariant:
      return kExitInternal;
  }
  return kExitInternal;
}

int exit_code_for(const std::vector<RunFailure>& failures) {
  int code = kExitOk;
  for (const auto& f : failures) code = std::max(code, exit_code_for(f.kind));
  return code;
}

RunConfig resolve_config(const Flags& f) {
  RunConfig cfg = f.config ? load_run_config(*f.config) : RunConfig{};
  if (f.seed) cfg.apply_seed(*f.seed);
  if (f.threads) cfg.threads = *f.threads;
  if (f.embedder) {
    if (*f.embedder == "hash") {
      cfg.embedder.kind = EmbedderKind::kHash;
    } else if (*f.embedder == "remote") {
      cfg.embedder.kind = EmbedderKind::kRemote;
    } else {
      throw InputError("unknown embedder \"" + *f.embedder + "\"");
    }
  }
  if (f.scorer) cfg.pipeline.scorer.kind = parse_scorer_kind(*f.scorer);
  if (f.endpoint) {
    cfg.embedder.endpoint = *f.endpoint;
    cfg.pipeline.scorer.endpoint = *f.endpoint;
  }
  if (f.docs) cfg.paths.docs = *f.docs;
  if (f.subjects) cfg.paths.subjects = *f.subjects;
  if (f.doc_matrix) cfg.paths.doc_matrix = *f.doc_matrix;
  if (f.subject_matrix) cfg.paths.subject_matrix = *f.subject_matrix;
  if (f.forest) cfg.paths.forest = *f.forest;
  if (f.candidates) cfg.paths.candidates_run = *f.candidates;
  if (f.dim) cfg.embedder.dim = *f.dim;
  if (f.batch_size) {
    cfg.embedder.batch_size = *f.batch_size;
    cfg.pipeline.scorer.batch_size = *f.batch_size;
  }
  if (f.n_trees) cfg.index.n_trees = *f.n_trees;
  if (f.leaf_size) cfg.index.leaf_size = *f.leaf_size;
  if (f.n_candidates) cfg.pipeline.n_candidates = *f.n_candidates;
  if (f.search_k) cfg.pipeline.search_k = *f.search_k;
  if (f.output_k) cfg.pipeline.output_k = *f.output_k;
  if (f.negatives) cfg.negatives_per_positive = *f.negatives;
  if (!f.cutoffs.empty()) cfg.cutoffs = f.cutoffs;
  return cfg;
}

Corpus load_corpus(const RunConfig& cfg, std::ostream& err, bool& valid) {
  Corpus corpus{load_documents(cfg.paths.docs), load_subjects(cfg.paths.subjects)};
  const auto report = validate(corpus.documents, corpus.subjects);
  valid = report.valid();
  for (const auto& [doc, code] : report.unknown_gold_codes) {
    err << "error: document \"" << doc << "\" references unknown subject code \"" << code
        << "\"\n";
  }
  for (const auto& id : report.empty_rendered_texts) {
    err << "error: record \"" << id << "\" renders to an empty text\n";
  }
  if (!valid) {
    err << "validation failed: " << report.unknown_gold_codes.size() << " unknown gold codes, "
        << report.empty_rendered_texts.size() << " empty texts (" << report.n_documents
        << " documents, " << report.n_subjects << " subjects)\n";
  }
  return corpus;
}

void report_failures(const std::vector<RunFailure>& failures, std::ostream& err) {
  for (const auto& f : failures) {
    err << "error: document \"" << f.doc_id << "\" failed (" << error_kind_name(f.kind)
        << "): " << f.message << '\n';
  }
}

int cmd_embed(const RunConfig& cfg, const Flags& f, std::ostream& out, std::ostream& err) {
  bool valid = false;
  const auto corpus = load_corpus(cfg, err, valid);
  if (!valid) return kExitInput;

  fs::path doc_out = cfg.paths.doc_matrix;
  fs::path subject_out = cfg.paths.subject_matrix;
  if (f.out) {
    fs::create_directories(*f.out);
    doc_out = fs::path(*f.out) / "docs.emb";
    subject_out = fs::path(*f.out) / "subjects.emb";
  }

  std::vector<TextRecord> doc_texts;
  for (const auto& d : corpus.documents) doc_texts.push_back({d.id, render_document_text(d)});
  std::vector<TextRecord> subject_texts;
  for (const auto& s : corpus.subjects) subject_texts.push_back({s.code, render_subject_text(s)});

  const auto docs = embed_corpus(cfg.embedder, doc_texts, Role::kDocument, cfg.prompts);
  const auto subjects = embed_corpus(cfg.embedder, subject_texts, Role::kSubject, cfg.prompts);
  save_matrix(docs, doc_out);
  save_matrix(subjects, subject_out);
  out << "embedded " << docs.size() << " documents and " << subjects.size()
      << " subjects, dim " << docs.dim() << " -> " << doc_out.string() << ", "
      << subject_out.string() << '\n';
  return kExitOk;
}

int cmd_index(const RunConfig& cfg, const Flags& f, std::ostream& out) {
  const auto subjects = load_matrix(cfg.paths.subject_matrix);
  const auto forest = build_forest(subjects, cfg.index, cfg.threads);
  const fs::path dst = f.out ? fs::path(*f.out) : cfg.paths.forest;
  save_forest(forest, dst);
  out << "indexed " << forest.size() << " subjects with " << cfg.index.n_trees
      << " trees (leaf_size " << cfg.index.leaf_size << ", seed " << cfg.index.seed << ") -> "
      << dst.string() << '\n';
  return kExitOk;
}

int cmd_retrieve(const RunConfig& cfg, const Flags& f, std::ostream& out, std::ostream& err) {
  bool valid = false;
  const auto corpus = load_corpus(cfg, err, valid);
  if (!valid) return kExitInput;
  const auto doc_matrix = load_matrix(cfg.paths.doc_matrix);
  const auto subject_matrix = load_matrix(cfg.paths.subject_matrix);
  const auto forest = load_forest(cfg.paths.forest);

  const fs::path dst = f.out ? fs::path(*f.out) : cfg.paths.stage1_run;
  auto result = run_stage1(corpus, doc_matrix, subject_matrix, forest, cfg.pipeline, "run");
  result.stage1.run_id = dst.stem().string();
  result.candidates.run_id = cfg.paths.candidates_run.stem().string();
  save_run(result.stage1, dst);
  save_run(result.candidates, cfg.paths.candidates_run);
  report_failures(result.stage1.failures, err);
  out << "retrieved up to " << cfg.pipeline.n_candidates << " candidates (search_k "
      << cfg.pipeline.search_k << ") for " << result.stage1.lists.size() << " documents, "
      << result.stage1.failures.size() << " failed -> " << dst.string() << ", "
      << cfg.paths.candidates_run.string() << '\n';
  return exit_code_for(result.stage1.failures);
}

int cmd_rerank(const RunConfig& cfg, const Flags& f, std::ostream& out, std::ostream& err) {
  bool valid = false;
  const auto corpus = load_corpus(cfg, err, valid);
  if (!valid) return kExitInput;
  const auto candidates = load_run(cfg.paths.candidates_run);
  auto scorer = make_scorer(cfg.pipeline.scorer, &corpus.documents);
  const fs::path dst = f.out ? fs::path(*f.out) : cfg.paths.two_stage_run;
  const auto run = rerank_run(corpus, candidates, cfg.pipeline, *scorer, dst.stem().string());
  save_run(run, dst);
  report_failures(run.failures, err);
  out << "reranked " << run.lists.size() << " documents with the "
      << scorer_name(cfg.pipeline.scorer.kind) << " scorer, " << run.failures.size()
      << " failed -> " << dst.string() << '\n';
  return exit_code_for(run.failures);
}

int cmd_genpairs(const RunConfig& cfg, const Flags& f, std::ostream& out, std::ostream& err) {
  bool valid = false;
  const auto corpus = load_corpus(cfg, err, valid);
  if (!valid) return kExitInput;
  const auto pairs = generate_training_pairs(corpus.documents, corpus.subjects,
                                             cfg.negatives_per_positive, cfg.seed);
  const fs::path dst = f.out ? fs::path(*f.out) : cfg.paths.pairs;
  save_pairs(pairs, dst);
  const auto positives = std::count_if(pairs.begin(), pairs.end(),
                                       [](const LabeledPair& p) { return p.label == 1; });
  out << "wrote " << pairs.size() << " pairs (" << positives << " positive, "
      << pairs.size() - static_cast<std::size_t>(positives) << " negative) -> " << dst.string()
      << '\n';
  return kExitOk;
}

fs::path run_alias(const RunConfig& cfg, const std::string& name) {
  if (name == "stage1") return cfg.paths.stage1_run;
  if (name == "two_stage") return cfg.paths.two_stage_run;
  if (name == "candidates") return cfg.paths.candidates_run;
  return name;
}

int cmd_eval(const RunConfig& cfg, const Flags& f, std::ostream& out) {
  if (f.format != "text" && f.format != "json") {
    throw InputError("--format must be text or json");
  }
  const auto docs = load_documents(cfg.paths.docs);
  std::string rendered;
  if (!f.compare.empty()) {
    if (f.compare.size() != 2) throw InputError("--compare takes exactly two runs");
    const auto a = evaluate_run(load_run(run_alias(cfg, f.compare[0])), docs, cfg.cutoffs);
    const auto b = evaluate_run(load_run(run_alias(cfg, f.compare[1])), docs, cfg.cutoffs);
    const auto cmp = compare_runs(a, b);
    rendered = f.format == "json" ? comparison_json(cmp) : comparison_text(cmp);
  } else {
    const auto path = run_alias(cfg, f.run.value_or("two_stage"));
    const auto report = evaluate_run(load_run(path), docs, cfg.cutoffs);
    rendered = f.format == "json" ? report_json(report) : report_text(report);
  }
  out << rendered;
  if (f.out) {
    std::ofstream file(*f.out, std::ios::binary | std::ios::trunc);
    if (!file) throw InputError("cannot write " + *f.out);
    file << rendered;
  }
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-stage subject tagging: embed, index, retrieve, rerank, evaluate"};
  app.name("subtag");
  app.require_subcommand(1);
  app.fallthrough();

  Flags f;
  app.add_option("--config", f.config, "JSON run configuration");
  app.add_option("--seed", f.seed, "Global seed (embedder, index, pair sampling)");
  app.add_option("--out", f.out, "Output path (a directory for embed)");
  app.add_option("--threads", f.threads, "Index build threads, 0 = all cores");
  app.add_option("--embedder", f.embedder, "hash | remote");
  app.add_option("--scorer", f.scorer, "passthrough | lexical | remote | oracle");
  app.add_option("--endpoint", f.endpoint, "Model service URL for remote embedder/scorer");
  app.add_option("--docs", f.docs, "Documents (line-delimited JSON)");
  app.add_option("--subjects", f.subjects, "Subjects (line-delimited JSON)");
  app.add_option("--doc-matrix", f.doc_matrix, "Document embeddings (.emb)");
  app.add_option("--subject-matrix", f.subject_matrix, "Subject embeddings (.emb)");
  app.add_option("--forest", f.forest, "Subject index (.rpf)");
  app.add_option("--candidates", f.candidates, "Full stage-1 candidate run");
  app.add_option("--dim", f.dim, "Hash embedder dimension");
  app.add_option("--batch-size", f.batch_size, "Remote batch size");
  app.add_option("--n-trees", f.n_trees, "Trees in the index");
  app.add_option("--leaf-size", f.leaf_size, "Maximum items per leaf");
  app.add_option("--n-candidates", f.n_candidates, "Stage-1 candidates per document");
  app.add_option("--search-k", f.search_k, "Leaf items inspected per query");
  app.add_option("--output-k", f.output_k, "Length of the output lists");
  app.add_option("--negatives", f.negatives, "Negatives per positive pair");
  app.add_option("--cutoffs", f.cutoffs, "Recall cutoffs")->delimiter(',');

  auto* embed = app.add_subcommand("embed", "Embed documents and subjects");
  auto* index = app.add_subcommand("index", "Build the subject index");
  auto* retrieve = app.add_subcommand("retrieve", "Stage 1: nearest-subject candidates");
  auto* rerank_cmd = app.add_subcommand("rerank", "Stage 2: re-rank candidates");
  auto* genpairs = app.add_subcommand("gen-pairs", "Labeled pairs for scorer training");
  auto* eval = app.add_subcommand("eval", "Average recall@k of a run, or compare two runs");
  eval->add_option("--run", f.run, "Run file or stage1 | two_stage | candidates");
  eval->add_option("--compare", f.compare, "Two runs to compare")->expected(2);
  eval->add_option("--format", f.format, "text | json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    const auto cfg = resolve_config(f);
    if (embed->parsed()) return cmd_embed(cfg, f, out, err);
    if (index->parsed()) return cmd_index(cfg, f, out);
    if (retrieve->parsed()) return cmd_retrieve(cfg, f, out, err);
    if (rerank_cmd->parsed()) return cmd_rerank(cfg, f, out, err);
    if (genpairs->parsed()) return cmd_genpairs(cfg, f, out, err);
    if (eval->parsed()) return cmd_eval(cfg, f, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace subtag::cli
