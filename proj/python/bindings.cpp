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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "subtag/ann_index.h"
#include "subtag/corpus.h"
#include "subtag/embedding.h"
#include "subtag/error.h"
#include "subtag/evaluation.h"
#include "subtag/pipeline.h"
#include "subtag/synthetic.h"

namespace py = pybind11;
using namespace subtag;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

std::span<const float> as_vector(const FloatArray& a) {
  if (a.ndim() != 1) throw InputError("expected a 1-d vector");
  return {a.data(), static_cast<std::size_t>(a.shape(0))};
}

py::array_t<float> to_numpy(std::span<const float> v) {
  py::array_t<float> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

EmbeddingMatrix matrix_from_numpy(std::vector<std::string> ids, const FloatArray& values) {
  if (values.ndim() != 2) throw InputError("expected a 2-d array of shape (n, dim)");
  const auto n = static_cast<std::size_t>(values.shape(0));
  const auto dim = static_cast<std::size_t>(values.shape(1));
  if (n != ids.size()) {
    throw InputError(std::to_string(ids.size()) + " ids for " + std::to_string(n) + " rows");
  }
  return {std::move(ids), dim, std::vector<float>(values.data(), values.data() + n * dim)};
}

py::list candidates_to_list(const std::vector<Candidate>& cands) {
  py::list out;
  for (const auto& c : cands) out.append(py::make_tuple(c.subject_code, c.score, c.rank));
  return out;
}

py::dict report_to_dict(const EvalReport& r) {
  py::dict d;
  d["run_id"] = r.run_id;
  d["cutoffs"] = r.cutoffs;
  d["avg_recall"] = r.avg_recall;
  d["n_docs_evaluated"] = r.n_docs_evaluated;
  d["n_docs_skipped"] = r.n_docs_skipped;
  return d;
}

Role parse_role(const std::string& role) {
  if (role == "document") return Role::kDocument;
  if (role == "subject") return Role::kSubject;
  throw InputError("role must be \"document\" or \"subject\"");
}

}  // namespace

PYBIND11_MODULE(_subtag, m) {
  m.doc() = "Core bindings for the subtag retrieval engine";

  // Translators registered later take precedence, so the base goes first.
  const auto& error = py::register_exception<Error>(m, "Error");
  py::register_exception<InputError>(m, "InputError", error.ptr());
  py::register_exception<FormatError>(m, "FormatError", error.ptr());
  py::register_exception<TransportError>(m, "TransportError", error.ptr());
  py::register_exception<ProtocolError>(m, "ProtocolError", error.ptr());
  py::register_exception<InvariantError>(m, "InvariantError", error.ptr());

  py::class_<Document>(m, "Document")
      .def(py::init<>())
      .def(py::init([](std::string id, std::string title, std::string abstract,
                       std::vector<std::string> gold, std::string language) {
             return Document{std::move(id), std::move(title), std::move(abstract),
                             std::move(language), std::move(gold)};
           }),
           py::arg("id"), py::arg("title"), py::arg("abstract") = "",
           py::arg("gold_subjects") = std::vector<std::string>{}, py::arg("language") = "")
      .def_readwrite("id", &Document::id)
      .def_readwrite("title", &Document::title)
      .def_readwrite("abstract", &Document::abstract)
      .def_readwrite("language", &Document::language)
      .def_readwrite("gold_subjects", &Document::gold_subjects)
      .def("__eq__", [](const Document& a, const Document& b) { return a == b; })
      .def("__repr__", [](const Document& d) { return "<Document " + d.id + ">"; });

  py::class_<Subject>(m, "Subject")
      .def(py::init<>())
      .def(py::init([](std::string code, std::string name, std::optional<std::string> def) {
             return Subject{std::move(code), std::move(name), std::move(def)};
           }),
           py::arg("code"), py::arg("name"), py::arg("definition") = py::none())
      .def_readwrite("code", &Subject::code)
      .def_readwrite("name", &Subject::name)
      .def_readwrite("definition", &Subject::definition)
      .def("__eq__", [](const Subject& a, const Subject& b) { return a == b; })
      .def("__repr__", [](const Subject& s) { return "<Subject " + s.code + ">"; });

  m.def("parse_documents", py::overload_cast<std::string_view>(&parse_documents), py::arg("text"));
  m.def("parse_subjects", py::overload_cast<std::string_view>(&parse_subjects), py::arg("text"));
  m.def("load_documents", &load_documents, py::arg("path"));
  m.def("load_subjects", &load_subjects, py::arg("path"));
  m.def("render_document_text", &render_document_text, py::arg("document"));
  m.def("render_subject_text", &render_subject_text, py::arg("subject"));
  m.def(
      "make_synthetic_corpus",
      [](std::size_t n_subjects, std::size_t n_documents, std::uint64_t seed) {
        SyntheticSpec spec;
        spec.n_subjects = n_subjects;
        spec.n_documents = n_documents;
        spec.seed = seed;
        auto c = make_synthetic_corpus(spec);
        return py::make_tuple(c.documents, c.subjects);
      },
      py::arg("n_subjects") = 1000, py::arg("n_documents") = 200, py::arg("seed") = 7,
      "Returns (documents, subjects).");

  py::class_<EmbeddingMatrix>(m, "EmbeddingMatrix")
      .def(py::init(&matrix_from_numpy), py::arg("ids"), py::arg("values"))
      .def_property_readonly("ids", &EmbeddingMatrix::ids)
      .def_property_readonly("dim", &EmbeddingMatrix::dim)
      .def("__len__", &EmbeddingMatrix::size)
      .def_property_readonly("values",
                             [](const EmbeddingMatrix& mat) {
                               py::array_t<float> out({static_cast<py::ssize_t>(mat.size()),
                                                       static_cast<py::ssize_t>(mat.dim())});
                               std::copy(mat.values().begin(), mat.values().end(),
                                         out.mutable_data());
                               return out;
                             })
      .def("row", [](const EmbeddingMatrix& mat, const std::string& id) -> py::object {
        const auto i = mat.find(id);
        if (!i) return py::none();
        return to_numpy(mat.row(*i));
      })
      .def("__eq__", [](const EmbeddingMatrix& a, const EmbeddingMatrix& b) { return a == b; });

  m.def("hash_embed",
        [](std::string_view text, std::size_t dim, std::uint64_t seed) {
          return to_numpy(hash_embed(text, dim, seed));
        },
        py::arg("text"), py::arg("dim") = 256, py::arg("seed") = 7);
  m.def(
      "embed_texts",
      [](const std::vector<std::pair<std::string, std::string>>& records, const std::string& role,
         std::size_t dim, std::uint64_t seed) {
        EmbedderConfig cfg;
        cfg.dim = dim;
        cfg.seed = seed;
        std::vector<TextRecord> texts;
        for (const auto& [id, text] : records) texts.push_back({id, text});
        return embed_corpus(cfg, texts, parse_role(role), PromptConfig{});
      },
      py::arg("records"), py::arg("role"), py::arg("dim") = 256, py::arg("seed") = 7,
      "Hash-embeds (id, text) records with the default prompt for the role.");
  m.def("save_matrix", &save_matrix, py::arg("matrix"), py::arg("path"));
  m.def("load_matrix", &load_matrix, py::arg("path"));

  py::class_<RPForest>(m, "Forest")
      .def_property_readonly("n_trees", [](const RPForest& f) { return f.config().n_trees; })
      .def_property_readonly("leaf_size", [](const RPForest& f) { return f.config().leaf_size; })
      .def_property_readonly("dim", &RPForest::dim)
      .def("__len__", &RPForest::size)
      .def("__eq__", [](const RPForest& a, const RPForest& b) { return a == b; });

  m.def(
      "build_forest",
      [](const EmbeddingMatrix& mat, std::uint32_t n_trees, std::uint32_t leaf_size,
         std::uint64_t seed, std::size_t threads) {
        py::gil_scoped_release release;
        return build_forest(mat, IndexConfig{n_trees, leaf_size, seed}, threads);
      },
      py::arg("matrix"), py::arg("n_trees") = 100, py::arg("leaf_size") = 16,
      py::arg("seed") = 42, py::arg("threads") = 0);
  m.def("save_forest", &save_forest, py::arg("forest"), py::arg("path"));
  m.def("load_forest", &load_forest, py::arg("path"));

  py::class_<ForestSearcher>(m, "Searcher")
      .def(py::init<const RPForest&, const EmbeddingMatrix&>(), py::arg("forest"),
           py::arg("matrix"), py::keep_alive<1, 2>(), py::keep_alive<1, 3>())
      .def(
          "query",
          [](const ForestSearcher& s, const FloatArray& q, std::size_t k, std::size_t search_k) {
            return candidates_to_list(s.query(as_vector(q), k, search_k));
          },
          py::arg("vector"), py::arg("k"), py::arg("search_k") = 50000,
          "Returns [(subject_code, score, rank), ...].");
  m.def(
      "exact_topk",
      [](const EmbeddingMatrix& mat, const FloatArray& q, std::size_t k) {
        return candidates_to_list(exact_topk(mat, as_vector(q), k));
      },
      py::arg("matrix"), py::arg("vector"), py::arg("k"));

  m.def("lexical_score", &lexical_score, py::arg("a"), py::arg("b"));
  m.def(
      "generate_training_pairs",
      [](const std::vector<Document>& docs, const std::vector<Subject>& subjects,
         std::size_t negatives, std::uint64_t seed) {
        py::list out;
        for (const auto& p : generate_training_pairs(docs, subjects, negatives, seed)) {
          out.append(py::make_tuple(p.doc_id, p.subject_code, p.label));
        }
        return out;
      },
      py::arg("documents"), py::arg("subjects"), py::arg("negatives_per_positive") = 1,
      py::arg("seed") = 7, "Returns [(doc_id, subject_code, label), ...].");

  py::class_<RankedRun>(m, "RankedRun")
      .def_readonly("run_id", &RankedRun::run_id)
      .def_property_readonly("stage",
                             [](const RankedRun& r) { return std::string(stage_name(r.stage)); })
      .def_property_readonly("lists",
                             [](const RankedRun& r) {
                               py::dict out;
                               for (const auto& l : r.lists) {
                                 py::list ranked;
                                 for (const auto& e : l.ranked) {
                                   ranked.append(py::make_tuple(e.subject_code, e.score));
                                 }
                                 out[py::str(l.doc_id)] = ranked;
                               }
                               return out;
                             })
      .def_property_readonly("failed_docs", [](const RankedRun& r) {
        std::vector<std::string> ids;
        for (const auto& f : r.failures) ids.push_back(f.doc_id);
        return ids;
      });
  m.def("load_run", &load_run, py::arg("path"));

  m.def("default_cutoffs", &default_cutoffs);
  m.def(
      "recall_at_k",
      [](const std::vector<std::string>& ranked, const std::vector<std::string>& gold,
         std::size_t k) { return recall_at_k(ranked, gold, k); },
      py::arg("ranked"), py::arg("gold"), py::arg("k"));
  m.def(
      "evaluate_run",
      [](const RankedRun& run, const std::vector<Document>& docs,
         std::optional<std::vector<std::size_t>> cutoffs) {
        const auto ks = cutoffs.value_or(default_cutoffs());
        return report_to_dict(evaluate_run(run, docs, ks));
      },
      py::arg("run"), py::arg("documents"), py::arg("cutoffs") = py::none());
  m.def(
      "compare_runs",
      [](const RankedRun& a, const RankedRun& b, const std::vector<Document>& docs,
         std::optional<std::vector<std::size_t>> cutoffs, const std::string& format) {
        const auto ks = cutoffs.value_or(default_cutoffs());
        const auto cmp = compare_runs(evaluate_run(a, docs, ks), evaluate_run(b, docs, ks));
        if (format == "json") return comparison_json(cmp);
        if (format == "text") return comparison_text(cmp);
        throw InputError("format must be text or json");
      },
      py::arg("a"), py::arg("b"), py::arg("documents"), py::arg("cutoffs") = py::none(),
      py::arg("format") = "text");
}
