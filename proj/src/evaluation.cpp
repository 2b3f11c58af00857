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

#include "subtag/evaluation.h"

#include <algorithm>
#include <cstdio>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "subtag/error.h"

namespace subtag {

namespace {

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string signed_fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%+.*f", digits, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::vector<std::size_t> normalized_cutoffs(std::span<const std::size_t> cutoffs) {
  if (cutoffs.empty()) throw InputError("at least one cutoff is required");
  std::vector<std::size_t> out(cutoffs.begin(), cutoffs.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (out.front() == 0) throw InputError("cutoffs must be positive");
  return out;
}

}  // namespace

std::vector<std::size_t> default_cutoffs() {
  std::vector<std::size_t> out;
  for (std::size_t k = 5; k <= 50; k += 5) out.push_back(k);
  return out;
}

double recall_at_k(std::span<const std::string> ranked, std::span<const std::string> gold,
                   std::size_t k) {
  if (k < 1) throw InputError("k must be at least 1");
  const std::unordered_set<std::string_view> gold_set(gold.begin(), gold.end());
  if (gold_set.empty()) throw InputError("recall is undefined for an empty gold set");
  std::unordered_set<std::string_view> hits;
  const auto n = std::min(k, ranked.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (gold_set.contains(ranked[i])) hits.insert(ranked[i]);
  }
  return static_cast<double>(hits.size()) / static_cast<double>(gold_set.size());
}

EvalReport evaluate_run(const RankedRun& run, const std::vector<Document>& docs,
                        std::span<const std::size_t> cutoffs) {
  EvalReport report;
  report.run_id = run.run_id;
  report.cutoffs = normalized_cutoffs(cutoffs);

  std::unordered_map<std::string_view, const Document*> by_id;
  for (const auto& d : docs) by_id.emplace(d.id, &d);

  std::vector<double> sums(report.cutoffs.size(), 0.0);
  std::vector<std::string> codes;
  for (const auto& list : run.lists) {
    const auto it = by_id.find(list.doc_id);
    if (it == by_id.end()) {
      throw InputError("run \"" + run.run_id + "\" references unknown document \"" +
                       list.doc_id + "\"");
    }
    const auto& gold = it->second->gold_subjects;
    if (gold.empty()) {
      ++report.n_docs_skipped;
      continue;
    }
    ++report.n_docs_evaluated;
    codes.clear();
    for (const auto& e : list.ranked) codes.push_back(e.subject_code);
    for (std::size_t c = 0; c < report.cutoffs.size(); ++c) {
      sums[c] += recall_at_k(codes, gold, report.cutoffs[c]);
    }
  }
  // Failed documents contribute zero recall.
  for (const auto& f : run.failures) {
    const auto it = by_id.find(f.doc_id);
    if (it == by_id.end()) {
      throw InputError("run \"" + run.run_id + "\" references unknown document \"" + f.doc_id +
                       "\"");
    }
    if (it->second->gold_subjects.empty()) {
      ++report.n_docs_skipped;
    } else {
      ++report.n_docs_evaluated;
    }
  }
  for (std::size_t c = 0; c < report.cutoffs.size(); ++c) {
    report.avg_recall[report.cutoffs[c]] =
        report.n_docs_evaluated == 0 ? 0.0
                                     : sums[c] / static_cast<double>(report.n_docs_evaluated);
  }
  return report;
}

Comparison compare_runs(const EvalReport& a, const EvalReport& b) {
  if (a.cutoffs != b.cutoffs) throw InputError("cannot compare reports with different cutoffs");
  Comparison out{a.run_id, b.run_id, {}};
  for (const auto k : a.cutoffs) {
    ComparisonRow row;
    row.k = k;
    row.a = a.avg_recall.at(k);
    row.b = b.avg_recall.at(k);
    row.abs_delta = row.b - row.a;
    if (row.a != 0.0) row.rel_delta = row.abs_delta / row.a;
    out.rows.push_back(row);
  }
  return out;
}

std::string report_text(const EvalReport& report) {
  const std::size_t w0 = 13;
  const std::size_t w1 = std::max<std::size_t>(report.run_id.size() + 2, 10);
  std::string out = pad("Recall at k", w0) + report.run_id + '\n';
  for (const auto k : report.cutoffs) {
    out += pad(std::to_string(k), w0) + pad(fixed(report.avg_recall.at(k)), w1);
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += '\n';
  }
  out += "evaluated " + std::to_string(report.n_docs_evaluated) + " docs, skipped " +
         std::to_string(report.n_docs_skipped) + " without gold subjects\n";
  return out;
}

std::string report_json(const EvalReport& report) {
  nlohmann::json recall = nlohmann::json::object();
  for (const auto& [k, v] : report.avg_recall) recall[std::to_string(k)] = v;
  const nlohmann::json obj = {{"run_id", report.run_id},
                              {"cutoffs", report.cutoffs},
                              {"avg_recall", recall},
                              {"n_docs_evaluated", report.n_docs_evaluated},
                              {"n_docs_skipped", report.n_docs_skipped}};
  return obj.dump(2) + '\n';
}

std::string comparison_text(const Comparison& c) {
  const std::size_t w0 = 13;
  const std::size_t wa = std::max<std::size_t>(c.a_run_id.size() + 2, 10);
  const std::size_t wb = std::max<std::size_t>(c.b_run_id.size() + 2, 10);
  const std::size_t wd = 12;
  std::string out = pad("Recall at k", w0) + pad(c.a_run_id, wa) + pad(c.b_run_id, wb) +
                    pad("abs delta", wd) + "rel delta\n";
  for (const auto& row : c.rows) {
    out += pad(std::to_string(row.k), w0) + pad(fixed(row.a), wa) + pad(fixed(row.b), wb) +
           pad(signed_fixed(row.abs_delta), wd) +
           (row.rel_delta ? signed_fixed(*row.rel_delta * 100.0, 1) + "%" : std::string("n/a")) +
           '\n';
  }
  return out;
}

std::string comparison_json(const Comparison& c) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : c.rows) {
    rows.push_back({{"k", row.k},
                    {"a", row.a},
                    {"b", row.b},
                    {"abs_delta", row.abs_delta},
                    {"rel_delta", row.rel_delta ? nlohmann::json(*row.rel_delta)
                                                : nlohmann::json(nullptr)}});
  }
  const nlohmann::json obj = {{"a", c.a_run_id}, {"b", c.b_run_id}, {"rows", rows}};
  return obj.dump(2) + '\n';
}

}  // namespace subtag
