// Copyright 2026 The mvam Authors.
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

#include "mvam/metrics/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "mvam/numerics/errors.hpp"

namespace mvam::metrics {

const std::vector<std::string>& category_order() {
  static const std::vector<std::string> order = {"C", "T", "A", "D", "M", "DI", kUnlabeled};
  return order;
}

CorpusScores score_corpus(const std::vector<EvalItem>& items) {
  CorpusScores scores;
  scores.count = static_cast<int>(items.size());
  if (items.empty()) return scores;
  std::vector<std::vector<Tokens>> reference_sets;
  reference_sets.reserve(items.size());
  for (const EvalItem& item : items) {
    if (item.refs.empty()) throw ContractError("score_corpus: pair '" + item.id + "' has no references");
    reference_sets.push_back(item.refs);
  }
  const DocumentFrequency df(reference_sets);
  BleuStats bleu;
  double rouge = 0.0;
  double cider = 0.0;
  for (const EvalItem& item : items) {
    bleu += bleu_stats(item.candidate, item.refs);
    rouge += rouge_l(item.candidate, item.refs);
    cider += cider_d(item.candidate, item.refs, df);
  }
  scores.bleu4 = bleu4(bleu, false);
  scores.rouge_l = rouge / static_cast<double>(items.size());
  scores.cider_d = cider / static_cast<double>(items.size());
  return scores;
}

EvalReport evaluate_corpus(const std::vector<EvalItem>& items) {
  EvalReport report;
  report.overall = score_corpus(items);
  const auto empty = std::count_if(items.begin(), items.end(), [](const EvalItem& i) { return i.candidate.empty(); });
  if (empty > 0) report.notes.push_back(std::to_string(empty) + " empty candidates scored 0");
  std::map<std::string, std::vector<EvalItem>> buckets;
  for (const EvalItem& item : items) {
    const auto& known = category_order();
    const bool labeled = !item.category.empty() &&
                         std::find(known.begin(), known.end() - 1, item.category) != known.end() - 1;
    buckets[labeled ? item.category : std::string(kUnlabeled)].push_back(item);
  }
  for (const std::string& category : category_order()) {
    const auto it = buckets.find(category);
    if (it == buckets.end()) {
      if (category != kUnlabeled) report.notes.push_back("category " + category + " has no pairs; omitted");
      continue;
    }
    if (category == kUnlabeled) {
      report.notes.push_back(std::to_string(it->second.size()) + " pairs without a change label");
    }
    report.by_category.emplace(category, score_corpus(it->second));
  }
  return report;
}

namespace {

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void write_rows(std::ostream& out, const std::string& category, const CorpusScores& s) {
  out << "BLEU4," << category << ',' << fixed(s.bleu4) << '\n';
  out << "ROUGE_L," << category << ',' << fixed(s.rouge_l) << '\n';
  out << "CIDEr-D," << category << ',' << fixed(s.cider_d) << '\n';
  out << "COUNT," << category << ',' << s.count << '\n';
}

}  // namespace

void write_report(std::ostream& out, const EvalReport& report, const std::vector<std::string>& header_lines) {
  out << "# mvam-eval-report v1\n";
  for (const std::string& line : header_lines) out << "# " << line << '\n';
  out << "metric,category,value\n";
  write_rows(out, "ALL", report.overall);
  for (const std::string& category : category_order()) {
    const auto it = report.by_category.find(category);
    if (it != report.by_category.end()) write_rows(out, category, it->second);
  }
  for (const ExtraRow& row : report.extra) out << row.metric << ',' << row.category << ',' << fixed(row.value) << '\n';
  for (const std::string& note : report.notes) out << "# note: " << note << '\n';
}

}  // namespace mvam::metrics
