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

#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "mvam/metrics/caption_metrics.hpp"

namespace mvam::metrics {

inline constexpr const char* kUnlabeled = "unlabeled";

/// Change categories in report order.
const std::vector<std::string>& category_order();

struct EvalItem {
  std::string id;
  std::string category;  // C, T, A, D, M, DI; empty means unlabeled
  Tokens candidate;
  std::vector<Tokens> refs;
};

struct CorpusScores {
  double bleu4 = 0.0;     // corpus-level, unsmoothed
  double rouge_l = 0.0;   // mean over pairs
  double cider_d = 0.0;   // mean over pairs, document frequencies from these pairs' references
  int count = 0;
};

struct ExtraRow {
  std::string metric;
  std::string category;
  double value = 0.0;
};

struct EvalReport {
  CorpusScores overall;
  std::map<std::string, CorpusScores> by_category;
  /// Caller-supplied rows written after the caption metrics.
  std::vector<ExtraRow> extra;
  std::vector<std::string> notes;
};

/// Scores a set of pairs as one corpus.
CorpusScores score_corpus(const std::vector<EvalItem>& items);

/// Overall scores plus one entry per non-empty category, each category
/// scored as a corpus of its own. Empty categories are omitted with a note;
/// items without a label land in the "unlabeled" bucket.
EvalReport evaluate_corpus(const std::vector<EvalItem>& items);

/// Versioned "metric,category,value" text. header_lines are written as
/// comments after the version line.
void write_report(std::ostream& out, const EvalReport& report, const std::vector<std::string>& header_lines);

}  // namespace mvam::metrics
