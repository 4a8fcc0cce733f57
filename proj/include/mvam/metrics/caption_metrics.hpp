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

// Caption metrics computed from scratch: CIDEr-D, BLEU-4 and ROUGE-L.
//
// All metrics work on tokenized sentences. tokenize() is the single
// tokenizer used for both training rewards and evaluation.

#pragma once

#include <array>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mvam::metrics {

using Tokens = std::vector<std::string>;

/// Lowercase, drop ASCII punctuation, split on whitespace.
Tokens tokenize(std::string_view sentence);

constexpr int kMaxN = 4;

/// n-gram multisets for n = 1..4, keyed by space-joined tokens.
struct NGramStats {
  std::array<std::unordered_map<std::string, int>, kMaxN> counts;
  int length = 0;

  static NGramStats from(const Tokens& tokens);
};

/// Document frequencies over a reference corpus: for every n-gram, the number
/// of reference *sets* (one set per image pair) that contain it.
class DocumentFrequency {
 public:
  DocumentFrequency() = default;
  explicit DocumentFrequency(const std::vector<std::vector<Tokens>>& reference_sets);

  int corpus_size() const { return corpus_size_; }
  int operator()(const std::string& ngram) const;

 private:
  std::unordered_map<std::string, int> df_;
  int corpus_size_ = 0;
};

/// CIDEr-D of one candidate against its references: TF-IDF n-gram vectors,
/// clipped cosine per n averaged over n = 1..4 and over references, Gaussian
/// length penalty with sigma = 6, scaled by 10. Empty candidates score 0.
double cider_d(const Tokens& candidate, const std::vector<Tokens>& refs, const DocumentFrequency& df,
               double sigma = 6.0);

/// Clipped n-gram matches and totals for BLEU, with the closest reference
/// length (ties resolved towards the shorter reference).
struct BleuStats {
  std::array<double, kMaxN> matched{};
  std::array<double, kMaxN> total{};
  double candidate_length = 0.0;
  double reference_length = 0.0;

  BleuStats& operator+=(const BleuStats& other);
};

BleuStats bleu_stats(const Tokens& candidate, const std::vector<Tokens>& refs);

/// BLEU-4 from accumulated statistics. With smoothing, zero precisions are
/// replaced by 1e-9 / max(total, 1) so short candidates keep a nonzero score.
double bleu4(const BleuStats& stats, bool smooth);
double bleu4(const Tokens& candidate, const std::vector<Tokens>& refs, bool smooth = true);

int lcs_length(const Tokens& a, const Tokens& b);

/// LCS F-measure with beta = 1.2, maximized over references.
double rouge_l(const Tokens& candidate, const std::vector<Tokens>& refs, double beta = 1.2);

}  // namespace mvam::metrics
