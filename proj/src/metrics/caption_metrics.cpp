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

#include "mvam/metrics/caption_metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "mvam/numerics/errors.hpp"

namespace mvam::metrics {

Tokens tokenize(std::string_view sentence) {
  Tokens out;
  std::string current;
  for (char ch : sentence) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else if (!std::ispunct(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

NGramStats NGramStats::from(const Tokens& tokens) {
  NGramStats stats;
  stats.length = static_cast<int>(tokens.size());
  for (int n = 1; n <= kMaxN; ++n) {
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      std::string key = tokens[i];
      for (int k = 1; k < n; ++k) {
        key += ' ';
        key += tokens[i + k];
      }
      ++stats.counts[n - 1][key];
    }
  }
  return stats;
}

DocumentFrequency::DocumentFrequency(const std::vector<std::vector<Tokens>>& reference_sets)
    : corpus_size_(static_cast<int>(reference_sets.size())) {
  for (const auto& refs : reference_sets) {
    std::unordered_set<std::string> seen;
    for (const Tokens& ref : refs) {
      const NGramStats stats = NGramStats::from(ref);
      for (const auto& per_n : stats.counts) {
        for (const auto& [ngram, count] : per_n) seen.insert(ngram);
      }
    }
    for (const std::string& ngram : seen) ++df_[ngram];
  }
}

int DocumentFrequency::operator()(const std::string& ngram) const {
  const auto it = df_.find(ngram);
  return it == df_.end() ? 0 : it->second;
}

namespace {

struct TfIdf {
  std::array<std::unordered_map<std::string, double>, kMaxN> vec;
  std::array<double, kMaxN> norm{};
  int length = 0;
};

TfIdf tf_idf(const Tokens& tokens, const DocumentFrequency& df) {
  const NGramStats stats = NGramStats::from(tokens);
  const double log_corpus = std::log(static_cast<double>(std::max(df.corpus_size(), 1)));
  TfIdf out;
  out.length = stats.length;
  for (int n = 0; n < kMaxN; ++n) {
    double sq = 0.0;
    for (const auto& [ngram, tf] : stats.counts[n]) {
      const double idf = log_corpus - std::log(std::max(1.0, static_cast<double>(df(ngram))));
      const double w = tf * idf;
      out.vec[n].emplace(ngram, w);
      sq += w * w;
    }
    out.norm[n] = std::sqrt(sq);
  }
  return out;
}

}  // namespace

double cider_d(const Tokens& candidate, const std::vector<Tokens>& refs, const DocumentFrequency& df, double sigma) {
  if (refs.empty()) throw ContractError("cider_d: reference list is empty");
  if (candidate.empty()) return 0.0;
  const TfIdf hyp = tf_idf(candidate, df);
  double total = 0.0;
  for (const Tokens& ref_tokens : refs) {
    const TfIdf ref = tf_idf(ref_tokens, df);
    const double delta = static_cast<double>(hyp.length - ref.length);
    const double penalty = std::exp(-(delta * delta) / (2.0 * sigma * sigma));
    double per_ref = 0.0;
    for (int n = 0; n < kMaxN; ++n) {
      double dot = 0.0;
      for (const auto& [ngram, w] : hyp.vec[n]) {
        const auto it = ref.vec[n].find(ngram);
        if (it == ref.vec[n].end()) continue;
        dot += std::min(w, it->second) * it->second;
      }
      if (hyp.norm[n] != 0.0 && ref.norm[n] != 0.0) dot /= hyp.norm[n] * ref.norm[n];
      per_ref += dot * penalty;
    }
    total += per_ref / kMaxN;
  }
  return 10.0 * total / static_cast<double>(refs.size());
}

BleuStats& BleuStats::operator+=(const BleuStats& other) {
  for (int n = 0; n < kMaxN; ++n) {
    matched[n] += other.matched[n];
    total[n] += other.total[n];
  }
  candidate_length += other.candidate_length;
  reference_length += other.reference_length;
  return *this;
}

BleuStats bleu_stats(const Tokens& candidate, const std::vector<Tokens>& refs) {
  if (refs.empty()) throw ContractError("bleu_stats: reference list is empty");
  BleuStats stats;
  const NGramStats cand = NGramStats::from(candidate);
  std::array<std::unordered_map<std::string, int>, kMaxN> max_ref;
  std::size_t closest = refs.front().size();
  for (const Tokens& ref : refs) {
    const NGramStats r = NGramStats::from(ref);
    for (int n = 0; n < kMaxN; ++n) {
      for (const auto& [ngram, count] : r.counts[n]) {
        int& slot = max_ref[n][ngram];
        slot = std::max(slot, count);
      }
    }
    const auto gap = [&](std::size_t len) {
      return len > candidate.size() ? len - candidate.size() : candidate.size() - len;
    };
    if (gap(ref.size()) < gap(closest) || (gap(ref.size()) == gap(closest) && ref.size() < closest)) {
      closest = ref.size();
    }
  }
  for (int n = 0; n < kMaxN; ++n) {
    for (const auto& [ngram, count] : cand.counts[n]) {
      const auto it = max_ref[n].find(ngram);
      if (it != max_ref[n].end()) stats.matched[n] += std::min(count, it->second);
      stats.total[n] += count;
    }
  }
  stats.candidate_length = static_cast<double>(candidate.size());
  stats.reference_length = static_cast<double>(closest);
  return stats;
}

double bleu4(const BleuStats& stats, bool smooth) {
  constexpr double kEpsilon = 1e-9;
  if (stats.candidate_length <= 0.0) return 0.0;
  double log_sum = 0.0;
  for (int n = 0; n < kMaxN; ++n) {
    double precision = 0.0;
    if (stats.matched[n] > 0.0) {
      precision = stats.matched[n] / stats.total[n];
    } else if (smooth) {
      precision = kEpsilon / std::max(stats.total[n], 1.0);
    } else {
      return 0.0;
    }
    log_sum += std::log(precision);
  }
  const double brevity = stats.candidate_length > stats.reference_length
                             ? 1.0
                             : std::exp(1.0 - stats.reference_length / stats.candidate_length);
  return brevity * std::exp(log_sum / kMaxN);
}

double bleu4(const Tokens& candidate, const std::vector<Tokens>& refs, bool smooth) {
  return bleu4(bleu_stats(candidate, refs), smooth);
}

int lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<int> prev(b.size() + 1, 0);
  std::vector<int> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(const Tokens& candidate, const std::vector<Tokens>& refs, double beta) {
  if (refs.empty()) throw ContractError("rouge_l: reference list is empty");
  double best = 0.0;
  for (const Tokens& ref : refs) {
    if (candidate.empty() || ref.empty()) continue;
    const double lcs = lcs_length(candidate, ref);
    if (lcs == 0.0) continue;
    const double precision = lcs / static_cast<double>(candidate.size());
    const double recall = lcs / static_cast<double>(ref.size());
    const double f = (1.0 + beta * beta) * precision * recall / (recall + beta * beta * precision);
    best = std::max(best, f);
  }
  return best;
}

}  // namespace mvam::metrics
