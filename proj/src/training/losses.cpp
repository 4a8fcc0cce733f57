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

#include "mvam/training/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mvam/decoder/vocabulary.hpp"
#include "mvam/numerics/errors.hpp"

namespace mvam::training {

using decoder::Vocabulary;

void RafConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must be in (0, 1]");
  if (!(c > 0.0)) throw ConfigError("c must be positive");
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be nonnegative");
}

double xe_loss(const Matrix<double>& logits, std::span<const int> targets) {
  if (targets.empty()) throw ContractError("xe_loss: empty target sequence");
  if (logits.rows() < static_cast<Eigen::Index>(targets.size())) {
    throw ContractError("xe_loss: " + std::to_string(logits.rows()) + " logit rows for " +
                        std::to_string(targets.size()) + " targets");
  }
  Graph<double> g(numerics::GradMode::kDisabled);
  const Var l = g.constant(logits.topRows(static_cast<Eigen::Index>(targets.size())));
  return g.value(g.nll(l, targets, Vocabulary::kPad))(0, 0);
}

template <typename T>
Var xe_loss(Graph<T>& g, std::span<const Var> step_logits, const std::vector<std::vector<int>>& targets_by_step) {
  if (step_logits.empty() || step_logits.size() != targets_by_step.size()) {
    throw ContractError("xe_loss: need one target column per step");
  }
  std::vector<Var> terms;
  terms.reserve(step_logits.size());
  for (std::size_t t = 0; t < step_logits.size(); ++t) {
    terms.push_back(g.nll(step_logits[t], targets_by_step[t], Vocabulary::kPad));
  }
  Var total = terms.front();
  for (std::size_t t = 1; t < terms.size(); ++t) total = g.add(total, terms[t]);
  return total;
}

encoder::ProbabilityMap perturb_map(const encoder::ProbabilityMap& U, const RafConfig& cfg, Rng& rng) {
  cfg.validate();
  encoder::ProbabilityMap out = U;
  for (Eigen::Index i = 0; i < out.values.size(); ++i) {
    if (rng.bernoulli(cfg.gamma)) out.values(i) = std::clamp(rng.normal(U.values(i), cfg.c), 0.0, 1.0);
  }
  return out;
}

double raf_loss(double r_hat, double r, std::span<const encoder::ProbabilityMap> U_hat,
                std::span<const encoder::ProbabilityMap> U) {
  if (U_hat.size() != U.size()) throw ContractError("raf_loss: map counts differ");
  const double hinge = std::max(r_hat - r, 0.0);
  if (hinge == 0.0) return 0.0;
  double sq = 0.0;
  for (std::size_t m = 0; m < U.size(); ++m) {
    if (U_hat[m].values.size() != U[m].values.size()) throw ContractError("raf_loss: map sizes differ");
    sq += (U_hat[m].values - U[m].values).squaredNorm();
  }
  return hinge * sq;
}

template <typename T>
Var raf_loss(Graph<T>& g, double r_hat, double r, std::span<const Matrix<T>> U_hat, std::span<const Var> U) {
  if (U_hat.size() != U.size() || U.empty()) throw ContractError("raf_loss: map counts differ");
  const T hinge = static_cast<T>(std::max(r_hat - r, 0.0));
  Var total;
  for (std::size_t m = 0; m < U.size(); ++m) {
    const Var term = g.sum(g.square(g.sub(g.constant(U_hat[m]), U[m])));
    total = total.valid() ? g.add(total, term) : term;
  }
  return g.scale(total, hinge);
}

template Var xe_loss<float>(Graph<float>&, std::span<const Var>, const std::vector<std::vector<int>>&);
template Var xe_loss<double>(Graph<double>&, std::span<const Var>, const std::vector<std::vector<int>>&);
template Var raf_loss<float>(Graph<float>&, double, double, std::span<const Matrix<float>>, std::span<const Var>);
template Var raf_loss<double>(Graph<double>&, double, double, std::span<const Matrix<double>>, std::span<const Var>);

}  // namespace mvam::training
