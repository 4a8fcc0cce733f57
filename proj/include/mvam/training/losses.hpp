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

// Caption cross-entropy, map perturbation and the hinged map-attraction loss.

#pragma once

#include <span>
#include <vector>

#include "mvam/encoder/feature_grid.hpp"
#include "mvam/numerics/graph.hpp"
#include "mvam/numerics/rng.hpp"

namespace mvam::training {

using numerics::Graph;
using numerics::Matrix;
using numerics::Rng;
using numerics::Var;

struct RafConfig {
  double gamma = 0.025;  // per-cell selection probability
  double c = 0.1;        // perturbation standard deviation
  double lambda = 1000.0;

  void validate() const;
};

/// Summed negative log-likelihood of `targets` (words then EOS, optionally
/// PAD-padded) under row-wise softmax of `logits` (one row per step).
/// PAD positions are skipped. Empty targets are a contract error.
double xe_loss(const Matrix<double>& logits, std::span<const int> targets);

/// Graph form over a padded batch: sum over steps and sequences, PAD skipped.
/// targets_by_step[t][b] pairs with row b of step_logits[t].
template <typename T>
Var xe_loss(Graph<T>& g, std::span<const Var> step_logits, const std::vector<std::vector<int>>& targets_by_step);

/// Each cell is selected with probability gamma; selected cells are redrawn
/// from Normal(U, c^2) and clamped to [0, 1]. Two normal draws are consumed
/// per selected cell, one uniform per cell.
encoder::ProbabilityMap perturb_map(const encoder::ProbabilityMap& U, const RafConfig& cfg, Rng& rng);

/// max(r_hat - r, 0) * sum over maps of ||U_hat - U||^2.
double raf_loss(double r_hat, double r, std::span<const encoder::ProbabilityMap> U_hat,
                std::span<const encoder::ProbabilityMap> U);
inline double raf_loss(double r_hat, double r, const encoder::ProbabilityMap& U_hat,
                       const encoder::ProbabilityMap& U) {
  return raf_loss(r_hat, r, std::span(&U_hat, 1), std::span(&U, 1));
}

/// Graph form; U_hat and the rewards enter as constants, so the gradient
/// reaches only the unchanged maps (each an n x 1 Var).
template <typename T>
Var raf_loss(Graph<T>& g, double r_hat, double r, std::span<const Matrix<T>> U_hat, std::span<const Var> U);

inline double total_loss(double l_rl, double l_xe, double lambda) { return lambda * l_rl + l_xe; }

template <typename T>
Var total_loss(Graph<T>& g, Var l_rl, Var l_xe, double lambda) {
  return g.add(g.scale(l_rl, static_cast<T>(lambda)), l_xe);
}

}  // namespace mvam::training
