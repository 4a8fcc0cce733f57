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


// Shared helpers for the unit tests.

#pragma once

#include <functional>
#include <vector>

#include <doctest.h>

#include "mvam/encoder/feature_grid.hpp"
#include "mvam/numerics/gradcheck.hpp"
#include "mvam/numerics/graph.hpp"
#include "mvam/numerics/rng.hpp"

namespace mvam::testing {

using numerics::Graph;
using numerics::GradCheckResult;
using numerics::Matrix;
using numerics::Parameter;
using numerics::Rng;
using numerics::Var;

inline constexpr double kGradTolerance = 1e-4;
inline constexpr double kGradEps = 1e-5;

inline Matrix<double> random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  Matrix<double> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, scale);
  return m;
}

inline encoder::FeatureGrid random_grid(Rng& rng, int w, int h, int c, double scale = 1.0) {
  return encoder::FeatureGrid(w, h, random_matrix(rng, w * h, c, scale));
}

/// Central-difference check of d(root)/d(params) for a graph built by
/// `build`. Every value the check perturbs must be held in one of `params`.
inline GradCheckResult check_gradient(const std::vector<Parameter<double>*>& params,
                                      const std::function<Var(Graph<double>&)>& build) {
  std::vector<double> point;
  for (const auto* p : params) point.insert(point.end(), p->value.data(), p->value.data() + p->value.size());
  const auto assign = [&](std::span<const double> x) {
    std::size_t k = 0;
    for (auto* p : params) {
      for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] = x[k++];
    }
  };

  for (auto* p : params) p->zero_grad();
  {
    Graph<double> g;
    g.backward(build(g));
  }
  std::vector<double> analytic;
  for (const auto* p : params) analytic.insert(analytic.end(), p->grad.data(), p->grad.data() + p->grad.size());

  const numerics::ScalarFunction f = [&](std::span<const double> x) {
    assign(x);
    Graph<double> g(numerics::GradMode::kDisabled);
    return g.value(build(g))(0, 0);
  };
  GradCheckResult result = numerics::finite_diff_check(f, analytic, point, kGradEps);
  assign(point);
  return result;
}

}  // namespace mvam::testing
