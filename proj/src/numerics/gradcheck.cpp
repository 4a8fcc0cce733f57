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

#include "mvam/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mvam/numerics/errors.hpp"

namespace mvam::numerics {

std::vector<double> numeric_gradient(const ScalarFunction& f, std::span<const double> point, double eps) {
  if (!(eps > 0.0) || eps > 1e-2) throw ContractError("finite differences: eps must lie in (0, 1e-2]");
  std::vector<double> x(point.begin(), point.end());
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + eps;
    const double up = f(x);
    x[i] = saved - eps;
    const double down = f(x);
    x[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw NumericError("finite differences: non-finite function value when perturbing coordinate " +
                         std::to_string(i));
    }
    out[i] = (up - down) / (2.0 * eps);
  }
  return out;
}

GradCheckResult finite_diff_check(const ScalarFunction& f, std::span<const double> analytic_grad,
                                  std::span<const double> point, double eps) {
  if (analytic_grad.size() != point.size()) {
    throw ContractError("finite_diff_check: gradient has " + std::to_string(analytic_grad.size()) +
                        " entries for a point of " + std::to_string(point.size()));
  }
  const std::vector<double> numeric = numeric_gradient(f, point, eps);
  GradCheckResult result;
  for (std::size_t i = 0; i < numeric.size(); ++i) {
    const double a = analytic_grad[i];
    const double n = numeric[i];
    const double denom = std::max({std::abs(a), std::abs(n), 1e-8});
    const double err = std::abs(a - n) / denom;
    if (i == 0 || err > result.max_relative_error) {
      result.max_relative_error = err;
      result.worst_index = i;
      result.analytic_at_worst = a;
      result.numeric_at_worst = n;
    }
  }
  return result;
}

}  // namespace mvam::numerics
