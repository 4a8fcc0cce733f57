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

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace mvam::numerics {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double analytic_at_worst = 0.0;
  double numeric_at_worst = 0.0;
};

using ScalarFunction = std::function<double(std::span<const double>)>;

/// Compares an analytic gradient against central differences of f at point.
///
/// Per coordinate the error is |analytic - numeric| / max(|analytic|,
/// |numeric|, 1e-8); the maximum over coordinates is returned. eps must lie
/// in (0, 1e-2]. Throws NumericError naming the coordinate if f is not
/// finite at a perturbed point.
GradCheckResult finite_diff_check(const ScalarFunction& f, std::span<const double> analytic_grad,
                                  std::span<const double> point, double eps = 1e-5);

/// Central-difference gradient of f at point.
std::vector<double> numeric_gradient(const ScalarFunction& f, std::span<const double> point, double eps);

}  // namespace mvam::numerics
