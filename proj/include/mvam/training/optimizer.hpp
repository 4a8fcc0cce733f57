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

#include <cstdint>
#include <vector>

#include "mvam/numerics/graph.hpp"

namespace mvam::training {

/// Adam with bias correction. Moment buffers follow the order of the
/// parameter list passed to step().
class Adam {
 public:
  struct Options {
    double lr = 2e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  Adam() = default;
  explicit Adam(Options options) : options_(options) {}

  void set_lr(double lr) { options_.lr = lr; }
  const Options& options() const { return options_; }
  std::int64_t steps() const { return t_; }

  /// One update from the accumulated gradients. A zero learning rate leaves
  /// parameters bit-identical (moments still advance).
  void step(const std::vector<numerics::Parameter<float>*>& params);

  std::vector<numerics::Matrix<float>>& first_moments() { return m_; }
  std::vector<numerics::Matrix<float>>& second_moments() { return v_; }
  const std::vector<numerics::Matrix<float>>& first_moments() const { return m_; }
  const std::vector<numerics::Matrix<float>>& second_moments() const { return v_; }
  void restore(std::int64_t steps, std::vector<numerics::Matrix<float>> m, std::vector<numerics::Matrix<float>> v);

 private:
  Options options_;
  std::int64_t t_ = 0;
  std::vector<numerics::Matrix<float>> m_;
  std::vector<numerics::Matrix<float>> v_;
};

}  // namespace mvam::training
