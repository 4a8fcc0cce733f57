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

#include "mvam/training/optimizer.hpp"

#include <cmath>

#include "mvam/numerics/errors.hpp"

namespace mvam::training {

void Adam::step(const std::vector<numerics::Parameter<float>*>& params) {
  if (m_.empty()) {
    for (const auto* p : params) {
      m_.push_back(numerics::Matrix<float>::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(numerics::Matrix<float>::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (m_.size() != params.size()) throw ContractError("Adam::step: parameter list changed between steps");
  ++t_;
  const auto b1 = static_cast<float>(options_.beta1);
  const auto b2 = static_cast<float>(options_.beta2);
  const auto correction1 = static_cast<float>(1.0 - std::pow(options_.beta1, static_cast<double>(t_)));
  const auto correction2 = static_cast<float>(1.0 - std::pow(options_.beta2, static_cast<double>(t_)));
  const auto lr = static_cast<float>(options_.lr);
  const auto eps = static_cast<float>(options_.eps);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = *params[i];
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) {
      throw ContractError("Adam::step: gradient shape mismatch for " + p.name);
    }
    m_[i] = b1 * m_[i] + (1.0f - b1) * p.grad;
    v_[i] = b2 * v_[i] + (1.0f - b2) * p.grad.cwiseProduct(p.grad);
    if (lr == 0.0f) continue;
    p.value.array() -= lr * (m_[i].array() / correction1) / ((v_[i].array() / correction2).sqrt() + eps);
  }
}

void Adam::restore(std::int64_t steps, std::vector<numerics::Matrix<float>> m,
                   std::vector<numerics::Matrix<float>> v) {
  if (m.size() != v.size()) throw ContractError("Adam::restore: moment lists differ in length");
  t_ = steps;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace mvam::training
