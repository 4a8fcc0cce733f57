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

#include "mvam/numerics/primitives.hpp"

#include <algorithm>
#include <array>
#include <string>

#include "mvam/numerics/errors.hpp"

namespace mvam::numerics {

namespace {

constexpr std::array<std::string_view, 16> kPrimitives = {
    "matmul",  "add",     "sub",     "mul",   "sigmoid",   "tanh",      "softmax",     "max",
    "mean",    "concat",  "embedding", "dropout", "lstm_cell", "log_softmax", "nll", "sum",
};

}  // namespace

std::span<const std::string_view> required_primitives() { return kPrimitives; }

bool has_primitive(std::string_view name) {
  return std::find(kPrimitives.begin(), kPrimitives.end(), name) != kPrimitives.end();
}

void require_primitives(std::initializer_list<std::string_view> names) {
  for (std::string_view name : names) {
    if (!has_primitive(name)) {
      throw CapabilityError("numerics substrate does not provide primitive '" + std::string(name) + "'");
    }
  }
}

}  // namespace mvam::numerics
