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

#include "mvam/scenes/render.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <tuple>

#include "mvam/numerics/errors.hpp"

namespace mvam::scenes {

namespace {

// Offset frequencies; chosen so that distinct small offsets give clearly
// different codes (largest cosine between two offsets within +-8 is ~0.59).
constexpr std::array<std::array<double, 2>, kMaxContextPairs> kFrequencies = {{
    {0.415, -0.834},
    {-1.236, -0.081},
    {-2.920, -0.285},
    {0.146, -0.790},
    {0.243, 0.529},
    {0.271, -2.396},
}};

}  // namespace

void RenderConfig::validate() const {
  if (context_pairs < 0 || context_pairs > kMaxContextPairs) {
    throw ContractError("render: context_pairs must be in [0, " + std::to_string(kMaxContextPairs) + "]");
  }
  const int needed = kContextOffset + 2 * context_pairs;
  if (feat_dim < needed) {
    throw ContractError("render: feat_dim " + std::to_string(feat_dim) + " is below the " +
                        std::to_string(needed) + " channels the layout needs");
  }
  if (!(noise_std >= 0.0) || !(amplitude > 0.0) || !(context_weight >= 0.0) || !(tuple_weight >= 0.0)) {
    throw ContractError("render: noise_std, tuple_weight and context_weight must be >= 0, amplitude > 0");
  }
}

Eigen::VectorXd attribute_code(const SceneObject& o) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(kAttributeChannels);
  v(static_cast<int>(o.shape)) = 1.0;
  v(3 + static_cast<int>(o.color)) = 1.0;
  v(11 + static_cast<int>(o.size)) = 1.0;
  v(13 + static_cast<int>(o.material)) = 1.0;
  return v;
}

int tuple_index(const SceneObject& o) {
  const int shape_color = static_cast<int>(o.shape) * kColorCount + static_cast<int>(o.color);
  return (shape_color * kSizeCount + static_cast<int>(o.size)) * kMaterialCount + static_cast<int>(o.material);
}

encoder::FeatureGrid render(const Scene& scene, const GridSpec& grid, const RenderConfig& config, Rng& rng) {
  config.validate();
  encoder::FeatureGrid out(grid.width, grid.height, config.feat_dim);
  std::vector<bool> occupied(static_cast<std::size_t>(grid.cells()), false);
  for (const SceneObject& o : scene) {
    if (!grid.contains(o.x, o.y)) throw ContractError("render: object outside the grid");
    const int cell = out.cell_index(o.x, o.y);
    if (occupied[static_cast<std::size_t>(cell)]) throw ContractError("render: two objects share a cell");
    occupied[static_cast<std::size_t>(cell)] = true;

    Eigen::RowVectorXd v = Eigen::RowVectorXd::Zero(config.feat_dim);
    v.head(kAttributeChannels) = attribute_code(o).transpose();
    v(kTupleOffset + tuple_index(o)) = config.tuple_weight;
    if (config.context_pairs > 0 && scene.size() > 1) {
      // Nearest other object; ties broken on the offset itself so the result
      // does not depend on object order and is translation invariant.
      std::tuple<int, int, int> best{std::numeric_limits<int>::max(), 0, 0};
      for (const SceneObject& other : scene) {
        if (&other == &o) continue;
        const int dx = other.x - o.x;
        const int dy = other.y - o.y;
        best = std::min(best, std::tuple<int, int, int>{dx * dx + dy * dy, dy, dx});
      }
      const double dy = std::get<1>(best);
      const double dx = std::get<2>(best);
      const double norm = config.context_weight / std::sqrt(static_cast<double>(config.context_pairs));
      for (int k = 0; k < config.context_pairs; ++k) {
        const double phase = kFrequencies[static_cast<std::size_t>(k)][0] * dx +
                             kFrequencies[static_cast<std::size_t>(k)][1] * dy;
        v(kContextOffset + 2 * k) = norm * std::cos(phase);
        v(kContextOffset + 2 * k + 1) = norm * std::sin(phase);
      }
    }
    out.cells.row(cell) = v * (config.amplitude / v.norm());
  }
  for (int cell = 0; cell < grid.cells(); ++cell) {
    if (!occupied[static_cast<std::size_t>(cell)]) out.cells(cell, kBackgroundChannel) = config.amplitude;
  }
  if (config.noise_std > 0.0) {
    for (Eigen::Index r = 0; r < out.cells.rows(); ++r) {
      for (Eigen::Index k = 0; k < out.cells.cols(); ++k) out.cells(r, k) += rng.normal(0.0, config.noise_std);
    }
  }
  return out;
}

}  // namespace mvam::scenes
