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

// Symbolic scene -> feature grid.
//
// Channel layout:
//   [0, 3)      shape one-hot
//   [3, 11)     color one-hot
//   [11, 13)    size one-hot
//   [13, 15)    material one-hot
//   [15, 111)   one-hot of the full (shape, color, size, material) tuple,
//               weight `tuple_weight`
//   111         background (set on empty cells only)
//   [112, 112 + 2K)  neighbour context: K (cos, sin) pairs of the offset to
//                    the nearest other object, weight `context_weight`
//   rest        zero before noise
//
// Every clean cell vector is rescaled to norm `amplitude`, so each cell's
// self-similarity is the same whether it holds an object or not.

#pragma once

#include "mvam/encoder/feature_grid.hpp"
#include "mvam/numerics/rng.hpp"
#include "mvam/scenes/scene.hpp"

namespace mvam::scenes {

inline constexpr int kAttributeChannels = 15;
inline constexpr int kTupleOffset = 15;
inline constexpr int kTupleChannels = kShapeCount * kColorCount * kSizeCount * kMaterialCount;
inline constexpr int kBackgroundChannel = kTupleOffset + kTupleChannels;
inline constexpr int kContextOffset = kBackgroundChannel + 1;
inline constexpr int kMaxContextPairs = 6;

struct RenderConfig {
  int feat_dim = 128;
  double noise_std = 0.05;
  double amplitude = 24.0;
  double tuple_weight = 1.4142135623730951;
  int context_pairs = kMaxContextPairs;
  double context_weight = 2.0;

  /// Throws ContractError if feat_dim cannot hold the layout.
  void validate() const;
};

/// Clean (noise-free, unscaled) encoding of one object's attributes,
/// kAttributeChannels wide.
Eigen::VectorXd attribute_code(const SceneObject& object);

/// Index of the object's attribute tuple in [0, kTupleChannels).
int tuple_index(const SceneObject& object);

/// Renders the scene; noise is drawn from rng in cell-major, channel-minor
/// order, so the result is a pure function of (scene, config, rng state).
encoder::FeatureGrid render(const Scene& scene, const GridSpec& grid, const RenderConfig& config, Rng& rng);

}  // namespace mvam::scenes
