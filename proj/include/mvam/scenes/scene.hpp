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

// Symbolic grid scenes, the six change types and viewpoint shifts.

#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mvam/numerics/rng.hpp"

namespace mvam::scenes {

using numerics::Rng;

enum class Shape { kCube, kSphere, kCylinder };
enum class Color { kGray, kRed, kBlue, kGreen, kBrown, kPurple, kCyan, kYellow };
enum class Size { kSmall, kLarge };
enum class Material { kRubber, kMetal };

inline constexpr int kShapeCount = 3;
inline constexpr int kColorCount = 8;
inline constexpr int kSizeCount = 2;
inline constexpr int kMaterialCount = 2;

std::string_view name(Shape v);
std::string_view name(Color v);
std::string_view name(Size v);
std::string_view name(Material v);
Shape parse_shape(std::string_view s);
Color parse_color(std::string_view s);
Size parse_size(std::string_view s);
Material parse_material(std::string_view s);

struct SceneObject {
  int x = 0;
  int y = 0;
  Shape shape = Shape::kCube;
  Color color = Color::kGray;
  Size size = Size::kSmall;
  Material material = Material::kRubber;

  bool operator==(const SceneObject&) const = default;
  bool same_attributes(const SceneObject& o) const {
    return shape == o.shape && color == o.color && size == o.size && material == o.material;
  }
};

using Scene = std::vector<SceneObject>;

struct GridSpec {
  int width = 8;
  int height = 8;

  int cells() const { return width * height; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
};

struct Cell {
  int x = 0;
  int y = 0;
  bool operator==(const Cell&) const = default;
};

/// Color, Texture (material), Add, Drop, Move, Distractor (viewpoint only).
enum class ChangeType { kColor, kTexture, kAdd, kDrop, kMove, kDistractor };

inline constexpr std::array<ChangeType, 6> kAllChangeTypes = {
    ChangeType::kColor, ChangeType::kTexture, ChangeType::kAdd,
    ChangeType::kDrop,  ChangeType::kMove,    ChangeType::kDistractor};

/// "C", "T", "A", "D", "M", "DI".
std::string_view code(ChangeType type);
ChangeType parse_change_type(std::string_view code);

struct ChangeRecord {
  ChangeType type = ChangeType::kDistractor;
  /// Index of the changed object in the before scene (C, T, D, M) or in the
  /// after scene (A). Absent for DI.
  std::optional<int> target;
  /// Described object before and after the change (absent where it does not
  /// exist, e.g. before an Add).
  std::optional<SceneObject> object_before;
  std::optional<SceneObject> object_after;
  /// Changed cells, before-grid and after-grid coordinates respectively.
  std::vector<Cell> mask_before;
  std::vector<Cell> mask_after;
};

/// Rigid integer translation of the camera, plus feature noise level used
/// when rendering the after image.
struct ViewpointTransform {
  int dx = 0;
  int dy = 0;
  double noise_std = 0.0;
};

/// Uniform object count in [min_objects, max_objects], distinct uniform
/// cells, uniform attributes. Throws ContractError for infeasible ranges.
Scene sample_scene(Rng& rng, const GridSpec& grid, int min_objects, int max_objects);

/// Applies one change of the given type in place of the scene's own
/// coordinates. Returns nullopt when the scene does not admit the change
/// (Drop/Move/Color/Texture on an empty scene, Add/Move on a full grid).
std::optional<std::pair<Scene, ChangeRecord>> apply_change(const Scene& scene, ChangeType type, Rng& rng,
                                                           const GridSpec& grid);

/// Replays a recorded change (uses target/object_after, no randomness).
Scene replay_change(const Scene& scene, const ChangeRecord& change);

/// Translates every object by (dx, dy); nullopt if any object leaves the grid.
std::optional<Scene> apply_viewpoint(const Scene& scene, const ViewpointTransform& t, const GridSpec& grid);

}  // namespace mvam::scenes
