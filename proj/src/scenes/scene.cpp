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

#include "mvam/scenes/scene.hpp"

#include <algorithm>
#include <string>

#include "mvam/numerics/errors.hpp"

namespace mvam::scenes {

namespace {

constexpr std::array<std::string_view, kShapeCount> kShapeNames = {"cube", "sphere", "cylinder"};
constexpr std::array<std::string_view, kColorCount> kColorNames = {"gray",   "red",    "blue", "green",
                                                                   "brown", "purple", "cyan", "yellow"};
constexpr std::array<std::string_view, kSizeCount> kSizeNames = {"small", "large"};
constexpr std::array<std::string_view, kMaterialCount> kMaterialNames = {"rubber", "metal"};
constexpr std::array<std::string_view, 6> kChangeCodes = {"C", "T", "A", "D", "M", "DI"};

template <typename Enum, std::size_t N>
Enum parse(std::string_view s, const std::array<std::string_view, N>& names, const char* what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return static_cast<Enum>(i);
  }
  throw DataError(std::string("unknown ") + what + " '" + std::string(s) + "'");
}

std::vector<bool> occupancy(const Scene& scene, const GridSpec& grid) {
  std::vector<bool> occ(static_cast<std::size_t>(grid.cells()), false);
  for (const SceneObject& o : scene) occ[static_cast<std::size_t>(o.y * grid.width + o.x)] = true;
  return occ;
}

std::vector<Cell> free_cells(const Scene& scene, const GridSpec& grid) {
  const auto occ = occupancy(scene, grid);
  std::vector<Cell> out;
  for (int y = 0; y < grid.height; ++y) {
    for (int x = 0; x < grid.width; ++x) {
      if (!occ[static_cast<std::size_t>(y * grid.width + x)]) out.push_back({x, y});
    }
  }
  return out;
}

SceneObject random_attributes(Rng& rng, int x, int y) {
  SceneObject o;
  o.x = x;
  o.y = y;
  o.shape = static_cast<Shape>(rng.uniform_int(kShapeCount));
  o.color = static_cast<Color>(rng.uniform_int(kColorCount));
  o.size = static_cast<Size>(rng.uniform_int(kSizeCount));
  o.material = static_cast<Material>(rng.uniform_int(kMaterialCount));
  return o;
}

}  // namespace

std::string_view name(Shape v) { return kShapeNames[static_cast<std::size_t>(v)]; }
std::string_view name(Color v) { return kColorNames[static_cast<std::size_t>(v)]; }
std::string_view name(Size v) { return kSizeNames[static_cast<std::size_t>(v)]; }
std::string_view name(Material v) { return kMaterialNames[static_cast<std::size_t>(v)]; }
Shape parse_shape(std::string_view s) { return parse<Shape>(s, kShapeNames, "shape"); }
Color parse_color(std::string_view s) { return parse<Color>(s, kColorNames, "color"); }
Size parse_size(std::string_view s) { return parse<Size>(s, kSizeNames, "size"); }
Material parse_material(std::string_view s) { return parse<Material>(s, kMaterialNames, "material"); }

std::string_view code(ChangeType type) { return kChangeCodes[static_cast<std::size_t>(type)]; }
ChangeType parse_change_type(std::string_view c) { return parse<ChangeType>(c, kChangeCodes, "change type"); }

Scene sample_scene(Rng& rng, const GridSpec& grid, int min_objects, int max_objects) {
  if (grid.width < 1 || grid.height < 1) throw ContractError("sample_scene: grid extents must be positive");
  if (min_objects < 0 || min_objects > max_objects || max_objects > grid.cells()) {
    throw ContractError("sample_scene: object count range [" + std::to_string(min_objects) + ", " +
                        std::to_string(max_objects) + "] is infeasible for " + std::to_string(grid.cells()) +
                        " cells");
  }
  const auto count = static_cast<int>(rng.uniform_range(min_objects, max_objects));
  std::vector<int> cells(static_cast<std::size_t>(grid.cells()));
  for (int i = 0; i < grid.cells(); ++i) cells[static_cast<std::size_t>(i)] = i;
  Scene scene;
  scene.reserve(static_cast<std::size_t>(count));
  // Partial Fisher-Yates: the first `count` slots become a uniform sample.
  for (int i = 0; i < count; ++i) {
    const auto j = i + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(grid.cells() - i)));
    std::swap(cells[static_cast<std::size_t>(i)], cells[static_cast<std::size_t>(j)]);
    const int cell = cells[static_cast<std::size_t>(i)];
    scene.push_back(random_attributes(rng, cell % grid.width, cell / grid.width));
  }
  return scene;
}

std::optional<std::pair<Scene, ChangeRecord>> apply_change(const Scene& scene, ChangeType type, Rng& rng,
                                                           const GridSpec& grid) {
  Scene out = scene;
  ChangeRecord rec;
  rec.type = type;
  const auto pick = [&] { return static_cast<int>(rng.uniform_int(scene.size())); };
  switch (type) {
    case ChangeType::kDistractor:
      break;
    case ChangeType::kColor: {
      if (scene.empty()) return std::nullopt;
      const int i = pick();
      SceneObject& o = out[static_cast<std::size_t>(i)];
      const auto shift = 1 + rng.uniform_int(kColorCount - 1);
      o.color = static_cast<Color>((static_cast<std::uint64_t>(o.color) + shift) % kColorCount);
      rec.target = i;
      rec.object_before = scene[static_cast<std::size_t>(i)];
      rec.object_after = o;
      rec.mask_before.push_back({o.x, o.y});
      rec.mask_after.push_back({o.x, o.y});
      break;
    }
    case ChangeType::kTexture: {
      if (scene.empty()) return std::nullopt;
      const int i = pick();
      SceneObject& o = out[static_cast<std::size_t>(i)];
      o.material = o.material == Material::kRubber ? Material::kMetal : Material::kRubber;
      rec.target = i;
      rec.object_before = scene[static_cast<std::size_t>(i)];
      rec.object_after = o;
      rec.mask_before.push_back({o.x, o.y});
      rec.mask_after.push_back({o.x, o.y});
      break;
    }
    case ChangeType::kAdd: {
      const auto cells = free_cells(scene, grid);
      if (cells.empty()) return std::nullopt;
      const Cell c = cells[rng.uniform_int(cells.size())];
      out.push_back(random_attributes(rng, c.x, c.y));
      rec.target = static_cast<int>(out.size()) - 1;
      rec.object_after = out.back();
      rec.mask_after.push_back(c);
      break;
    }
    case ChangeType::kDrop: {
      if (scene.empty()) return std::nullopt;
      const int i = pick();
      const SceneObject removed = scene[static_cast<std::size_t>(i)];
      out.erase(out.begin() + i);
      rec.target = i;
      rec.object_before = removed;
      rec.mask_before.push_back({removed.x, removed.y});
      break;
    }
    case ChangeType::kMove: {
      if (scene.empty()) return std::nullopt;
      const auto cells = free_cells(scene, grid);
      if (cells.empty()) return std::nullopt;
      const int i = pick();
      const Cell dest = cells[rng.uniform_int(cells.size())];
      SceneObject& o = out[static_cast<std::size_t>(i)];
      rec.mask_before.push_back({o.x, o.y});
      o.x = dest.x;
      o.y = dest.y;
      rec.target = i;
      rec.object_before = scene[static_cast<std::size_t>(i)];
      rec.object_after = o;
      rec.mask_after.push_back(dest);
      break;
    }
  }
  return std::make_pair(std::move(out), std::move(rec));
}

Scene replay_change(const Scene& scene, const ChangeRecord& change) {
  Scene out = scene;
  if (change.type == ChangeType::kDistractor) return out;
  if (!change.target) throw ContractError("replay_change: change record has no target");
  const auto i = static_cast<std::size_t>(*change.target);
  switch (change.type) {
    case ChangeType::kColor:
    case ChangeType::kTexture:
    case ChangeType::kMove:
      if (i >= out.size() || !change.object_after) throw ContractError("replay_change: bad target");
      out[i] = *change.object_after;
      break;
    case ChangeType::kAdd:
      if (!change.object_after) throw ContractError("replay_change: add without object");
      out.insert(out.begin() + static_cast<std::ptrdiff_t>(std::min(i, out.size())), *change.object_after);
      break;
    case ChangeType::kDrop:
      if (i >= out.size()) throw ContractError("replay_change: bad target");
      out.erase(out.begin() + static_cast<std::ptrdiff_t>(i));
      break;
    case ChangeType::kDistractor:
      break;
  }
  return out;
}

std::optional<Scene> apply_viewpoint(const Scene& scene, const ViewpointTransform& t, const GridSpec& grid) {
  Scene out = scene;
  for (SceneObject& o : out) {
    o.x += t.dx;
    o.y += t.dy;
    if (!grid.contains(o.x, o.y)) return std::nullopt;
  }
  return out;
}

}  // namespace mvam::scenes
