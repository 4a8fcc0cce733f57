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

#include "mvam/scenes/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "mvam/numerics/errors.hpp"
#include "mvam/scenes/captions.hpp"

namespace mvam::scenes {

using Json = nlohmann::ordered_json;

namespace {

constexpr int kMaxAttempts = 10000;

std::string indexed_id(const std::string& prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%05zu", i);
  return prefix + "-" + buf;
}

Json object_json(const SceneObject& o) {
  return Json{{"x", o.x},
              {"y", o.y},
              {"shape", name(o.shape)},
              {"color", name(o.color)},
              {"size", name(o.size)},
              {"material", name(o.material)}};
}

Json cells_json(const std::vector<Cell>& cells) {
  Json arr = Json::array();
  for (const Cell& c : cells) arr.push_back(Json::array({c.x, c.y}));
  return arr;
}

SceneObject parse_object(const Json& j) {
  SceneObject o;
  o.x = j.at("x").get<int>();
  o.y = j.at("y").get<int>();
  o.shape = parse_shape(j.at("shape").get<std::string>());
  o.color = parse_color(j.at("color").get<std::string>());
  o.size = parse_size(j.at("size").get<std::string>());
  o.material = parse_material(j.at("material").get<std::string>());
  return o;
}

Scene parse_scene(const Json& j) {
  Scene s;
  for (const Json& o : j) s.push_back(parse_object(o));
  return s;
}

std::vector<Cell> parse_cells(const Json& j) {
  std::vector<Cell> cells;
  for (const Json& c : j) {
    if (!c.is_array() || c.size() != 2) throw DataError("mask entries must be [x, y] pairs");
    cells.push_back({c[0].get<int>(), c[1].get<int>()});
  }
  return cells;
}

std::optional<int> find_at(const Scene& scene, int x, int y) {
  for (std::size_t i = 0; i < scene.size(); ++i) {
    if (scene[i].x == x && scene[i].y == y) return static_cast<int>(i);
  }
  return std::nullopt;
}

// Recovers target and described objects of a loaded change from its masks.
void recover_change(ScenePair& pair) {
  ChangeRecord& ch = pair.change;
  const int dx = pair.transform.dx;
  const int dy = pair.transform.dy;
  const auto unshift = [&](SceneObject o) {
    o.x -= dx;
    o.y -= dy;
    return o;
  };
  const auto fail = [&] { throw DataError("pair '" + pair.id + "': change masks do not match the scenes"); };
  switch (ch.type) {
    case ChangeType::kDistractor:
      return;
    case ChangeType::kAdd: {
      if (ch.mask_after.empty()) fail();
      const auto i = find_at(pair.after, ch.mask_after[0].x, ch.mask_after[0].y);
      if (!i) fail();
      ch.target = *i;
      ch.object_after = unshift(pair.after[static_cast<std::size_t>(*i)]);
      return;
    }
    default: {
      if (ch.mask_before.empty()) fail();
      const auto i = find_at(pair.before, ch.mask_before[0].x, ch.mask_before[0].y);
      if (!i) fail();
      ch.target = *i;
      ch.object_before = pair.before[static_cast<std::size_t>(*i)];
      if (ch.type != ChangeType::kDrop) {
        if (static_cast<std::size_t>(*i) >= pair.after.size()) fail();
        ch.object_after = unshift(pair.after[static_cast<std::size_t>(*i)]);
      }
      return;
    }
  }
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

ScenePair generate_pair(const GeneratorConfig& config, Rng& rng, std::string id, std::optional<ChangeType> forced) {
  if (config.refs_per_pair < 1) throw ContractError("generate_pair: refs_per_pair must be at least 1");
  if (config.max_shift < 0) throw ContractError("generate_pair: max_shift must be >= 0");
  const std::size_t type_count = config.include_distractors ? kAllChangeTypes.size() : kAllChangeTypes.size() - 1;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const ChangeType type = forced ? *forced : kAllChangeTypes[rng.uniform_int(type_count)];
    Scene before = sample_scene(rng, config.grid, config.min_objects, config.max_objects);
    auto changed = apply_change(before, type, rng, config.grid);
    if (!changed) continue;
    ViewpointTransform t;
    t.dx = static_cast<int>(rng.uniform_range(-config.max_shift, config.max_shift));
    t.dy = static_cast<int>(rng.uniform_range(-config.max_shift, config.max_shift));
    t.noise_std = config.noise_std;
    auto after = apply_viewpoint(changed->first, t, config.grid);
    if (!after) continue;
    ScenePair pair;
    pair.id = std::move(id);
    pair.before = std::move(before);
    pair.after = std::move(*after);
    pair.transform = t;
    pair.change = std::move(changed->second);
    for (Cell& c : pair.change.mask_after) {
      c.x += t.dx;
      c.y += t.dy;
    }
    pair.captions = caption_refs(pair.change, rng, config.refs_per_pair);
    return pair;
  }
  throw DataError("generate_pair: no admissible pair after " + std::to_string(kMaxAttempts) +
                  " attempts; check object counts and grid size");
}

std::vector<ScenePair> generate_pairs(std::size_t n, const GeneratorConfig& config, std::uint64_t seed,
                                      const std::vector<ChangeType>& forced, const std::string& id_prefix) {
  const Rng base(seed);
  std::vector<ScenePair> pairs;
  pairs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = base.derive(i);
    std::optional<ChangeType> type;
    if (!forced.empty()) type = forced[i % forced.size()];
    pairs.push_back(generate_pair(config, rng, indexed_id(id_prefix, i), type));
  }
  return pairs;
}

Dataset generate_dataset(std::size_t n, const SplitRatios& ratios, const GeneratorConfig& config,
                         std::uint64_t seed) {
  if (n < 1) throw ContractError("generate_dataset: n must be at least 1");
  if (ratios.train < 0.0 || ratios.val < 0.0 || ratios.train + ratios.val > 1.0 + 1e-12) {
    throw ContractError("generate_dataset: split ratios must be nonnegative and sum to at most 1");
  }
  // A small epsilon keeps e.g. 100 * 0.1 from flooring to 9 on rounding.
  const auto n_train = std::min(n, static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratios.train + 1e-9)));
  const auto n_val =
      std::min(n - n_train, static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratios.val + 1e-9)));
  const Rng base(seed);
  Dataset out;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = base.derive(i);
    if (i < n_train) {
      out.train.push_back(generate_pair(config, rng, indexed_id("train", i)));
    } else if (i < n_train + n_val) {
      out.val.push_back(generate_pair(config, rng, indexed_id("val", i - n_train)));
    } else {
      out.test.push_back(generate_pair(config, rng, indexed_id("test", i - n_train - n_val)));
    }
  }
  return out;
}

void validate_pair(const ScenePair& pair, const GridSpec& grid) {
  const auto fail = [&](const std::string& what) { throw DataError("pair '" + pair.id + "': " + what); };
  for (const Scene* s : {&pair.before, &pair.after}) {
    std::vector<bool> occ(static_cast<std::size_t>(grid.cells()), false);
    for (const SceneObject& o : *s) {
      if (!grid.contains(o.x, o.y)) fail("object outside the grid");
      const auto cell = static_cast<std::size_t>(o.y * grid.width + o.x);
      if (occ[cell]) fail("two objects share a cell");
      occ[cell] = true;
    }
  }
  for (const auto* mask : {&pair.change.mask_before, &pair.change.mask_after}) {
    for (const Cell& c : *mask) {
      if (!grid.contains(c.x, c.y)) fail("mask cell outside the grid");
    }
  }
  if (pair.captions.empty()) fail("no captions");
  const bool di = pair.change.type == ChangeType::kDistractor;
  const bool mask_empty = pair.change.mask_before.empty() && pair.change.mask_after.empty();
  if (di != mask_empty) fail(di ? "distractor with a nonempty mask" : "change with an empty mask");
  if (pair.change.type == ChangeType::kMove &&
      (pair.change.mask_before.empty() || pair.change.mask_after.empty())) {
    fail("move mask must cover source and destination");
  }
  for (const std::string& c : pair.captions) {
    if (di != is_no_change_caption(c)) fail("caption '" + c + "' does not match the change type");
  }
  const auto rebuilt = apply_viewpoint(replay_change(pair.before, pair.change), pair.transform, grid);
  if (!rebuilt || *rebuilt != pair.after) fail("after scene is not the changed, shifted before scene");
}

std::string to_json_line(const ScenePair& pair) {
  Json before = Json::array();
  for (const SceneObject& o : pair.before) before.push_back(object_json(o));
  Json after = Json::array();
  for (const SceneObject& o : pair.after) after.push_back(object_json(o));
  Json j;
  j["id"] = pair.id;
  j["scene_before"] = std::move(before);
  j["scene_after"] = std::move(after);
  j["viewpoint"] = Json{{"dx", pair.transform.dx}, {"dy", pair.transform.dy}};
  j["change"] = Json{{"type", code(pair.change.type)},
                     {"mask_before", cells_json(pair.change.mask_before)},
                     {"mask_after", cells_json(pair.change.mask_after)}};
  j["captions"] = pair.captions;
  return j.dump();
}

ScenePair from_json_line(std::string_view line, const GridSpec& grid, double noise_std) {
  ScenePair pair;
  try {
    const Json j = Json::parse(line);
    pair.id = j.at("id").get<std::string>();
    pair.before = parse_scene(j.at("scene_before"));
    pair.after = parse_scene(j.at("scene_after"));
    pair.transform.dx = j.at("viewpoint").at("dx").get<int>();
    pair.transform.dy = j.at("viewpoint").at("dy").get<int>();
    pair.transform.noise_std = noise_std;
    const Json& ch = j.at("change");
    pair.change.type = parse_change_type(ch.at("type").get<std::string>());
    pair.change.mask_before = parse_cells(ch.at("mask_before"));
    pair.change.mask_after = parse_cells(ch.at("mask_after"));
    pair.captions = j.at("captions").get<std::vector<std::string>>();
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed dataset line: ") + e.what());
  }
  recover_change(pair);
  validate_pair(pair, grid);
  return pair;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<ScenePair>& pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  for (const ScenePair& p : pairs) out << to_json_line(p) << '\n';
  if (!out) throw DataError("write failed for '" + path.string() + "'");
}

std::vector<ScenePair> read_jsonl(const std::filesystem::path& path, const GridSpec& grid, double noise_std) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::vector<ScenePair> pairs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      pairs.push_back(from_json_line(line, grid, noise_std));
    } catch (const DataError& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return pairs;
}

void write_dataset(const std::filesystem::path& dir, const Dataset& dataset) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create '" + dir.string() + "': " + ec.message());
  write_jsonl(dir / "train.jsonl", dataset.train);
  write_jsonl(dir / "val.jsonl", dataset.val);
  write_jsonl(dir / "test.jsonl", dataset.test);
}

PairFeatures render_pair(const ScenePair& pair, const GridSpec& grid, const RenderConfig& config,
                         std::uint64_t seed) {
  RenderConfig rc = config;
  rc.noise_std = pair.transform.noise_std;
  Rng rng = Rng(seed).derive(fnv1a(pair.id));
  PairFeatures f;
  f.before = render(pair.before, grid, rc, rng);
  f.after = render(pair.after, grid, rc, rng);
  return f;
}

}  // namespace mvam::scenes
