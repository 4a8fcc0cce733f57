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


#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include <doctest.h>

#include "mvam/metrics/caption_metrics.hpp"
#include "mvam/numerics/errors.hpp"
#include "mvam/scenes/captions.hpp"
#include "mvam/scenes/dataset.hpp"
#include "mvam/scenes/render.hpp"
#include "mvam/scenes/scene.hpp"

using namespace mvam;
using namespace mvam::scenes;

namespace {

const GridSpec kGrid{8, 8};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("mvam_scenes_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

// Attribute tuples of a scene as a sorted multiset.
std::vector<int> tuples(const Scene& s) {
  std::vector<int> out;
  for (const auto& o : s) out.push_back(tuple_index(o));
  std::sort(out.begin(), out.end());
  return out;
}

bool within_three_sigma(const std::vector<int>& counts, int total) {
  const double p = 1.0 / static_cast<double>(counts.size());
  const double mean = total * p;
  const double sigma = std::sqrt(total * p * (1.0 - p));
  return std::all_of(counts.begin(), counts.end(), [&](int c) { return std::abs(c - mean) <= 3.0 * sigma; });
}

}  // namespace

TEST_CASE("sample_scene: empty range, determinism and infeasible ranges") {
  Rng rng(1);
  CHECK(sample_scene(rng, kGrid, 0, 0).empty());
  Rng a(9), b(9);
  const Scene s1 = sample_scene(a, kGrid, 6, 6);
  CHECK(s1.size() == 6);
  CHECK(s1 == sample_scene(b, kGrid, 6, 6));
  std::set<std::pair<int, int>> cells;
  for (const auto& o : s1) {
    CHECK(kGrid.contains(o.x, o.y));
    cells.insert({o.x, o.y});
  }
  CHECK(cells.size() == 6);
  CHECK_THROWS_AS(sample_scene(rng, kGrid, 5, 3), ContractError);
  CHECK_THROWS_AS(sample_scene(rng, GridSpec{2, 2}, 3, 5), ContractError);
  CHECK_THROWS_AS(sample_scene(rng, kGrid, -1, 2), ContractError);
}

TEST_CASE("sample_scene: attribute marginals are uniform over 10^4 draws") {
  Rng rng(2024);
  constexpr int kDraws = 10000;
  std::vector<int> shape(kShapeCount), color(kColorCount), size(kSizeCount), material(kMaterialCount);
  std::vector<int> count(4);
  for (int i = 0; i < kDraws; ++i) {
    const Scene one = sample_scene(rng, kGrid, 1, 1);
    ++shape[static_cast<int>(one[0].shape)];
    ++color[static_cast<int>(one[0].color)];
    ++size[static_cast<int>(one[0].size)];
    ++material[static_cast<int>(one[0].material)];
    ++count[sample_scene(rng, kGrid, 3, 6).size() - 3];
  }
  CHECK(within_three_sigma(shape, kDraws));
  CHECK(within_three_sigma(color, kDraws));
  CHECK(within_three_sigma(size, kDraws));
  CHECK(within_three_sigma(material, kDraws));
  CHECK(within_three_sigma(count, kDraws));
}

TEST_CASE("apply_change: distractor, drop and move") {
  Rng rng(3);
  const Scene scene = sample_scene(rng, kGrid, 4, 4);
  const auto di = apply_change(scene, ChangeType::kDistractor, rng, kGrid);
  REQUIRE(di.has_value());
  CHECK(di->first == scene);
  CHECK(di->second.mask_before.empty());
  CHECK(di->second.mask_after.empty());
  CHECK_FALSE(di->second.target.has_value());

  const Scene single = {SceneObject{2, 5, Shape::kSphere, Color::kRed, Size::kLarge, Material::kMetal}};
  const auto drop = apply_change(single, ChangeType::kDrop, rng, kGrid);
  REQUIRE(drop.has_value());
  CHECK(drop->first.empty());
  CHECK(drop->second.mask_before == std::vector<Cell>{{2, 5}});
  CHECK(drop->second.mask_after.empty());
  CHECK_FALSE(apply_change(Scene{}, ChangeType::kDrop, rng, kGrid).has_value());
  CHECK_FALSE(apply_change(Scene{}, ChangeType::kMove, rng, kGrid).has_value());

  for (int trial = 0; trial < 200; ++trial) {
    const Scene s = sample_scene(rng, kGrid, 1, 6);
    const auto moved = apply_change(s, ChangeType::kMove, rng, kGrid);
    REQUIRE(moved.has_value());
    const Scene& after = moved->first;
    CHECK(tuples(after) == tuples(s));
    REQUIRE(after.size() == s.size());
    int changed = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!(after[i] == s[i])) {
        ++changed;
        CHECK(after[i].same_attributes(s[i]));
        CHECK(moved->second.mask_before == std::vector<Cell>{{s[i].x, s[i].y}});
        CHECK(moved->second.mask_after == std::vector<Cell>{{after[i].x, after[i].y}});
      }
    }
    CHECK(changed == 1);
  }
}

TEST_CASE("apply_change: color, texture and add touch exactly one object") {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const Scene s = sample_scene(rng, kGrid, 2, 6);
    const auto c = apply_change(s, ChangeType::kColor, rng, kGrid);
    REQUIRE(c.has_value());
    const int t = *c->second.target;
    CHECK(c->first[t].color != s[t].color);
    CHECK(c->first[t].shape == s[t].shape);
    CHECK(c->first[t].material == s[t].material);

    const auto m = apply_change(s, ChangeType::kTexture, rng, kGrid);
    REQUIRE(m.has_value());
    CHECK(m->first[*m->second.target].material != s[*m->second.target].material);

    const auto a = apply_change(s, ChangeType::kAdd, rng, kGrid);
    REQUIRE(a.has_value());
    CHECK(a->first.size() == s.size() + 1);
    CHECK(a->second.mask_before.empty());
    CHECK(a->second.mask_after.size() == 1);
    CHECK(replay_change(s, a->second) == a->first);
  }
}

TEST_CASE("apply_viewpoint: identity, inverse, rigidity and bounds") {
  Rng rng(5);
  const Scene s = sample_scene(rng, GridSpec{8, 8}, 5, 5);
  CHECK(*apply_viewpoint(s, {0, 0, 0.0}, kGrid) == s);
  const Scene wide = {SceneObject{3, 3}, SceneObject{5, 4}, SceneObject{4, 6}};
  const auto there = apply_viewpoint(wide, {1, 0, 0.0}, kGrid);
  REQUIRE(there.has_value());
  CHECK(*apply_viewpoint(*there, {-1, 0, 0.0}, kGrid) == wide);
  const auto shifted = apply_viewpoint(wide, {-2, 1, 0.0}, kGrid);
  REQUIRE(shifted.has_value());
  for (std::size_t i = 0; i < wide.size(); ++i) {
    for (std::size_t j = 0; j < wide.size(); ++j) {
      CHECK((*shifted)[i].x - (*shifted)[j].x == wide[i].x - wide[j].x);
      CHECK((*shifted)[i].y - (*shifted)[j].y == wide[i].y - wide[j].y);
    }
  }
  CHECK_FALSE(apply_viewpoint(Scene{SceneObject{7, 0}}, {1, 0, 0.0}, kGrid).has_value());
}

TEST_CASE("render: empty scene, injectivity and translation") {
  const RenderConfig clean{.noise_std = 0.0};
  Rng rng(6);
  const auto empty = render(Scene{}, kGrid, clean, rng);
  for (int cell = 0; cell < kGrid.cells(); ++cell) {
    for (int k = 0; k < clean.feat_dim; ++k) {
      CHECK(empty.cells(cell, k) == (k == kBackgroundChannel ? clean.amplitude : 0.0));
    }
  }

  std::set<std::vector<double>> seen;
  for (int sh = 0; sh < kShapeCount; ++sh) {
    for (int co = 0; co < kColorCount; ++co) {
      for (int si = 0; si < kSizeCount; ++si) {
        for (int ma = 0; ma < kMaterialCount; ++ma) {
          const SceneObject o{0, 0, Shape(sh), Color(co), Size(si), Material(ma)};
          const auto g = render(Scene{o}, kGrid, clean, rng);
          seen.insert(std::vector<double>(g.cells.row(0).begin(), g.cells.row(0).end()));
          const Eigen::VectorXd code = attribute_code(o);
          CHECK(code.sum() == 4.0);
        }
      }
    }
  }
  CHECK(seen.size() == static_cast<std::size_t>(kTupleChannels));

  const Scene s = {SceneObject{2, 2, Shape::kCube, Color::kRed}, SceneObject{4, 3, Shape::kSphere, Color::kBlue},
                   SceneObject{3, 5, Shape::kCylinder, Color::kCyan, Size::kLarge, Material::kMetal}};
  const int dx = 2, dy = -1;
  const Scene moved = *apply_viewpoint(s, {dx, dy, 0.0}, kGrid);
  const auto a = render(s, kGrid, clean, rng);
  const auto b = render(moved, kGrid, clean, rng);
  for (int y = 0; y < kGrid.height; ++y) {
    for (int x = 0; x < kGrid.width; ++x) {
      if (!kGrid.contains(x + dx, y + dy)) continue;
      CHECK(a.cells.row(a.cell_index(x, y)) == b.cells.row(b.cell_index(x + dx, y + dy)));
    }
  }
}

TEST_CASE("render: noise is a pure function of the rng state") {
  const RenderConfig noisy{};
  Rng a(11), b(11);
  const Scene s = {SceneObject{1, 1}};
  CHECK(render(s, kGrid, noisy, a).cells == render(s, kGrid, noisy, b).cells);
  RenderConfig tiny{.feat_dim = 16};
  CHECK_THROWS_AS(tiny.validate(), ContractError);
}

TEST_CASE("captions: templates, slots and the closed vocabulary") {
  for (ChangeType t : kAllChangeTypes) CHECK(caption_templates(t).size() >= 3);
  ChangeRecord di;
  Rng rng(7);
  for (const auto& c : caption_refs(di, rng, 3)) CHECK(is_no_change_caption(c));

  ChangeRecord color;
  color.type = ChangeType::kColor;
  color.target = 0;
  color.object_before = SceneObject{0, 0, Shape::kCube, Color::kRed};
  color.object_after = SceneObject{0, 0, Shape::kCube, Color::kBlue};
  for (const auto& c : caption_refs(color, rng, 5)) {
    const auto toks = metrics::tokenize(c);
    CHECK(std::count(toks.begin(), toks.end(), "red") == 1);
    CHECK(std::count(toks.begin(), toks.end(), "blue") == 1);
    CHECK(std::count(toks.begin(), toks.end(), "cube") == 1);
  }
  CHECK_THROWS_AS(caption_refs(color, rng, 0), ContractError);
  const auto vocab = caption_vocabulary();
  CHECK(vocab.size() >= 40);
  CHECK(vocab.size() <= 80);
}

TEST_CASE("captions: 10^4 generated pairs never produce an unknown token") {
  GeneratorConfig config;
  const auto vocab = caption_vocabulary();
  const auto pairs = generate_pairs(10000, config, 31);
  std::size_t unknown = 0;
  for (const auto& p : pairs) {
    for (const auto& c : p.captions) {
      const auto ids = vocab.encode(metrics::tokenize(c));
      unknown += static_cast<std::size_t>(std::count(ids.begin(), ids.end(), decoder::Vocabulary::kUnk));
    }
  }
  CHECK(unknown == 0);
}

TEST_CASE("generate_pairs: forced types and pair invariants") {
  GeneratorConfig config;
  const std::vector<ChangeType> all(kAllChangeTypes.begin(), kAllChangeTypes.end());
  const auto six = generate_pairs(6, config, 5, all);
  std::set<std::string> categories;
  for (const auto& p : six) categories.insert(std::string(code(p.change.type)));
  CHECK(categories == std::set<std::string>{"C", "T", "A", "D", "M", "DI"});

  for (const auto& p : generate_pairs(600, config, 6)) {
    CAPTURE(p.id);
    CHECK_NOTHROW(validate_pair(p, config.grid));
    const Scene rebuilt = *apply_viewpoint(replay_change(p.before, p.change), p.transform, config.grid);
    CHECK(rebuilt == p.after);
    CHECK(std::abs(p.transform.dx) <= config.max_shift);
    CHECK(std::abs(p.transform.dy) <= config.max_shift);
    CHECK(static_cast<int>(p.captions.size()) == config.refs_per_pair);
    if (p.change.type == ChangeType::kDistractor) {
      CHECK(p.change.mask_before.empty());
      CHECK(p.change.mask_after.empty());
      for (const auto& c : p.captions) CHECK(is_no_change_caption(c));
    } else {
      CHECK(p.change.mask_before.size() + p.change.mask_after.size() > 0);
      for (const auto& c : p.captions) CHECK_FALSE(is_no_change_caption(c));
    }
  }

  GeneratorConfig no_di = config;
  no_di.include_distractors = false;
  for (const auto& p : generate_pairs(300, no_di, 7)) CHECK(p.change.type != ChangeType::kDistractor);
}

TEST_CASE("generate_dataset: split arithmetic, ids and determinism") {
  GeneratorConfig config;
  const auto d = generate_dataset(100, SplitRatios{0.8, 0.1}, config, 8);
  CHECK(d.train.size() == 80);
  CHECK(d.val.size() == 10);
  CHECK(d.test.size() == 10);
  CHECK(d.train.front().id == "train-00000");
  CHECK(d.test.back().id == "test-00009");
  CHECK_THROWS_AS(generate_dataset(0, SplitRatios{}, config, 8), ContractError);
  CHECK_THROWS_AS(generate_dataset(10, SplitRatios{0.9, 0.2}, config, 8), ContractError);

  const auto one = scratch("det1");
  const auto two = scratch("det2");
  write_dataset(one, generate_dataset(60, SplitRatios{}, config, 9));
  write_dataset(two, generate_dataset(60, SplitRatios{}, config, 9));
  for (const char* f : {"train.jsonl", "val.jsonl", "test.jsonl"}) {
    CHECK(std::filesystem::exists(one / f));
    CHECK(slurp(one / f) == slurp(two / f));
  }
  std::filesystem::remove_all(one);
  std::filesystem::remove_all(two);
}

TEST_CASE("jsonl: round trip and malformed input") {
  GeneratorConfig config;
  const auto pairs = generate_pairs(120, config, 10);
  for (const auto& p : pairs) {
    const std::string line = to_json_line(p);
    const ScenePair back = from_json_line(line, config.grid, config.noise_std);
    CHECK(back.id == p.id);
    CHECK(back.before == p.before);
    CHECK(back.after == p.after);
    CHECK(back.transform.dx == p.transform.dx);
    CHECK(back.transform.dy == p.transform.dy);
    CHECK(back.change.type == p.change.type);
    CHECK(back.change.mask_before == p.change.mask_before);
    CHECK(back.change.mask_after == p.change.mask_after);
    CHECK(back.change.target == p.change.target);
    CHECK(back.captions == p.captions);
    CHECK(to_json_line(back) == line);
  }
  const std::string first = to_json_line(pairs.front());
  for (const char* key : {"\"id\"", "\"scene_before\"", "\"scene_after\"", "\"viewpoint\"", "\"change\"",
                          "\"mask_before\"", "\"mask_after\"", "\"captions\""}) {
    CHECK(first.find(key) != std::string::npos);
  }
  CHECK_THROWS_AS(from_json_line("{not json", config.grid, 0.0), DataError);
  CHECK_THROWS_AS(from_json_line("{\"id\":\"x\"}", config.grid, 0.0), DataError);

  const auto dir = scratch("io");
  std::filesystem::create_directories(dir);
  write_jsonl(dir / "p.jsonl", pairs);
  CHECK(read_jsonl(dir / "p.jsonl", config.grid, config.noise_std).size() == pairs.size());
  try {
    read_jsonl(dir / "missing.jsonl", config.grid, 0.0);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("missing.jsonl") != std::string::npos);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("render_pair: features depend on the pair, not on load order") {
  GeneratorConfig config;
  const auto pairs = generate_pairs(3, config, 12);
  const RenderConfig rc;
  const auto x = render_pair(pairs[1], config.grid, rc, 4);
  const auto y = render_pair(pairs[1], config.grid, rc, 4);
  CHECK(x.before.cells == y.before.cells);
  CHECK(x.after.cells == y.after.cells);
  CHECK(render_pair(pairs[2], config.grid, rc, 4).before.cells != x.before.cells);
}
