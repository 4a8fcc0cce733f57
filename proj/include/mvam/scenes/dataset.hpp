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

// Scene-pair corpus: generation, splits and JSONL files.
//
// One line per pair:
//   {"id", "scene_before":[{"x","y","shape","color","size","material"}...],
//    "scene_after":[...], "viewpoint":{"dx","dy"},
//    "change":{"type","mask_before":[[x,y]...],"mask_after":[[x,y]...]},
//    "captions":["..."]}

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mvam/encoder/feature_grid.hpp"
#include "mvam/scenes/render.hpp"
#include "mvam/scenes/scene.hpp"

namespace mvam::scenes {

struct ScenePair {
  std::string id;
  Scene before;
  Scene after;
  ViewpointTransform transform;
  /// mask_after is in after-image coordinates (viewpoint applied).
  ChangeRecord change;
  std::vector<std::string> captions;
};

struct GeneratorConfig {
  GridSpec grid;
  int min_objects = 3;
  int max_objects = 6;
  int max_shift = 2;
  double noise_std = 0.05;
  bool include_distractors = true;
  int refs_per_pair = 3;
};

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
};

struct Dataset {
  std::vector<ScenePair> train;
  std::vector<ScenePair> val;
  std::vector<ScenePair> test;
};

/// One pair from its own rng stream. Resamples until the change and the
/// viewpoint shift are both admissible.
ScenePair generate_pair(const GeneratorConfig& config, Rng& rng, std::string id,
                        std::optional<ChangeType> forced = std::nullopt);

/// Pairs 0..n-1, pair i drawn from Rng(seed).derive(i). If `forced` is
/// nonempty pair i gets type forced[i % forced.size()].
std::vector<ScenePair> generate_pairs(std::size_t n, const GeneratorConfig& config, std::uint64_t seed,
                                      const std::vector<ChangeType>& forced = {},
                                      const std::string& id_prefix = "pair");

/// floor(n * train) train pairs, floor(n * val) validation pairs, rest test.
/// Ids are "<split>-<5-digit index within split>".
Dataset generate_dataset(std::size_t n, const SplitRatios& ratios, const GeneratorConfig& config,
                         std::uint64_t seed);

/// Pair-level consistency: masks, captions and reconstruction.
void validate_pair(const ScenePair& pair, const GridSpec& grid);

std::string to_json_line(const ScenePair& pair);
/// Parses one line. The change record's target and described objects are
/// recovered from the masks. Throws DataError on malformed input.
ScenePair from_json_line(std::string_view line, const GridSpec& grid, double noise_std);

void write_jsonl(const std::filesystem::path& path, const std::vector<ScenePair>& pairs);
std::vector<ScenePair> read_jsonl(const std::filesystem::path& path, const GridSpec& grid, double noise_std);

/// train.jsonl, val.jsonl, test.jsonl under dir (created if missing).
void write_dataset(const std::filesystem::path& dir, const Dataset& dataset);

struct PairFeatures {
  encoder::FeatureGrid before;
  encoder::FeatureGrid after;
};

/// Renders both scenes; noise comes from a stream keyed by (seed, pair id),
/// so features do not depend on load order.
PairFeatures render_pair(const ScenePair& pair, const GridSpec& grid, const RenderConfig& config,
                         std::uint64_t seed);

}  // namespace mvam::scenes
