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


// Flat key=value run configuration.
//
// File syntax: one `key = value` per line; blank lines and lines starting
// with '#' are ignored. Unknown keys are rejected. Precedence, lowest first:
// built-in defaults, the config file (--config, else $MVAM_CONFIG), --set
// overrides, then dedicated command-line flags.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mvam/decoder/vocabulary.hpp"
#include "mvam/scenes/dataset.hpp"
#include "mvam/training/checkpoint.hpp"
#include "mvam/training/losses.hpp"
#include "mvam/training/model.hpp"

namespace mvam::cli {

inline constexpr const char* kConfigEnvVar = "MVAM_CONFIG";

struct RunConfig {
  std::uint64_t seed = 1;
  int grid_width = 8;
  int grid_height = 8;

  // Dataset generation.
  int n = 2000;
  int min_objects = 3;
  int max_objects = 6;
  int max_shift = 2;
  double noise_std = 0.05;
  double amplitude = 24.0;
  int refs_per_pair = 3;
  bool include_distractors = true;
  double train_ratio = 0.8;
  double val_ratio = 0.1;

  // Model.
  int feat_dim = 128;
  int hidden_dim = 512;
  int embed_dim = 300;
  double dropout = 0.5;
  double a_u_init = 0.05;
  double b_u_init = -25.0;
  std::string vocab;  // word list file; empty means the generator's vocabulary

  // Optimization.
  double lr_xe = 0.0002;
  double lr_raf = 0.00002;
  int epochs_xe = 40;
  int epochs_raf = 5;
  int batch = 16;
  double lambda = 1000.0;
  double gamma = 0.025;
  double c = 0.1;
  int max_len = 20;

  // Paths.
  std::string data_dir = "data";
  std::string run_dir = "run";

  /// Sets one key from its text form. ConfigError for unknown keys or
  /// unparsable values.
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;

  /// Applies a config file on top of the current values.
  void load_file(const std::filesystem::path& path);

  /// Range checks across keys; ConfigError on the first violation.
  void validate() const;

  /// Every key with its current value, in declaration order.
  training::ConfigEcho echo() const;

  static const std::vector<std::string>& keys();

  scenes::GridSpec grid() const { return {grid_width, grid_height}; }
  scenes::GeneratorConfig generator() const;
  scenes::RenderConfig render() const;
  scenes::SplitRatios splits() const { return {train_ratio, val_ratio}; }
  training::ModelConfig model() const;
  training::RafConfig raf() const;
  decoder::Vocabulary vocabulary() const;
};

}  // namespace mvam::cli
