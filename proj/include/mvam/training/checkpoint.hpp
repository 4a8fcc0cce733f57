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


// Checkpoint container.
//
//   bytes 0..7    "MVAMCKPT"
//   uint32        format version (little endian)
//   uint64        header length N
//   N bytes       JSON header: config echo, model config, vocabulary, epoch,
//                 phase, rng state, optimizer step count, parameter shapes
//   float32[]     parameters in ModelParameters::all() order, row-major
//   float32[]     Adam first moments, then second moments (same layout),
//                 present only when the header says so
//
// A resumed run restores parameters, both Adam moment buffers, the step
// count and the shuffling rng, so it continues exactly where the saved run
// would have.

#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mvam/training/model.hpp"
#include "mvam/training/trainer.hpp"

namespace mvam::training {

inline constexpr std::uint32_t kCheckpointVersion = 1;

using ConfigEcho = std::vector<std::pair<std::string, std::string>>;

struct Checkpoint {
  Model model;
  TrainState state;
  Phase phase = Phase::kXe;
  ConfigEcho config_echo;
};

void save_checkpoint(const std::filesystem::path& path, const Model& model, const TrainState& state, Phase phase,
                     const ConfigEcho& config_echo);

/// Throws DataError on a missing, truncated or inconsistent file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

const char* phase_name(Phase phase);

}  // namespace mvam::training
