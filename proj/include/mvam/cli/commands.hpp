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


// Subcommands behind the mvam tool. Each returns normally on success and
// throws ConfigError, DataError or NumericError otherwise; exit_code() maps
// those to the process exit status.

#pragma once

#include <exception>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "mvam/cli/run_config.hpp"

namespace mvam::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

/// Exit status for an exception escaping a command.
int exit_code(const std::exception& error);

/// Writes train/val/test.jsonl to out_dir (created if missing) and prints
/// per-split, per-category counts.
void cmd_generate(const RunConfig& config, const fs::path& out_dir, std::ostream& log);

struct TrainPaths {
  fs::path data_dir;
  fs::path checkpoint;             // written
  std::optional<fs::path> resume;  // continue from this checkpoint
  fs::path log_csv;                // epoch,split,value; appended to on resume
};

/// XE training up to epochs_xe total epochs.
void cmd_train(const RunConfig& config, const TrainPaths& paths, std::ostream& log);

struct RafPaths {
  fs::path data_dir;
  fs::path input;       // XE checkpoint, or a RAF checkpoint to continue
  fs::path checkpoint;  // written
  fs::path log_csv;     // epoch,mean_r,mean_r_hat,hinge_rate,xe,skipped
};

void cmd_raf(const RunConfig& config, const RafPaths& paths, std::ostream& log);

/// Caption metrics per category plus changed-map localization and
/// no-change caption rates, written as a versioned report.
void cmd_eval(const RunConfig& config, const fs::path& data_dir, const std::string& split,
              const fs::path& checkpoint, const fs::path& report, std::ostream& log);

/// For one pair: <id>.C_b.csv, <id>.C_a.csv, <id>.C_b.pgm, <id>.C_a.pgm and
/// the <id>.txt sidecar (caption, references, config echo) in out_dir.
void cmd_inspect(const RunConfig& config, const fs::path& data_dir, const fs::path& checkpoint,
                 const std::string& pair_id, const fs::path& out_dir, std::ostream& log);

}  // namespace mvam::cli
