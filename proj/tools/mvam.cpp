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


// mvam: generate | train | raf | eval | inspect.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mvam/cli/commands.hpp"
#include "mvam/numerics/errors.hpp"

namespace {

using mvam::cli::RunConfig;
namespace fs = std::filesystem;

struct GlobalOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

RunConfig resolve(const GlobalOptions& opts) {
  RunConfig config;
  std::string path = opts.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv(mvam::cli::kConfigEnvVar)) path = env;
  }
  if (!path.empty()) config.load_file(path);
  for (const std::string& entry : opts.overrides) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos) throw mvam::ConfigError("--set expects key=value, got '" + entry + "'");
    config.set(entry.substr(0, eq), entry.substr(eq + 1));
  }
  if (opts.seed) config.seed = *opts.seed;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Change captioning on synthetic scene pairs"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions global;
  app.add_option("--config", global.config_path, "key=value config file (default: $MVAM_CONFIG)");
  app.add_option("--set", global.overrides, "override one config key, key=value; repeatable");
  app.add_option("--seed", global.seed, "shorthand for --set seed=N");

  auto* gen = app.add_subcommand("generate", "write train/val/test.jsonl");
  std::optional<int> gen_n;
  std::string gen_out;
  bool no_distractors = false;
  gen->add_option("--n", gen_n, "number of pairs");
  gen->add_option("--out", gen_out, "output directory (default: data_dir)");
  gen->add_flag("--no-distractors", no_distractors, "omit no-change pairs");

  auto* train = app.add_subcommand("train", "cross-entropy training");
  std::string train_data, train_out, train_resume, train_log;
  std::optional<int> train_epochs;
  train->add_option("--data", train_data, "dataset directory (default: data_dir)");
  train->add_option("--out", train_out, "checkpoint to write (default: run_dir/xe.ckpt)");
  train->add_option("--resume", train_resume, "checkpoint to continue from");
  train->add_option("--log", train_log, "loss log (default: run_dir/train_log.csv)");
  train->add_option("--epochs", train_epochs, "total epochs (epochs_xe)");

  auto* raf = app.add_subcommand("raf", "fine-tune with the perturbed-map reward");
  std::string raf_data, raf_in, raf_out, raf_log;
  std::optional<int> raf_epochs;
  raf->add_option("--data", raf_data, "dataset directory (default: data_dir)");
  raf->add_option("--in", raf_in, "starting checkpoint (default: run_dir/xe.ckpt)");
  raf->add_option("--out", raf_out, "checkpoint to write (default: run_dir/raf.ckpt)");
  raf->add_option("--log", raf_log, "reward log (default: run_dir/raf_log.csv)");
  raf->add_option("--epochs", raf_epochs, "total RAF epochs (epochs_raf)");

  auto* eval = app.add_subcommand("eval", "score a checkpoint on one split");
  std::string eval_data, eval_split = "test", eval_ckpt, eval_out;
  eval->add_option("--data", eval_data, "dataset directory (default: data_dir)");
  eval->add_option("--split", eval_split, "train, val or test")->capture_default_str();
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint to score")->required();
  eval->add_option("--out", eval_out, "report path (default: run_dir/eval_<split>.txt)");

  auto* inspect = app.add_subcommand("inspect", "changed-map heatmaps and caption for one pair");
  std::string insp_data, insp_ckpt, insp_id, insp_out;
  inspect->add_option("--data", insp_data, "dataset directory (default: data_dir)");
  inspect->add_option("--checkpoint", insp_ckpt, "checkpoint to use")->required();
  inspect->add_option("--id", insp_id, "pair id")->required();
  inspect->add_option("--out", insp_out, "output directory (default: run_dir/inspect)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return mvam::cli::kExitConfig;
  }

  try {
    RunConfig config = resolve(global);
    const auto or_default = [](const std::string& given, const fs::path& fallback) {
      return given.empty() ? fallback : fs::path(given);
    };
    const fs::path data_dir = config.data_dir;
    const fs::path run_dir = config.run_dir;
    if (*gen) {
      if (gen_n) config.n = *gen_n;
      if (no_distractors) config.include_distractors = false;
      mvam::cli::cmd_generate(config, or_default(gen_out, data_dir), std::cout);
    } else if (*train) {
      if (train_epochs) config.epochs_xe = *train_epochs;
      mvam::cli::TrainPaths paths{or_default(train_data, data_dir), or_default(train_out, run_dir / "xe.ckpt"),
                                  std::nullopt, or_default(train_log, run_dir / "train_log.csv")};
      if (!train_resume.empty()) paths.resume = train_resume;
      mvam::cli::cmd_train(config, paths, std::cout);
    } else if (*raf) {
      if (raf_epochs) config.epochs_raf = *raf_epochs;
      mvam::cli::cmd_raf(config,
                         {or_default(raf_data, data_dir), or_default(raf_in, run_dir / "xe.ckpt"),
                          or_default(raf_out, run_dir / "raf.ckpt"), or_default(raf_log, run_dir / "raf_log.csv")},
                         std::cout);
    } else if (*eval) {
      mvam::cli::cmd_eval(config, or_default(eval_data, data_dir), eval_split, eval_ckpt,
                          or_default(eval_out, run_dir / ("eval_" + eval_split + ".txt")), std::cout);
    } else if (*inspect) {
      mvam::cli::cmd_inspect(config, or_default(insp_data, data_dir), insp_ckpt, insp_id,
                             or_default(insp_out, run_dir / "inspect"), std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return mvam::cli::exit_code(e);
  }
  return mvam::cli::kExitOk;
}
