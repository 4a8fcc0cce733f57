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


#include "mvam/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "mvam/metrics/evaluation.hpp"
#include "mvam/numerics/errors.hpp"
#include "mvam/scenes/captions.hpp"
#include "mvam/training/checkpoint.hpp"
#include "mvam/training/trainer.hpp"

namespace mvam::cli {

namespace {

using training::Example;

std::vector<scenes::ScenePair> load_split(const RunConfig& config, const fs::path& data_dir, const std::string& split) {
  const fs::path path = data_dir / (split + ".jsonl");
  if (!fs::exists(path)) throw DataError("missing split file " + path.string());
  return scenes::read_jsonl(path, config.grid(), config.noise_std);
}

std::vector<Example> examples_for(const RunConfig& config, const std::vector<scenes::ScenePair>& pairs,
                                  const decoder::Vocabulary& vocab) {
  return training::make_examples(pairs, config.grid(), config.render(), config.seed, vocab);
}

void check_compatible(const RunConfig& config, const training::Model& model) {
  if (!(model.vocab() == config.vocabulary())) {
    throw DataError("vocabulary mismatch: the checkpoint has " + std::to_string(model.vocab().size()) +
                    " tokens, the configured vocabulary " + std::to_string(config.vocabulary().size()) +
                    " (or the same count in a different order)");
  }
  if (model.config().feat_dim != config.feat_dim) {
    throw ConfigError("feat_dim " + std::to_string(config.feat_dim) + " does not match the checkpoint's " +
                      std::to_string(model.config().feat_dim));
  }
}

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

metrics::Tokens words_of(const decoder::Vocabulary& vocab, const decoder::TokenSequence& ids) {
  return metrics::tokenize(vocab.decode(ids));
}

std::ofstream open_output(const fs::path& path, std::ios::openmode mode = std::ios::trunc) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::out | mode);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

void write_map_csv(const fs::path& path, const encoder::ProbabilityMap& map) {
  std::ofstream out = open_output(path);
  const int height = static_cast<int>(map.values.size()) / map.width;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < map.width; ++x) out << (x ? "," : "") << fixed(map.at(x, y));
    out << '\n';
  }
}

void write_map_pgm(const fs::path& path, const encoder::ProbabilityMap& map) {
  std::ofstream out = open_output(path);
  const int height = static_cast<int>(map.values.size()) / map.width;
  out << "P2\n" << map.width << ' ' << height << "\n255\n";
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < map.width; ++x) {
      const double v = std::clamp(map.at(x, y), 0.0, 1.0);
      out << (x ? " " : "") << static_cast<int>(std::lround(255.0 * v));
    }
    out << '\n';
  }
}

}  // namespace

int exit_code(const std::exception& error) {
  if (dynamic_cast<const ConfigError*>(&error) || dynamic_cast<const ContractError*>(&error)) return kExitConfig;
  if (dynamic_cast<const DataError*>(&error)) return kExitData;
  if (dynamic_cast<const NumericError*>(&error)) return kExitNumeric;
  return 1;
}

void cmd_generate(const RunConfig& config, const fs::path& out_dir, std::ostream& log) {
  config.validate();
  if (!fs::exists(out_dir)) {
    fs::create_directories(out_dir);
    log << "created " << out_dir.string() << '\n';
  }
  const scenes::Dataset data =
      scenes::generate_dataset(static_cast<std::size_t>(config.n), config.splits(), config.generator(), config.seed);
  scenes::write_dataset(out_dir, data);
  const std::vector<std::pair<std::string, const std::vector<scenes::ScenePair>*>> splits = {
      {"train", &data.train}, {"val", &data.val}, {"test", &data.test}};
  for (const auto& [name, pairs] : splits) {
    std::map<std::string, int> counts;
    for (const auto& pair : *pairs) ++counts[std::string(scenes::code(pair.change.type))];
    log << name << ": " << pairs->size() << " pairs";
    for (const scenes::ChangeType type : scenes::kAllChangeTypes) {
      const std::string code(scenes::code(type));
      log << ' ' << code << '=' << counts[code];
    }
    log << '\n';
  }
}

void cmd_train(const RunConfig& config, const TrainPaths& paths, std::ostream& log) {
  config.validate();
  const decoder::Vocabulary vocab = config.vocabulary();
  std::optional<training::Checkpoint> resumed;
  if (paths.resume) {
    resumed = training::load_checkpoint(*paths.resume);
    check_compatible(config, resumed->model);
    if (resumed->phase != training::Phase::kXe) throw ConfigError("train: cannot resume from a RAF checkpoint");
  }
  training::Model model = resumed ? resumed->model : training::Model(config.model(), vocab, config.seed);
  training::TrainState state = resumed ? resumed->state : training::TrainState(config.seed);

  const auto train = examples_for(config, load_split(config, paths.data_dir, "train"), vocab);
  if (train.empty()) throw DataError("train: the training split is empty");
  std::vector<Example> val;
  if (fs::exists(paths.data_dir / "val.jsonl")) val = examples_for(config, load_split(config, paths.data_dir, "val"), vocab);

  const bool append = resumed && fs::exists(paths.log_csv);
  std::ofstream csv = open_output(paths.log_csv, append ? std::ios::app : std::ios::trunc);
  if (!append) csv << "epoch,split,value\n";

  training::TrainConfig tc;
  tc.lr = config.lr_xe;
  tc.epochs = config.epochs_xe;
  tc.batch_size = config.batch;
  tc.max_len = config.max_len;
  tc.phase = training::Phase::kXe;
  training::train_xe(model, train, val, tc, state, [&](const training::EpochLog& entry) {
    csv << entry.epoch << ',' << entry.split << ',' << fixed(entry.value) << '\n';
    csv.flush();
    log << "epoch " << entry.epoch << ' ' << entry.split << " loss " << fixed(entry.value, 4) << '\n';
  });
  training::save_checkpoint(paths.checkpoint, model, state, training::Phase::kXe, config.echo());
  log << "wrote " << paths.checkpoint.string() << " at epoch " << state.epoch << '\n';
}

void cmd_raf(const RunConfig& config, const RafPaths& paths, std::ostream& log) {
  config.validate();
  training::Checkpoint ck = training::load_checkpoint(paths.input);
  check_compatible(config, ck.model);
  // A RAF checkpoint continues its own optimizer state; an XE checkpoint
  // starts RAF with fresh Adam moments and epoch counter.
  const bool continuing = ck.phase == training::Phase::kRaf;
  training::TrainState state =
      continuing ? ck.state : training::TrainState(numerics::splitmix64(config.seed ^ 0x726166ULL));

  const auto train = examples_for(config, load_split(config, paths.data_dir, "train"), ck.model.vocab());
  if (train.empty()) throw DataError("raf: the training split is empty");

  const bool append = continuing && fs::exists(paths.log_csv);
  std::ofstream csv = open_output(paths.log_csv, append ? std::ios::app : std::ios::trunc);
  if (!append) csv << "epoch,mean_r,mean_r_hat,hinge_rate,xe,skipped\n";

  training::TrainConfig tc;
  tc.lr = config.lr_raf;
  tc.epochs = config.epochs_raf;
  tc.batch_size = config.batch;
  tc.max_len = config.max_len;
  tc.phase = training::Phase::kRaf;
  const auto reward = training::cider_reward(train);
  training::raf_finetune(ck.model, train, tc, config.raf(), reward, state, [&](const training::RafEpochLog& entry) {
    csv << entry.epoch << ',' << fixed(entry.mean_r) << ',' << fixed(entry.mean_r_hat) << ','
        << fixed(entry.hinge_rate) << ',' << fixed(entry.xe) << ',' << entry.skipped.size() << '\n';
    csv.flush();
    log << "raf epoch " << entry.epoch << " r " << fixed(entry.mean_r, 4) << " r_hat " << fixed(entry.mean_r_hat, 4)
        << " hinge " << fixed(entry.hinge_rate, 4) << " xe " << fixed(entry.xe, 4) << '\n';
    for (const auto& id : entry.skipped) log << "  skipped " << id << " (reward failed)\n";
  });
  training::save_checkpoint(paths.checkpoint, ck.model, state, training::Phase::kRaf, config.echo());
  log << "wrote " << paths.checkpoint.string() << " at raf epoch " << state.epoch << '\n';
}

void cmd_eval(const RunConfig& config, const fs::path& data_dir, const std::string& split,
              const fs::path& checkpoint, const fs::path& report, std::ostream& log) {
  config.validate();
  const training::Checkpoint ck = training::load_checkpoint(checkpoint);
  check_compatible(config, ck.model);
  const auto pairs = load_split(config, data_dir, split);
  if (pairs.empty()) throw DataError("eval: split '" + split + "' is empty");
  const auto examples = examples_for(config, pairs, ck.model.vocab());
  const auto captions = training::caption_examples(ck.model, examples, config.max_len);
  const auto maps = training::changed_maps(ck.model, examples);

  std::vector<metrics::EvalItem> items;
  std::map<std::string, std::pair<double, int>> loc;
  std::map<std::string, std::pair<int, int>> no_change;
  int exact = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const Example& ex = examples[i];
    metrics::Tokens words = words_of(ck.model.vocab(), captions[i]);
    exact += std::find(ex.ref_tokens.begin(), ex.ref_tokens.end(), words) != ex.ref_tokens.end();
    const bool nc = scenes::is_no_change_caption(ck.model.vocab().decode(captions[i]));
    no_change[ex.category].first += nc;
    no_change[ex.category].second += 1;
    if (ex.category != "DI") {
      no_change["non-DI"].first += nc;
      no_change["non-DI"].second += 1;
    }
    if (ex.category != "DI") {
      const double mass = training::localization_mass(maps[i], ex);
      for (const std::string& key : {ex.category, std::string("non-DI")}) {
        loc[key].first += mass;
        loc[key].second += 1;
      }
    }
    items.push_back({ex.id, ex.category, std::move(words), ex.ref_tokens});
  }
  metrics::EvalReport result = metrics::evaluate_corpus(items);
  result.extra.push_back({"EXACT_MATCH", "ALL", static_cast<double>(exact) / static_cast<double>(items.size())});
  for (const std::string& category : metrics::category_order()) {
    if (const auto it = loc.find(category); it != loc.end()) {
      result.extra.push_back({"LOCALIZATION", category, it->second.first / it->second.second});
    }
  }
  if (const auto it = loc.find("non-DI"); it != loc.end()) {
    result.extra.push_back({"LOCALIZATION", "non-DI", it->second.first / it->second.second});
  }
  for (const std::string& category : metrics::category_order()) {
    if (const auto it = no_change.find(category); it != no_change.end()) {
      result.extra.push_back({"NO_CHANGE_RATE", category, static_cast<double>(it->second.first) / it->second.second});
    }
  }
  if (const auto it = no_change.find("non-DI"); it != no_change.end()) {
    result.extra.push_back({"NO_CHANGE_RATE", "non-DI", static_cast<double>(it->second.first) / it->second.second});
  }

  std::vector<std::string> header = {"split " + split, "checkpoint " + checkpoint.filename().string(),
                                     std::string("phase ") + training::phase_name(ck.phase),
                                     "epoch " + std::to_string(ck.state.epoch)};
  for (const auto& [key, value] : config.echo()) header.push_back("config " + key + "=" + value);
  std::ofstream out = open_output(report);
  metrics::write_report(out, result, header);
  log << "CIDEr-D " << fixed(result.overall.cider_d, 4) << " BLEU4 " << fixed(result.overall.bleu4, 4) << " ROUGE_L "
      << fixed(result.overall.rouge_l, 4) << " on " << items.size() << " pairs; wrote " << report.string() << '\n';
}

void cmd_inspect(const RunConfig& config, const fs::path& data_dir, const fs::path& checkpoint,
                 const std::string& pair_id, const fs::path& out_dir, std::ostream& log) {
  config.validate();
  const training::Checkpoint ck = training::load_checkpoint(checkpoint);
  check_compatible(config, ck.model);
  std::vector<std::string> available;
  std::optional<scenes::ScenePair> found;
  for (const char* split : {"train", "val", "test"}) {
    if (!fs::exists(data_dir / (std::string(split) + ".jsonl"))) continue;
    for (auto& pair : load_split(config, data_dir, split)) {
      if (pair.id == pair_id) found = pair;
      available.push_back(pair.id);
    }
  }
  if (!found) {
    constexpr std::size_t kShown = 20;
    std::string message = "unknown pair id '" + pair_id + "'; " + std::to_string(available.size()) + " available:";
    for (std::size_t i = 0; i < std::min(kShown, available.size()); ++i) message += " " + available[i];
    if (available.size() > kShown) message += " ...";
    throw DataError(message);
  }
  const auto examples = examples_for(config, {*found}, ck.model.vocab());
  const auto caption = training::caption_examples(ck.model, examples, config.max_len).front();
  const auto maps = training::changed_maps(ck.model, examples).front();

  fs::create_directories(out_dir);
  const fs::path stem = out_dir / pair_id;
  write_map_csv(fs::path(stem.string() + ".C_b.csv"), maps.C_b);
  write_map_csv(fs::path(stem.string() + ".C_a.csv"), maps.C_a);
  write_map_pgm(fs::path(stem.string() + ".C_b.pgm"), maps.C_b);
  write_map_pgm(fs::path(stem.string() + ".C_a.pgm"), maps.C_a);

  const std::string generated = ck.model.vocab().decode(caption);
  std::ofstream side = open_output(fs::path(stem.string() + ".txt"));
  side << "pair " << pair_id << '\n';
  side << "change " << scenes::code(found->change.type) << '\n';
  side << "caption " << generated << '\n';
  for (const auto& ref : found->captions) side << "reference " << ref << '\n';
  side << "localization " << fixed(training::localization_mass(maps, examples.front())) << '\n';
  side << "checkpoint " << checkpoint.filename().string() << '\n';
  for (const auto& [key, value] : config.echo()) side << "config " << key << '=' << value << '\n';
  log << pair_id << ": " << generated << '\n';
}

}  // namespace mvam::cli
