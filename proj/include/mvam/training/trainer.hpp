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

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mvam/metrics/caption_metrics.hpp"
#include "mvam/training/losses.hpp"
#include "mvam/training/model.hpp"
#include "mvam/training/optimizer.hpp"

namespace mvam::training {

enum class Phase { kXe, kRaf };

struct TrainConfig {
  double lr = 2e-4;
  int epochs = 40;  // target epoch count; a resumed run stops at the same total
  int batch_size = 16;
  int max_len = 20;
  Phase phase = Phase::kXe;
};

/// Everything a resumed run needs besides the parameters.
struct TrainState {
  int epoch = 0;
  Adam adam;
  Rng rng;

  explicit TrainState(std::uint64_t seed = 0);
};

struct EpochLog {
  int epoch = 0;
  std::string split;  // "train" or "val"
  double value = 0.0;  // mean summed-NLL per caption
};

struct RafEpochLog {
  int epoch = 0;
  double mean_r = 0.0;
  double mean_r_hat = 0.0;
  double hinge_rate = 0.0;  // share of pairs with r_hat > r
  double xe = 0.0;
  std::vector<std::string> skipped;  // pairs whose reward failed
};

/// Candidate tokens, reference tokens -> reward.
using RewardFn = std::function<double(const metrics::Tokens&, const std::vector<metrics::Tokens>&)>;

/// CIDEr-D against document frequencies frozen over `examples`' references.
RewardFn cider_reward(std::span<const Example> examples);

/// Mean per-caption summed NLL with dropout off, no parameter change.
double eval_loss(const Model& model, std::span<const Example> examples, int batch_size = 64);

/// Cross-entropy training over every (pair, reference) item.
void train_xe(Model& model, std::span<const Example> train, std::span<const Example> val, const TrainConfig& cfg,
              TrainState& state, const std::function<void(const EpochLog&)>& on_log = {});

/// Mixed objective: lambda * L_RL + L_XE per pair, averaged over the batch.
void raf_finetune(Model& model, std::span<const Example> train, const TrainConfig& cfg, const RafConfig& raf,
                  const RewardFn& reward, TrainState& state,
                  const std::function<void(const RafEpochLog&)>& on_log = {});

}  // namespace mvam::training
