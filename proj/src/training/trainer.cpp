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

#include "mvam/training/trainer.hpp"

#include <array>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>

#include "mvam/numerics/errors.hpp"

namespace mvam::training {

using numerics::GradMode;

namespace {

struct Item {
  std::size_t example;
  std::size_t ref;
};

template <typename V>
void shuffle(std::vector<V>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.uniform_int(i)]);
}

void check_config(const TrainConfig& cfg) {
  if (cfg.batch_size < 1) throw ConfigError("batch size must be positive");
  if (cfg.epochs < 0) throw ConfigError("epochs must be nonnegative");
  if (!(cfg.lr >= 0.0)) throw ConfigError("learning rate must be nonnegative");
  if (cfg.max_len < 1) throw ConfigError("max_len must be positive");
}

void zero_grads(Model& model) {
  for (auto* p : model.params().all()) p->zero_grad();
}

std::string batch_ids(std::span<const Example* const> batch) {
  std::string out;
  for (const Example* ex : batch) out += (out.empty() ? "" : ",") + ex->id;
  return out;
}

// Teacher-forced summed NLL for items whose pooled rows are given.
template <typename T>
Var items_xe(Graph<T>& g, const ModelVars& vars, const encoder::PooledVars& stacked,
             std::span<const TokenSequence* const> captions, int hidden_dim, decoder::Mode mode, T dropout,
             Rng* rng) {
  const TeacherBatch tb = teacher_batch(captions);
  const decoder::VisualContext visual =
      decoder::prepare_visual(g, vars.decoder, stacked.h_d_a2b, stacked.h_d_b2a, stacked.h_bb, stacked.h_ba);
  const std::vector<Var> logits =
      decoder::teacher_forced_logits(g, vars.decoder, visual, tb.inputs, hidden_dim, mode, dropout, rng);
  return xe_loss<T>(g, logits, tb.targets_by_step);
}

encoder::ProbabilityMap to_map(const Matrix<float>& m, int width, int height) {
  encoder::ProbabilityMap out;
  out.width = width;
  out.height = height;
  out.values = m.col(0).cast<double>();
  return out;
}

}  // namespace

TrainState::TrainState(std::uint64_t seed) : rng(Rng(seed).derive(0x747261696eULL)) {}

RewardFn cider_reward(std::span<const Example> examples) {
  std::vector<std::vector<metrics::Tokens>> sets;
  sets.reserve(examples.size());
  for (const Example& ex : examples) sets.push_back(ex.ref_tokens);
  auto df = std::make_shared<const metrics::DocumentFrequency>(sets);
  return [df](const metrics::Tokens& cand, const std::vector<metrics::Tokens>& refs) {
    return metrics::cider_d(cand, refs, *df);
  };
}

double eval_loss(const Model& model, std::span<const Example> examples, int batch_size) {
  std::vector<Item> items;
  for (std::size_t e = 0; e < examples.size(); ++e) {
    for (std::size_t r = 0; r < examples[e].refs.size(); ++r) items.push_back({e, r});
  }
  if (items.empty()) throw ContractError("eval_loss: no captions");
  double total = 0.0;
  for (std::size_t start = 0; start < items.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(items.size(), start + static_cast<std::size_t>(batch_size));
    Graph<float> g(GradMode::kDisabled);
    const ModelVars vars = bind_constants(g, model.params());
    std::vector<const Example*> batch;
    std::vector<const TokenSequence*> captions;
    for (std::size_t i = start; i < end; ++i) {
      batch.push_back(&examples[items[i].example]);
      captions.push_back(&examples[items[i].example].refs[items[i].ref]);
    }
    const BatchEncoding enc = encode_batch<float>(g, vars, batch, model.config().vam);
    const Var loss = items_xe<float>(g, vars, enc.stacked, captions, model.config().hidden_dim,
                                     decoder::Mode::kEval, 0.0f, nullptr);
    total += static_cast<double>(g.value(loss)(0, 0));
  }
  return total / static_cast<double>(items.size());
}

void train_xe(Model& model, std::span<const Example> train, std::span<const Example> val, const TrainConfig& cfg,
              TrainState& state, const std::function<void(const EpochLog&)>& on_log) {
  check_config(cfg);
  if (train.empty()) throw DataError("train_xe: the training split is empty");
  state.adam.set_lr(cfg.lr);
  std::vector<Item> canonical;
  for (std::size_t e = 0; e < train.size(); ++e) {
    if (train[e].refs.empty()) throw DataError("train_xe: pair '" + train[e].id + "' has no captions");
    for (std::size_t r = 0; r < train[e].refs.size(); ++r) canonical.push_back({e, r});
  }
  const auto dropout = static_cast<float>(model.config().dropout);
  while (state.epoch < cfg.epochs) {
    const int epoch = state.epoch + 1;
    // Each epoch permutes the canonical order, so a resumed run sees the
    // same batches as an uninterrupted one.
    std::vector<Item> items = canonical;
    shuffle(items, state.rng);
    double epoch_loss = 0.0;
    int step = 0;
    for (std::size_t start = 0; start < items.size(); start += static_cast<std::size_t>(cfg.batch_size), ++step) {
      const std::size_t end = std::min(items.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<const Example*> batch;
      std::vector<const TokenSequence*> captions;
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(&train[items[i].example]);
        captions.push_back(&train[items[i].example].refs[items[i].ref]);
      }
      Graph<float> g;
      const ModelVars vars = bind(g, model.params());
      const BatchEncoding enc = encode_batch<float>(g, vars, batch, model.config().vam);
      const Var summed = items_xe<float>(g, vars, enc.stacked, captions, model.config().hidden_dim,
                                         decoder::Mode::kTrain, dropout, &state.rng);
      const Var loss = g.scale(summed, 1.0f / static_cast<float>(batch.size()));
      const double value = g.value(loss)(0, 0);
      if (!std::isfinite(value)) {
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) + ", step " +
                           std::to_string(step) + " (pairs " + batch_ids(batch) + ")");
      }
      zero_grads(model);
      g.backward(loss);
      state.adam.step(model.params().all());
      epoch_loss += static_cast<double>(g.value(summed)(0, 0));
    }
    state.epoch = epoch;
    if (on_log) {
      on_log({epoch, "train", epoch_loss / static_cast<double>(items.size())});
      if (!val.empty()) on_log({epoch, "val", eval_loss(model, val)});
    }
  }
}

void raf_finetune(Model& model, std::span<const Example> train, const TrainConfig& cfg, const RafConfig& raf,
                  const RewardFn& reward, TrainState& state, const std::function<void(const RafEpochLog&)>& on_log) {
  check_config(cfg);
  raf.validate();
  if (train.empty()) throw DataError("raf_finetune: the training split is empty");
  if (!reward) throw ContractError("raf_finetune: no reward function");
  state.adam.set_lr(cfg.lr);
  const ModelConfig& mc = model.config();
  const auto dropout = static_cast<float>(mc.dropout);
  std::vector<std::size_t> order(train.size());
  while (state.epoch < cfg.epochs) {
    const int epoch = state.epoch + 1;
    // Each epoch permutes the canonical order, so a resumed run sees the
    // same batches as an uninterrupted one.
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(order, state.rng);
    RafEpochLog log;
    log.epoch = epoch;
    int scored = 0;
    int hinged = 0;
    std::size_t captions_seen = 0;
    int step = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size), ++step) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<const Example*> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(&train[order[i]]);
      const std::size_t B = batch.size();

      Graph<float> g;
      const ModelVars vars = bind(g, model.params());
      const BatchEncoding enc = encode_batch<float>(g, vars, batch, mc.vam);

      // Perturbed maps and the pooled summaries they induce (no gradient).
      std::vector<std::array<Matrix<float>, 2>> u_hat(B);
      Graph<float> h(GradMode::kDisabled);
      std::vector<encoder::PooledVars> pooled_hat;
      for (std::size_t b = 0; b < B; ++b) {
        const auto& cells = enc.encoded[b];
        const int w = batch[b]->before.width;
        const int ht = batch[b]->before.height;
        for (int side = 0; side < 2; ++side) {
          const encoder::CellVars& cv = side == 0 ? cells.before : cells.after;
          const encoder::ProbabilityMap U = to_map(g.value(cv.unchanged_map), w, ht);
          u_hat[b][static_cast<std::size_t>(side)] = perturb_map(U, raf, state.rng).values.cast<float>();
        }
        const Var fb = h.constant(g.value(enc.f_before[b]));
        const Var fa = h.constant(g.value(enc.f_after[b]));
        const auto [changed_b, unchanged_b] = encoder::features_from_map<float>(
            h, fb, h.constant(g.value(cells.before.synthesized)), h.constant(u_hat[b][0]));
        const auto [changed_a, unchanged_a] = encoder::features_from_map<float>(
            h, fa, h.constant(g.value(cells.after.synthesized)), h.constant(u_hat[b][1]));
        pooled_hat.push_back(encoder::residual_pool<float>(h, fb, fa, changed_b, unchanged_b, changed_a, unchanged_a));
      }
      std::vector<encoder::PooledVars> plain_const;
      for (std::size_t b = 0; b < B; ++b) {
        const auto& p = enc.encoded[b].pooled;
        plain_const.push_back({h.constant(g.value(p.h_d_b2a)), h.constant(g.value(p.h_d_a2b)),
                               h.constant(g.value(p.h_bb)), h.constant(g.value(p.h_ba))});
      }
      std::vector<encoder::PooledVars> all_rows = plain_const;
      all_rows.insert(all_rows.end(), pooled_hat.begin(), pooled_hat.end());
      const encoder::PooledVars stacked_both = stack_pooled<float>(h, all_rows);
      const decoder::PooledBatch<float> decode_in{h.value(stacked_both.h_d_a2b), h.value(stacked_both.h_d_b2a),
                                                  h.value(stacked_both.h_bb), h.value(stacked_both.h_ba)};
      const std::vector<TokenSequence> decoded =
          decoder::greedy_decode(model.params().decoder, decode_in, mc.hidden_dim, cfg.max_len);

      // Loss: lambda * L_RL + L_XE, both averaged over the batch.
      std::vector<Var> rl_terms;
      for (std::size_t b = 0; b < B; ++b) {
        double r = 0.0;
        double r_hat = 0.0;
        try {
          const auto& refs = batch[b]->ref_tokens;
          r = reward(metrics::tokenize(model.vocab().decode(decoded[b])), refs);
          r_hat = reward(metrics::tokenize(model.vocab().decode(decoded[B + b])), refs);
          if (!std::isfinite(r) || !std::isfinite(r_hat)) throw NumericError("non-finite reward");
        } catch (const std::exception&) {
          log.skipped.push_back(batch[b]->id);
          continue;
        }
        ++scored;
        log.mean_r += r;
        log.mean_r_hat += r_hat;
        if (r_hat > r) {
          ++hinged;
          const Var maps[2] = {enc.encoded[b].before.unchanged_map, enc.encoded[b].after.unchanged_map};
          rl_terms.push_back(raf_loss<float>(g, r_hat, r, u_hat[b], maps));
        }
      }
      std::vector<encoder::PooledVars> item_rows;
      std::vector<const TokenSequence*> captions;
      for (std::size_t b = 0; b < B; ++b) {
        for (const TokenSequence& ref : batch[b]->refs) {
          item_rows.push_back(enc.encoded[b].pooled);
          captions.push_back(&ref);
        }
      }
      if (captions.empty()) throw DataError("raf_finetune: batch without captions (pairs " + batch_ids(batch) + ")");
      const encoder::PooledVars item_stack = stack_pooled<float>(g, item_rows);
      const Var xe_sum = items_xe<float>(g, vars, item_stack, captions, mc.hidden_dim, decoder::Mode::kTrain,
                                         dropout, &state.rng);
      const Var l_xe = g.scale(xe_sum, 1.0f / static_cast<float>(captions.size()));
      Var loss = l_xe;
      if (!rl_terms.empty()) {
        Var l_rl = rl_terms.front();
        for (std::size_t i = 1; i < rl_terms.size(); ++i) l_rl = g.add(l_rl, rl_terms[i]);
        l_rl = g.scale(l_rl, 1.0f / static_cast<float>(B));
        loss = total_loss<float>(g, l_rl, l_xe, raf.lambda);
      }
      const double value = g.value(loss)(0, 0);
      if (!std::isfinite(value)) {
        throw NumericError("non-finite RAF loss at epoch " + std::to_string(epoch) + ", step " +
                           std::to_string(step) + " (pairs " + batch_ids(batch) + ")");
      }
      zero_grads(model);
      g.backward(loss);
      state.adam.step(model.params().all());
      log.xe += static_cast<double>(g.value(xe_sum)(0, 0));
      captions_seen += captions.size();
    }
    state.epoch = epoch;
    if (scored > 0) {
      log.mean_r /= scored;
      log.mean_r_hat /= scored;
      log.hinge_rate = static_cast<double>(hinged) / scored;
    }
    if (captions_seen > 0) log.xe /= static_cast<double>(captions_seen);
    if (on_log) on_log(log);
  }
}

}  // namespace mvam::training
