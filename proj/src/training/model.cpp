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

#include "mvam/training/model.hpp"

#include <algorithm>

#include "mvam/numerics/errors.hpp"
#include "mvam/numerics/primitives.hpp"

namespace mvam::training {

using numerics::Axis;
using numerics::GradMode;

template <typename T>
std::vector<Parameter<T>*> ModelParameters<T>::all() {
  std::vector<Parameter<T>*> out = {&a_u, &b_u};
  for (Parameter<T>* p : decoder.all()) out.push_back(p);
  return out;
}

template <typename T>
std::vector<const Parameter<T>*> ModelParameters<T>::all() const {
  std::vector<const Parameter<T>*> out = {&a_u, &b_u};
  for (const Parameter<T>* p : decoder.all()) out.push_back(p);
  return out;
}

template struct ModelParameters<float>;
template struct ModelParameters<double>;

Model::Model(ModelConfig config, Vocabulary vocab, std::uint64_t seed)
    : config_(std::move(config)), vocab_(std::move(vocab)) {
  numerics::require_primitives({"matmul", "add", "sub", "mul", "sigmoid", "tanh", "softmax", "max", "mean",
                                "concat", "embedding", "dropout", "lstm_cell", "log_softmax", "nll", "sum"});
  if (!(config_.dropout >= 0.0 && config_.dropout < 1.0)) throw ConfigError("dropout must be in [0, 1)");
  Rng rng = Rng(seed).derive(0x6d6f64656cULL);
  params_.a_u = Parameter<float>("a_u", Matrix<float>::Constant(1, 1, static_cast<float>(config_.a_u_init)));
  params_.b_u = Parameter<float>("b_u", Matrix<float>::Constant(1, 1, static_cast<float>(config_.b_u_init)));
  params_.decoder = decoder::DecoderParameters<float>::init(config_.decoder_config(vocab_.size()), rng);
}

std::vector<Example> make_examples(const std::vector<scenes::ScenePair>& pairs, const scenes::GridSpec& grid,
                                   const scenes::RenderConfig& render, std::uint64_t seed, const Vocabulary& vocab) {
  std::vector<Example> out;
  out.reserve(pairs.size());
  for (const scenes::ScenePair& pair : pairs) {
    Example ex;
    ex.id = pair.id;
    ex.category = std::string(scenes::code(pair.change.type));
    auto features = scenes::render_pair(pair, grid, render, seed);
    ex.before = std::move(features.before);
    ex.after = std::move(features.after);
    for (const std::string& caption : pair.captions) {
      metrics::Tokens words = metrics::tokenize(caption);
      TokenSequence ids = vocab.encode(words);
      if (std::find(ids.begin(), ids.end(), Vocabulary::kUnk) != ids.end()) {
        throw DataError("pair '" + pair.id + "': caption '" + caption + "' has out-of-vocabulary words");
      }
      ex.refs.push_back(std::move(ids));
      ex.ref_tokens.push_back(std::move(words));
    }
    for (const scenes::Cell& c : pair.change.mask_before) ex.mask_before.push_back(c.y * grid.width + c.x);
    for (const scenes::Cell& c : pair.change.mask_after) ex.mask_after.push_back(c.y * grid.width + c.x);
    out.push_back(std::move(ex));
  }
  return out;
}

template <typename T>
ModelVars bind(Graph<T>& g, ModelParameters<T>& params) {
  return ModelVars{g.parameter(params.a_u), g.parameter(params.b_u), decoder::bind(g, params.decoder)};
}

template <typename T>
ModelVars bind_constants(Graph<T>& g, const ModelParameters<T>& params) {
  return ModelVars{g.constant(params.a_u.value), g.constant(params.b_u.value),
                   decoder::bind_constants(g, params.decoder)};
}

template <typename T>
encoder::PooledVars stack_pooled(Graph<T>& g, std::span<const encoder::PooledVars> pooled) {
  std::vector<Var> d_b2a, d_a2b, bb, ba;
  for (const auto& p : pooled) {
    d_b2a.push_back(p.h_d_b2a);
    d_a2b.push_back(p.h_d_a2b);
    bb.push_back(p.h_bb);
    ba.push_back(p.h_ba);
  }
  return encoder::PooledVars{g.concat(d_b2a, Axis::kWithinCols), g.concat(d_a2b, Axis::kWithinCols),
                             g.concat(bb, Axis::kWithinCols), g.concat(ba, Axis::kWithinCols)};
}

template <typename T>
BatchEncoding encode_batch(Graph<T>& g, const ModelVars& vars, std::span<const Example* const> batch,
                           const encoder::VamOptions& options) {
  if (batch.empty()) throw ContractError("encode_batch: empty batch");
  BatchEncoding out;
  std::vector<encoder::PooledVars> pooled;
  for (const Example* ex : batch) {
    const Var fb = g.constant(encoder::to_matrix<T>(ex->before));
    const Var fa = g.constant(encoder::to_matrix<T>(ex->after));
    out.f_before.push_back(fb);
    out.f_after.push_back(fa);
    out.encoded.push_back(encoder::m_vam(g, fb, fa, vars.a_u, vars.b_u, options));
    pooled.push_back(out.encoded.back().pooled);
  }
  out.stacked = stack_pooled<T>(g, pooled);
  return out;
}

TeacherBatch teacher_batch(std::span<const TokenSequence* const> captions) {
  if (captions.empty()) throw ContractError("teacher_batch: empty batch");
  std::size_t steps = 0;
  for (const TokenSequence* c : captions) steps = std::max(steps, c->size() + 1);
  TeacherBatch out;
  out.inputs.assign(captions.size(), std::vector<int>(steps, Vocabulary::kPad));
  out.targets_by_step.assign(steps, std::vector<int>(captions.size(), Vocabulary::kPad));
  for (std::size_t b = 0; b < captions.size(); ++b) {
    const TokenSequence& c = *captions[b];
    out.inputs[b][0] = Vocabulary::kBos;
    for (std::size_t t = 0; t < c.size(); ++t) {
      out.inputs[b][t + 1] = c[t];
      out.targets_by_step[t][b] = c[t];
    }
    out.targets_by_step[c.size()][b] = Vocabulary::kEos;
  }
  return out;
}

std::vector<TokenSequence> caption_examples(const Model& model, std::span<const Example> examples, int max_len,
                                            int batch_size) {
  std::vector<TokenSequence> out;
  out.reserve(examples.size());
  for (std::size_t start = 0; start < examples.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(examples.size(), start + static_cast<std::size_t>(batch_size));
    Graph<float> g(GradMode::kDisabled);
    const ModelVars vars = bind_constants(g, model.params());
    std::vector<const Example*> batch;
    for (std::size_t i = start; i < end; ++i) batch.push_back(&examples[i]);
    const BatchEncoding enc = encode_batch<float>(g, vars, batch, model.config().vam);
    decoder::PooledBatch<float> pooled{g.value(enc.stacked.h_d_a2b), g.value(enc.stacked.h_d_b2a),
                                       g.value(enc.stacked.h_bb), g.value(enc.stacked.h_ba)};
    for (auto& caption : decoder::greedy_decode(model.params().decoder, pooled, model.config().hidden_dim, max_len)) {
      out.push_back(std::move(caption));
    }
  }
  return out;
}

std::vector<ChangeMaps> changed_maps(const Model& model, std::span<const Example> examples) {
  encoder::VamParameters vp;
  vp.a_u = model.params().a_u.value(0, 0);
  vp.b_u = model.params().b_u.value(0, 0);
  std::vector<ChangeMaps> out;
  out.reserve(examples.size());
  for (const Example& ex : examples) {
    const encoder::EncoderOutput enc = encoder::m_vam(ex.before, ex.after, vp, model.config().vam);
    out.push_back(ChangeMaps{enc.C_b, enc.C_a});
  }
  return out;
}

double localization_mass(const ChangeMaps& maps, const Example& example) {
  double inside = 0.0;
  for (int cell : example.mask_before) inside += maps.C_b.values(cell);
  for (int cell : example.mask_after) inside += maps.C_a.values(cell);
  const double total = maps.C_b.values.sum() + maps.C_a.values.sum();
  return total > 0.0 ? inside / total : 0.0;
}

template ModelVars bind<float>(Graph<float>&, ModelParameters<float>&);
template ModelVars bind<double>(Graph<double>&, ModelParameters<double>&);
template ModelVars bind_constants<float>(Graph<float>&, const ModelParameters<float>&);
template ModelVars bind_constants<double>(Graph<double>&, const ModelParameters<double>&);
template encoder::PooledVars stack_pooled<float>(Graph<float>&, std::span<const encoder::PooledVars>);
template encoder::PooledVars stack_pooled<double>(Graph<double>&, std::span<const encoder::PooledVars>);
template BatchEncoding encode_batch<float>(Graph<float>&, const ModelVars&, std::span<const Example* const>,
                                           const encoder::VamOptions&);
template BatchEncoding encode_batch<double>(Graph<double>&, const ModelVars&, std::span<const Example* const>,
                                            const encoder::VamOptions&);

}  // namespace mvam::training
