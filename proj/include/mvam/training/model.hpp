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

// Encoder + decoder as one trainable unit, and the rendered training
// examples it consumes.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mvam/decoder/decoder.hpp"
#include "mvam/decoder/vocabulary.hpp"
#include "mvam/encoder/vam.hpp"
#include "mvam/metrics/caption_metrics.hpp"
#include "mvam/numerics/graph.hpp"
#include "mvam/scenes/dataset.hpp"

namespace mvam::training {

using decoder::TokenSequence;
using decoder::Vocabulary;
using numerics::Graph;
using numerics::Matrix;
using numerics::Parameter;
using numerics::Rng;
using numerics::Var;

struct ModelConfig {
  int feat_dim = 128;
  int hidden_dim = 512;
  int embed_dim = 300;
  double dropout = 0.5;
  double a_u_init = 0.05;
  double b_u_init = -25.0;
  encoder::VamOptions vam;

  decoder::DecoderConfig decoder_config(int vocab_size) const {
    return {feat_dim, hidden_dim, embed_dim, vocab_size, dropout};
  }
};

template <typename T>
struct ModelParameters {
  Parameter<T> a_u;
  Parameter<T> b_u;
  decoder::DecoderParameters<T> decoder;

  /// Encoder scalars first, then the decoder in declaration order. The order
  /// is the checkpoint layout.
  std::vector<Parameter<T>*> all();
  std::vector<const Parameter<T>*> all() const;

  template <typename U>
  ModelParameters<U> cast() const {
    ModelParameters<U> out;
    auto dst = out.all();
    const auto src = all();
    for (std::size_t i = 0; i < src.size(); ++i) {
      *dst[i] = Parameter<U>(src[i]->name, src[i]->value.template cast<U>());
    }
    return out;
  }
};

class Model {
 public:
  /// Checks that the numerics layer offers every primitive the model uses
  /// (CapabilityError otherwise) and initializes parameters from `seed`.
  Model(ModelConfig config, Vocabulary vocab, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  ModelParameters<float>& params() { return params_; }
  const ModelParameters<float>& params() const { return params_; }

 private:
  ModelConfig config_;
  Vocabulary vocab_;
  ModelParameters<float> params_;
};

/// One rendered pair.
struct Example {
  std::string id;
  std::string category;
  encoder::FeatureGrid before;
  encoder::FeatureGrid after;
  std::vector<TokenSequence> refs;
  std::vector<metrics::Tokens> ref_tokens;
  /// Ground-truth changed cells as row indices into the grids.
  std::vector<int> mask_before;
  std::vector<int> mask_after;
};

std::vector<Example> make_examples(const std::vector<scenes::ScenePair>& pairs, const scenes::GridSpec& grid,
                                   const scenes::RenderConfig& render, std::uint64_t seed, const Vocabulary& vocab);

struct ModelVars {
  Var a_u;
  Var b_u;
  decoder::DecoderVars decoder;
};

template <typename T>
ModelVars bind(Graph<T>& g, ModelParameters<T>& params);

template <typename T>
ModelVars bind_constants(Graph<T>& g, const ModelParameters<T>& params);

/// Encoder graph for a batch: per-example cells plus stacked B x Cf summaries.
struct BatchEncoding {
  std::vector<encoder::EncodedVars> encoded;
  std::vector<Var> f_before;
  std::vector<Var> f_after;
  encoder::PooledVars stacked;
};

template <typename T>
BatchEncoding encode_batch(Graph<T>& g, const ModelVars& vars, std::span<const Example* const> batch,
                           const encoder::VamOptions& options);

/// Stacks per-example pooled Vars (each 1 x Cf) into B x Cf Vars.
template <typename T>
encoder::PooledVars stack_pooled(Graph<T>& g, std::span<const encoder::PooledVars> pooled);

/// Teacher-forcing inputs (BOS + words) and targets (words + EOS), padded.
struct TeacherBatch {
  std::vector<std::vector<int>> inputs;
  std::vector<std::vector<int>> targets_by_step;  // [t][b]
};
TeacherBatch teacher_batch(std::span<const TokenSequence* const> captions);

/// Greedy captions for examples, decoded in batches of `batch_size`.
std::vector<TokenSequence> caption_examples(const Model& model, std::span<const Example> examples, int max_len,
                                            int batch_size = 64);

struct ChangeMaps {
  encoder::ProbabilityMap C_b;
  encoder::ProbabilityMap C_a;
};
std::vector<ChangeMaps> changed_maps(const Model& model, std::span<const Example> examples);

/// Share of changed-map mass inside the ground-truth mask cells, both
/// images pooled: (sum C_b[mask_b] + sum C_a[mask_a]) / (sum C_b + sum C_a).
double localization_mass(const ChangeMaps& maps, const Example& example);

}  // namespace mvam::training
