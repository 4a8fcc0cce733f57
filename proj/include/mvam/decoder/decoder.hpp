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

// Top-down sentence decoder.
//
// The two changed summaries are fused by a linear layer, then every step runs
//
//   h1_t = LSTM1([W2 [h_d, h_bb, h_ba] + b2, h2_{t-1}])
//   a_t  = softmax_i(W3 tanh(P h_i + h1_t) + b3),   i in {d, bb, ba}
//   h2_t = LSTM2([sum_i a_{i,t} P h_i, embed(y_{t-1})])
//   logits_t = W4 dropout(h2_t) + b4
//
// P is one shared Cf -> D_h projection, needed because the summaries live in
// feature space while h1 lives in hidden space. Vectors are rows; a batch of
// B sequences is decoded in lock step as B x D matrices.

#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "mvam/decoder/vocabulary.hpp"
#include "mvam/encoder/vam.hpp"
#include "mvam/numerics/graph.hpp"
#include "mvam/numerics/rng.hpp"

namespace mvam::decoder {

using numerics::Graph;
using numerics::Matrix;
using numerics::Parameter;
using numerics::Rng;
using numerics::Var;

enum class Mode { kTrain, kEval };

struct DecoderConfig {
  int feat_dim = 16;
  int hidden_dim = 512;
  int embed_dim = 300;
  int vocab_size = 0;
  double dropout = 0.5;
};

template <typename T>
struct DecoderParameters {
  Parameter<T> w1, b1;            // fusion, 2Cf -> Cf
  Parameter<T> proj;              // shared projection, Cf -> D_h
  Parameter<T> w2, b2;            // visual input, 3Cf -> D_h
  Parameter<T> lstm1_w, lstm1_b;  // input 2 D_h
  Parameter<T> w3, b3;            // attention, D_h -> 1
  Parameter<T> lstm2_w, lstm2_b;  // input D_h + E
  Parameter<T> w4, b4;            // logits, D_h -> V
  Parameter<T> embedding;         // V x E

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases except a
  /// forget-gate bias of 1, Uniform(-0.1, 0.1) embeddings.
  static DecoderParameters init(const DecoderConfig& config, Rng& rng);
  std::vector<Parameter<T>*> all();
  std::vector<const Parameter<T>*> all() const;
};

/// Parameters bound to one graph.
struct DecoderVars {
  Var w1, b1, proj, w2, b2, lstm1_w, lstm1_b, w3, b3, lstm2_w, lstm2_b, w4, b4, embedding;
};

template <typename T>
DecoderVars bind(Graph<T>& g, DecoderParameters<T>& params);

/// Parameters entered as constants (no gradient).
template <typename T>
DecoderVars bind_constants(Graph<T>& g, const DecoderParameters<T>& params);

/// Per-sequence visual context, computed once and held fixed for all steps.
struct VisualContext {
  Var h_d;
  Var projected[3];  // P h_d, P h_bb, P h_ba
  Var lstm1_input;   // W2 [h_d, h_bb, h_ba] + b2
};

struct StateVars {
  Var h1, c1, h2, c2;
  int t = 0;
};

struct StepVars {
  Var logits;     // B x V
  Var attention;  // B x 3, columns (d, bb, ba)
  StateVars next;
};

/// h_d = [h_d_a2b, h_d_b2a] W1 + b1.
template <typename T>
Var fuse_changed(Graph<T>& g, const DecoderVars& p, Var h_d_a2b, Var h_d_b2a);

template <typename T>
VisualContext prepare_visual(Graph<T>& g, const DecoderVars& p, Var h_d_a2b, Var h_d_b2a, Var h_bb, Var h_ba);

/// Same as prepare_visual but starting from an already fused h_d.
template <typename T>
VisualContext visual_from_fused(Graph<T>& g, const DecoderVars& p, Var h_d, Var h_bb, Var h_ba);

/// Zero hidden and cell states for a batch.
template <typename T>
StateVars initial_state(Graph<T>& g, Eigen::Index batch, int hidden_dim);

/// One decoding step. `rng` is required in train mode (dropout masks).
template <typename T>
StepVars decode_step(Graph<T>& g, const DecoderVars& p, const VisualContext& visual, const StateVars& state,
                     std::span<const int> prev_tokens, Mode mode, T dropout, Rng* rng);

/// Teacher-forced logits for a padded batch: inputs[b] is BOS + caption,
/// padded with PAD. Returns one B x V logits Var per step.
template <typename T>
std::vector<Var> teacher_forced_logits(Graph<T>& g, const DecoderVars& p, const VisualContext& visual,
                                       const std::vector<std::vector<int>>& inputs, int hidden_dim, Mode mode,
                                       T dropout, Rng* rng);

/// Pooled encoder summaries for a batch, one row per pair.
template <typename T>
struct PooledBatch {
  Matrix<T> h_d_a2b, h_d_b2a, h_bb, h_ba;
};

/// Greedy argmax decoding from BOS until EOS or max_len words (eval mode).
/// Ties pick the lowest token id.
template <typename T>
std::vector<TokenSequence> greedy_decode(const DecoderParameters<T>& params, const PooledBatch<T>& pooled,
                                         int hidden_dim, int max_len);

// -- value-level single-sequence API (64-bit) ---------------------------------

struct DecoderState {
  Eigen::RowVectorXd h1, c1, h2, c2;
  int t = 0;

  static DecoderState zeros(int hidden_dim);
};

struct AttentionWeights {
  double a_d = 0.0;
  double a_bb = 0.0;
  double a_ba = 0.0;
};

struct StepResult {
  Eigen::RowVectorXd logits;
  AttentionWeights attention;
  DecoderState next;
};

Eigen::RowVectorXd fuse_changed(const DecoderParameters<double>& params, const Eigen::RowVectorXd& h_d_a2b,
                                const Eigen::RowVectorXd& h_d_b2a);

/// One step for a single sequence; h_d is the already fused changed summary.
StepResult decode_step(const DecoderParameters<double>& params, const DecoderState& state, int prev_token,
                       const Eigen::RowVectorXd& h_d, const Eigen::RowVectorXd& h_bb,
                       const Eigen::RowVectorXd& h_ba, Mode mode, double dropout, Rng* rng);

TokenSequence greedy_decode(const DecoderParameters<double>& params, const encoder::EncoderOutput& encoded,
                            int max_len);

}  // namespace mvam::decoder
