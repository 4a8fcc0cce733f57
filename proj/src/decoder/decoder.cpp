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

#include "mvam/decoder/decoder.hpp"

#include <cmath>
#include <string>

#include "mvam/numerics/errors.hpp"

namespace mvam::decoder {

using numerics::Axis;
using numerics::GradMode;

namespace {

template <typename T>
Matrix<T> uniform_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double bound) {
  Matrix<T> m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = static_cast<T>((2.0 * rng.uniform() - 1.0) * bound);
  }
  return m;
}

template <typename T>
Parameter<T> weight(const char* name, Rng& rng, Eigen::Index in, Eigen::Index out) {
  return Parameter<T>(name, uniform_matrix<T>(rng, in, out, 1.0 / std::sqrt(static_cast<double>(in))));
}

template <typename T>
Parameter<T> zeros(const char* name, Eigen::Index cols) {
  return Parameter<T>(name, Matrix<T>::Zero(1, cols));
}

template <typename T>
Parameter<T> lstm_bias(const char* name, int hidden) {
  Matrix<T> b = Matrix<T>::Zero(1, 4 * hidden);
  b.middleCols(hidden, hidden).setOnes();
  return Parameter<T>(name, std::move(b));
}

}  // namespace

template <typename T>
DecoderParameters<T> DecoderParameters<T>::init(const DecoderConfig& c, Rng& rng) {
  if (c.feat_dim < 1 || c.hidden_dim < 1 || c.embed_dim < 1 || c.vocab_size < 4) {
    throw ContractError("DecoderParameters::init: dimensions must be positive and the vocabulary must hold "
                        "the special tokens");
  }
  DecoderParameters p;
  p.w1 = weight<T>("w1", rng, 2 * c.feat_dim, c.feat_dim);
  p.b1 = zeros<T>("b1", c.feat_dim);
  p.proj = weight<T>("proj", rng, c.feat_dim, c.hidden_dim);
  p.w2 = weight<T>("w2", rng, 3 * c.feat_dim, c.hidden_dim);
  p.b2 = zeros<T>("b2", c.hidden_dim);
  p.lstm1_w = weight<T>("lstm1_w", rng, 3 * c.hidden_dim, 4 * c.hidden_dim);
  p.lstm1_b = lstm_bias<T>("lstm1_b", c.hidden_dim);
  p.w3 = weight<T>("w3", rng, c.hidden_dim, 1);
  p.b3 = zeros<T>("b3", 1);
  p.lstm2_w = weight<T>("lstm2_w", rng, 2 * c.hidden_dim + c.embed_dim, 4 * c.hidden_dim);
  p.lstm2_b = lstm_bias<T>("lstm2_b", c.hidden_dim);
  p.w4 = weight<T>("w4", rng, c.hidden_dim, c.vocab_size);
  p.b4 = zeros<T>("b4", c.vocab_size);
  p.embedding = Parameter<T>("embedding", uniform_matrix<T>(rng, c.vocab_size, c.embed_dim, 0.1));
  return p;
}

template <typename T>
std::vector<Parameter<T>*> DecoderParameters<T>::all() {
  return {&w1, &b1, &proj, &w2, &b2, &lstm1_w, &lstm1_b, &w3, &b3, &lstm2_w, &lstm2_b, &w4, &b4, &embedding};
}

template <typename T>
std::vector<const Parameter<T>*> DecoderParameters<T>::all() const {
  return {&w1, &b1, &proj, &w2, &b2, &lstm1_w, &lstm1_b, &w3, &b3, &lstm2_w, &lstm2_b, &w4, &b4, &embedding};
}

template <typename T>
DecoderVars bind(Graph<T>& g, DecoderParameters<T>& p) {
  return DecoderVars{g.parameter(p.w1),      g.parameter(p.b1),      g.parameter(p.proj),
                     g.parameter(p.w2),      g.parameter(p.b2),      g.parameter(p.lstm1_w),
                     g.parameter(p.lstm1_b), g.parameter(p.w3),      g.parameter(p.b3),
                     g.parameter(p.lstm2_w), g.parameter(p.lstm2_b), g.parameter(p.w4),
                     g.parameter(p.b4),      g.parameter(p.embedding)};
}

template <typename T>
DecoderVars bind_constants(Graph<T>& g, const DecoderParameters<T>& p) {
  return DecoderVars{g.constant(p.w1.value),      g.constant(p.b1.value),      g.constant(p.proj.value),
                     g.constant(p.w2.value),      g.constant(p.b2.value),      g.constant(p.lstm1_w.value),
                     g.constant(p.lstm1_b.value), g.constant(p.w3.value),      g.constant(p.b3.value),
                     g.constant(p.lstm2_w.value), g.constant(p.lstm2_b.value), g.constant(p.w4.value),
                     g.constant(p.b4.value),      g.constant(p.embedding.value)};
}

template <typename T>
Var fuse_changed(Graph<T>& g, const DecoderVars& p, Var h_d_a2b, Var h_d_b2a) {
  if (g.value(h_d_a2b).cols() != g.value(h_d_b2a).cols() ||
      2 * g.value(h_d_a2b).cols() != g.value(p.w1).rows()) {
    throw ContractError("fuse_changed: expected two " + std::to_string(g.value(p.w1).rows() / 2) +
                        "-dimensional changed summaries, got " + std::to_string(g.value(h_d_a2b).cols()) +
                        " and " + std::to_string(g.value(h_d_b2a).cols()));
  }
  return g.linear(g.concat({h_d_a2b, h_d_b2a}, Axis::kWithinRows), p.w1, p.b1);
}

template <typename T>
VisualContext visual_from_fused(Graph<T>& g, const DecoderVars& p, Var h_d, Var h_bb, Var h_ba) {
  VisualContext v;
  v.h_d = h_d;
  v.projected[0] = g.matmul(h_d, p.proj);
  v.projected[1] = g.matmul(h_bb, p.proj);
  v.projected[2] = g.matmul(h_ba, p.proj);
  v.lstm1_input = g.linear(g.concat({h_d, h_bb, h_ba}, Axis::kWithinRows), p.w2, p.b2);
  return v;
}

template <typename T>
VisualContext prepare_visual(Graph<T>& g, const DecoderVars& p, Var h_d_a2b, Var h_d_b2a, Var h_bb, Var h_ba) {
  return visual_from_fused(g, p, fuse_changed(g, p, h_d_a2b, h_d_b2a), h_bb, h_ba);
}

template <typename T>
StateVars initial_state(Graph<T>& g, Eigen::Index batch, int hidden_dim) {
  const Matrix<T> zero = Matrix<T>::Zero(batch, hidden_dim);
  return StateVars{g.constant(zero), g.constant(zero), g.constant(zero), g.constant(zero), 0};
}

template <typename T>
StepVars decode_step(Graph<T>& g, const DecoderVars& p, const VisualContext& visual, const StateVars& state,
                     std::span<const int> prev_tokens, Mode mode, T dropout, Rng* rng) {
  const auto vocab = g.value(p.embedding).rows();
  for (int tok : prev_tokens) {
    if (tok < 0 || tok >= vocab) {
      throw ContractError("decode_step: token id " + std::to_string(tok) + " is not in the vocabulary of " +
                          std::to_string(vocab));
    }
  }
  const auto lstm1 = g.lstm_cell(g.concat({visual.lstm1_input, state.h2}, Axis::kWithinRows), state.h1,
                                 state.c1, p.lstm1_w, p.lstm1_b);

  Var scores[3];
  for (int i = 0; i < 3; ++i) {
    scores[i] = g.add_row(g.matmul(g.tanh(g.add(visual.projected[i], lstm1.h)), p.w3), p.b3);
  }
  const Var attention = g.softmax(g.concat({scores[0], scores[1], scores[2]}, Axis::kWithinRows), Axis::kWithinRows);
  Var context = g.mul_col(visual.projected[0], g.slice_cols(attention, 0, 1));
  for (int i = 1; i < 3; ++i) {
    context = g.add(context, g.mul_col(visual.projected[i], g.slice_cols(attention, i, 1)));
  }

  const Var embedded = g.embedding(p.embedding, prev_tokens);
  const auto lstm2 = g.lstm_cell(g.concat({context, embedded}, Axis::kWithinRows), state.h2, state.c2,
                                 p.lstm2_w, p.lstm2_b);

  Var top = lstm2.h;
  if (mode == Mode::kTrain && dropout > T(0)) {
    if (rng == nullptr) throw ContractError("decode_step: train mode with dropout needs an rng");
    top = g.dropout(top, dropout, *rng);
  }
  StepVars out;
  out.logits = g.linear(top, p.w4, p.b4);
  out.attention = attention;
  out.next = StateVars{lstm1.h, lstm1.c, lstm2.h, lstm2.c, state.t + 1};
  return out;
}

template <typename T>
std::vector<Var> teacher_forced_logits(Graph<T>& g, const DecoderVars& p, const VisualContext& visual,
                                       const std::vector<std::vector<int>>& inputs, int hidden_dim, Mode mode,
                                       T dropout, Rng* rng) {
  if (inputs.empty()) throw ContractError("teacher_forced_logits: empty batch");
  const std::size_t steps = inputs.front().size();
  for (const auto& row : inputs) {
    if (row.size() != steps) throw ContractError("teacher_forced_logits: inputs must be padded to equal length");
  }
  StateVars state = initial_state(g, static_cast<Eigen::Index>(inputs.size()), hidden_dim);
  std::vector<Var> logits;
  logits.reserve(steps);
  std::vector<int> column(inputs.size());
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t b = 0; b < inputs.size(); ++b) column[b] = inputs[b][t];
    StepVars step = decode_step(g, p, visual, state, column, mode, dropout, rng);
    logits.push_back(step.logits);
    state = step.next;
  }
  return logits;
}

template <typename T>
std::vector<TokenSequence> greedy_decode(const DecoderParameters<T>& params, const PooledBatch<T>& pooled,
                                         int hidden_dim, int max_len) {
  if (max_len < 1) throw ContractError("greedy_decode: max_len must be at least 1");
  const Eigen::Index batch = pooled.h_bb.rows();
  Graph<T> g(GradMode::kDisabled);
  const DecoderVars p = bind_constants(g, params);
  const VisualContext visual = prepare_visual(g, p, g.constant(pooled.h_d_a2b), g.constant(pooled.h_d_b2a),
                                              g.constant(pooled.h_bb), g.constant(pooled.h_ba));
  StateVars state = initial_state(g, batch, hidden_dim);
  std::vector<TokenSequence> out(static_cast<std::size_t>(batch));
  std::vector<bool> done(static_cast<std::size_t>(batch), false);
  std::vector<int> prev(static_cast<std::size_t>(batch), Vocabulary::kBos);
  std::size_t remaining = static_cast<std::size_t>(batch);
  for (int t = 0; t < max_len && remaining > 0; ++t) {
    StepVars step = decode_step(g, p, visual, state, prev, Mode::kEval, T(0), nullptr);
    const Matrix<T>& logits = g.value(step.logits);
    for (Eigen::Index b = 0; b < batch; ++b) {
      const auto bi = static_cast<std::size_t>(b);
      if (done[bi]) {
        prev[bi] = Vocabulary::kPad;
        continue;
      }
      Eigen::Index best = 0;
      for (Eigen::Index k = 1; k < logits.cols(); ++k) {
        if (logits(b, k) > logits(b, best)) best = k;
      }
      const int tok = static_cast<int>(best);
      if (tok == Vocabulary::kEos) {
        done[bi] = true;
        --remaining;
        prev[bi] = Vocabulary::kPad;
      } else {
        out[bi].push_back(tok);
        prev[bi] = tok;
      }
    }
    state = step.next;
  }
  return out;
}

#define MVAM_DECODER_INSTANTIATE(T)                                                                          \
  template struct DecoderParameters<T>;                                                                      \
  template DecoderVars bind<T>(Graph<T>&, DecoderParameters<T>&);                                            \
  template DecoderVars bind_constants<T>(Graph<T>&, const DecoderParameters<T>&);                            \
  template Var fuse_changed<T>(Graph<T>&, const DecoderVars&, Var, Var);                                     \
  template VisualContext visual_from_fused<T>(Graph<T>&, const DecoderVars&, Var, Var, Var);                 \
  template VisualContext prepare_visual<T>(Graph<T>&, const DecoderVars&, Var, Var, Var, Var);               \
  template StateVars initial_state<T>(Graph<T>&, Eigen::Index, int);                                         \
  template StepVars decode_step<T>(Graph<T>&, const DecoderVars&, const VisualContext&, const StateVars&,    \
                                   std::span<const int>, Mode, T, Rng*);                                     \
  template std::vector<Var> teacher_forced_logits<T>(Graph<T>&, const DecoderVars&, const VisualContext&,    \
                                                     const std::vector<std::vector<int>>&, int, Mode, T,     \
                                                     Rng*);                                                  \
  template std::vector<TokenSequence> greedy_decode<T>(const DecoderParameters<T>&, const PooledBatch<T>&,  \
                                                       int, int);

MVAM_DECODER_INSTANTIATE(float)
MVAM_DECODER_INSTANTIATE(double)

#undef MVAM_DECODER_INSTANTIATE

// -- value-level API -----------------------------------------------------------

DecoderState DecoderState::zeros(int hidden_dim) {
  DecoderState s;
  s.h1 = s.c1 = s.h2 = s.c2 = Eigen::RowVectorXd::Zero(hidden_dim);
  return s;
}

Eigen::RowVectorXd fuse_changed(const DecoderParameters<double>& params, const Eigen::RowVectorXd& h_d_a2b,
                                const Eigen::RowVectorXd& h_d_b2a) {
  Graph<double> g(GradMode::kDisabled);
  const DecoderVars p = bind_constants(g, params);
  const Var h = fuse_changed(g, p, g.constant(Matrix<double>(h_d_a2b)), g.constant(Matrix<double>(h_d_b2a)));
  return g.value(h).row(0);
}

StepResult decode_step(const DecoderParameters<double>& params, const DecoderState& state, int prev_token,
                       const Eigen::RowVectorXd& h_d, const Eigen::RowVectorXd& h_bb,
                       const Eigen::RowVectorXd& h_ba, Mode mode, double dropout, Rng* rng) {
  Graph<double> g(GradMode::kDisabled);
  const DecoderVars p = bind_constants(g, params);
  const VisualContext visual = visual_from_fused(g, p, g.constant(Matrix<double>(h_d)),
                                                 g.constant(Matrix<double>(h_bb)), g.constant(Matrix<double>(h_ba)));
  const StateVars sv{g.constant(Matrix<double>(state.h1)), g.constant(Matrix<double>(state.c1)),
                     g.constant(Matrix<double>(state.h2)), g.constant(Matrix<double>(state.c2)), state.t};
  const int tokens[1] = {prev_token};
  const StepVars step = decode_step(g, p, visual, sv, tokens, mode, dropout, rng);
  StepResult out;
  out.logits = g.value(step.logits).row(0);
  const auto& att = g.value(step.attention);
  out.attention = AttentionWeights{att(0, 0), att(0, 1), att(0, 2)};
  out.next.h1 = g.value(step.next.h1).row(0);
  out.next.c1 = g.value(step.next.c1).row(0);
  out.next.h2 = g.value(step.next.h2).row(0);
  out.next.c2 = g.value(step.next.c2).row(0);
  out.next.t = step.next.t;
  return out;
}

TokenSequence greedy_decode(const DecoderParameters<double>& params, const encoder::EncoderOutput& encoded,
                            int max_len) {
  PooledBatch<double> pooled{Matrix<double>(encoded.h_d_a2b), Matrix<double>(encoded.h_d_b2a),
                             Matrix<double>(encoded.h_bb), Matrix<double>(encoded.h_ba)};
  return greedy_decode(params, pooled, static_cast<int>(params.proj.value.cols()), max_len).front();
}

}  // namespace mvam::decoder
