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


#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "mvam/decoder/decoder.hpp"
#include "mvam/decoder/vocabulary.hpp"
#include "mvam/numerics/errors.hpp"
#include "test_util.hpp"

using namespace mvam;
using namespace mvam::testing;
using decoder::DecoderConfig;
using decoder::DecoderParameters;
using decoder::DecoderState;
using decoder::Mode;
using decoder::Vocabulary;
using Row = Eigen::RowVectorXd;

namespace {

constexpr DecoderConfig kSmall{.feat_dim = 4, .hidden_dim = 5, .embed_dim = 3, .vocab_size = 9, .dropout = 0.5};

DecoderParameters<double> small_params(std::uint64_t seed) {
  Rng rng(seed);
  return DecoderParameters<double>::init(kSmall, rng);
}

Row random_row(Rng& rng, int n, double scale = 1.0) { return Row(random_matrix(rng, 1, n, scale)); }

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Plain LSTM with gates packed (i, f, g, o) and input [x, h].
std::pair<Row, Row> lstm(const Row& x, const Row& h, const Row& c, const Matrix<double>& w, const Matrix<double>& b) {
  Row in(x.size() + h.size());
  in << x, h;
  const Row z = in * w + b;
  const Eigen::Index n = h.size();
  Row h_next(n), c_next(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double ig = sig(z(k)), fg = sig(z(n + k)), gg = std::tanh(z(2 * n + k)), og = sig(z(3 * n + k));
    c_next(k) = fg * c(k) + ig * gg;
    h_next(k) = og * std::tanh(c_next(k));
  }
  return {h_next, c_next};
}

struct OracleStep {
  Row logits;
  double att[3];
  Row h1, c1, h2, c2;
};

OracleStep oracle_step(const DecoderParameters<double>& p, const DecoderState& s, int prev, const Row& h_d,
                       const Row& h_bb, const Row& h_ba) {
  OracleStep o;
  Row visual_in(3 * h_d.size());
  visual_in << h_d, h_bb, h_ba;
  const Row visual = visual_in * p.w2.value + p.b2.value;
  Row x1(visual.size() + s.h2.size());
  x1 << visual, s.h2;
  std::tie(o.h1, o.c1) = lstm(x1, s.h1, s.c1, p.lstm1_w.value, p.lstm1_b.value);
  const Row projected[3] = {h_d * p.proj.value, h_bb * p.proj.value, h_ba * p.proj.value};
  double scores[3], top = -1e300;
  for (int i = 0; i < 3; ++i) {
    const Row a = (projected[i] + o.h1).array().tanh().matrix();
    scores[i] = (a * p.w3.value)(0, 0) + p.b3.value(0, 0);
    top = std::max(top, scores[i]);
  }
  double z = 0.0;
  for (double sc : scores) z += std::exp(sc - top);
  Row context = Row::Zero(projected[0].size());
  for (int i = 0; i < 3; ++i) {
    o.att[i] = std::exp(scores[i] - top) / z;
    context += o.att[i] * projected[i];
  }
  Row x2(context.size() + p.embedding.value.cols());
  x2 << context, p.embedding.value.row(prev);
  std::tie(o.h2, o.c2) = lstm(x2, s.h2, s.c2, p.lstm2_w.value, p.lstm2_b.value);
  o.logits = o.h2 * p.w4.value + p.b4.value;
  return o;
}

double max_abs(const Row& a, const Row& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("vocabulary: dense ids with distinct special tokens") {
  const std::vector<std::string> words = {"the", "cube", "moved"};
  const Vocabulary v(words);
  CHECK(v.size() == 7);
  CHECK(v.id("the") == 4);
  CHECK(v.token(Vocabulary::kEos) != v.token(Vocabulary::kBos));
  CHECK(v.token(Vocabulary::kPad) != v.token(Vocabulary::kUnk));
  for (int i = 0; i < v.size(); ++i) CHECK(v.id(v.token(i)) == i);
  CHECK(v.id("sphere") == Vocabulary::kUnk);
  const std::vector<std::string> sentence = {"the", "cube", "moved"};
  const auto ids = v.encode(sentence);
  CHECK(v.decode(ids) == "the cube moved");
  const std::vector<int> with_specials = {Vocabulary::kBos, 4, 5, Vocabulary::kEos, Vocabulary::kPad};
  CHECK(v.decode(with_specials) == "the cube");

  const std::vector<std::string> dup = {"a", "b", "a"};
  CHECK_THROWS((Vocabulary(dup)));
}

TEST_CASE("vocabulary: file round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "mvam_vocab_test";
  std::filesystem::create_directories(dir);
  const std::vector<std::string> words = {"red", "blue", "changed"};
  const Vocabulary v(words);
  v.save(dir / "vocab.txt");
  CHECK(Vocabulary::load(dir / "vocab.txt") == v);
  std::filesystem::remove_all(dir);
}

TEST_CASE("fuse: selector weights, constant maps and a matrix-vector oracle") {
  auto p = small_params(1);
  Rng rng(2);
  const Row a2b = random_row(rng, 4);
  const Row b2a = random_row(rng, 4);

  p.w1.value.setZero();
  p.w1.value.topRows(4) = Matrix<double>::Identity(4, 4);
  p.b1.value.setZero();
  CHECK(decoder::fuse_changed(p, a2b, b2a) == a2b);

  p.w1.value.setZero();
  p.b1.value = random_matrix(rng, 1, 4);
  CHECK(decoder::fuse_changed(p, a2b, b2a) == Row(p.b1.value));

  p = small_params(3);
  const Row fused = decoder::fuse_changed(p, a2b, b2a);
  for (int j = 0; j < 4; ++j) {
    double acc = p.b1.value(0, j);
    for (int k = 0; k < 4; ++k) acc += a2b(k) * p.w1.value(k, j) + b2a(k) * p.w1.value(4 + k, j);
    CHECK(fused(j) == doctest::Approx(acc).epsilon(1e-12));
  }
  CHECK_THROWS_AS(decoder::fuse_changed(p, a2b, random_row(rng, 3)), ContractError);
}

TEST_CASE("decode_step: matches an independent two-step oracle") {
  const auto p = small_params(4);
  Rng rng(5);
  const Row h_d = random_row(rng, 4), h_bb = random_row(rng, 4), h_ba = random_row(rng, 4);
  DecoderState state = DecoderState::zeros(5);
  DecoderState oracle_state = state;
  int prev = Vocabulary::kBos;
  for (int step = 0; step < 3; ++step) {
    const auto r = decoder::decode_step(p, state, prev, h_d, h_bb, h_ba, Mode::kEval, 0.5, nullptr);
    const auto o = oracle_step(p, oracle_state, prev, h_d, h_bb, h_ba);
    CHECK(max_abs(r.logits, o.logits) < 1e-12);
    CHECK(r.attention.a_d == doctest::Approx(o.att[0]).epsilon(1e-12));
    CHECK(r.attention.a_bb == doctest::Approx(o.att[1]).epsilon(1e-12));
    CHECK(r.attention.a_ba == doctest::Approx(o.att[2]).epsilon(1e-12));
    CHECK(max_abs(r.next.h2, o.h2) < 1e-12);
    CHECK(r.next.t == step + 1);
    state = r.next;
    oracle_state.h1 = o.h1;
    oracle_state.c1 = o.c1;
    oracle_state.h2 = o.h2;
    oracle_state.c2 = o.c2;
    prev = 4 + step;
  }
}

TEST_CASE("decode_step: zero attention weights give uniform attention") {
  auto p = small_params(6);
  p.w3.value.setZero();
  Rng rng(7);
  const auto r = decoder::decode_step(p, DecoderState::zeros(5), Vocabulary::kBos, random_row(rng, 4),
                                      random_row(rng, 4), random_row(rng, 4), Mode::kEval, 0.0, nullptr);
  CHECK(r.attention.a_d == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(r.attention.a_bb == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(r.attention.a_ba == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("decode_step: rigged output column wins for any state; attention normalized") {
  auto p = small_params(8);
  p.w4.value.setZero();
  p.b4.value.setZero();
  p.b4.value(0, 6) = 50.0;
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    DecoderState s = DecoderState::zeros(5);
    s.h1 = random_row(rng, 5);
    s.c1 = random_row(rng, 5);
    s.h2 = random_row(rng, 5);
    s.c2 = random_row(rng, 5);
    const int prev = static_cast<int>(rng.uniform_int(9));
    const auto r = decoder::decode_step(p, s, prev, random_row(rng, 4, 3.0), random_row(rng, 4, 3.0),
                                        random_row(rng, 4, 3.0), Mode::kEval, 0.0, nullptr);
    Eigen::Index best = 0;
    r.logits.maxCoeff(&best);
    CHECK(best == 6);
    const auto& a = r.attention;
    CHECK(a.a_d >= 0.0);
    CHECK(a.a_bb >= 0.0);
    CHECK(a.a_ba >= 0.0);
    CHECK(std::abs(a.a_d + a.a_bb + a.a_ba - 1.0) <= 1e-9);
  }
}

TEST_CASE("decode_step: unknown token ids are rejected") {
  const auto p = small_params(10);
  const Row z = Row::Zero(4);
  CHECK_THROWS_AS(decoder::decode_step(p, DecoderState::zeros(5), 9, z, z, z, Mode::kEval, 0.0, nullptr),
                  ContractError);
  CHECK_THROWS_AS(decoder::decode_step(p, DecoderState::zeros(5), -1, z, z, z, Mode::kEval, 0.0, nullptr),
                  ContractError);
}

TEST_CASE("decode_step: dropout only acts in train mode") {
  const auto p = small_params(11);
  Rng rng(12);
  const Row h_d = random_row(rng, 4), h_bb = random_row(rng, 4), h_ba = random_row(rng, 4);
  const auto s = DecoderState::zeros(5);
  const auto eval = decoder::decode_step(p, s, 1, h_d, h_bb, h_ba, Mode::kEval, 0.5, nullptr);
  Rng masks(3);
  const auto train = decoder::decode_step(p, s, 1, h_d, h_bb, h_ba, Mode::kTrain, 0.5, &masks);
  CHECK(max_abs(eval.next.h2, train.next.h2) == 0.0);
  CHECK(max_abs(eval.logits, train.logits) > 0.0);
}

namespace {

encoder::EncoderOutput random_encoding(Rng& rng) {
  encoder::EncoderOutput e;
  e.h_d_a2b = random_row(rng, 4);
  e.h_d_b2a = random_row(rng, 4);
  e.h_bb = random_row(rng, 4);
  e.h_ba = random_row(rng, 4);
  return e;
}

}  // namespace

TEST_CASE("greedy: EOS-favoring model gives an empty caption") {
  auto p = small_params(13);
  p.w4.value.setZero();
  p.b4.value.setZero();
  p.b4.value(0, Vocabulary::kEos) = 10.0;
  Rng rng(14);
  CHECK(decoder::greedy_decode(p, random_encoding(rng), 20).empty());
}

TEST_CASE("greedy: a model that never emits EOS stops at max_len") {
  auto p = small_params(15);
  p.w4.value.setZero();
  p.b4.value.setZero();
  p.b4.value(0, 7) = 10.0;
  Rng rng(16);
  const auto enc = random_encoding(rng);
  for (int max_len : {1, 5, 20}) {
    const auto seq = decoder::greedy_decode(p, enc, max_len);
    CHECK(seq == decoder::TokenSequence(static_cast<std::size_t>(max_len), 7));
  }
  CHECK_THROWS_AS(decoder::greedy_decode(p, enc, 0), ContractError);
}

TEST_CASE("greedy: deterministic and batch decoding agrees with single decoding") {
  const auto p = small_params(17);
  Rng rng(18);
  std::vector<encoder::EncoderOutput> encs;
  for (int i = 0; i < 4; ++i) encs.push_back(random_encoding(rng));
  decoder::PooledBatch<double> batch;
  batch.h_d_a2b.resize(4, 4);
  batch.h_d_b2a.resize(4, 4);
  batch.h_bb.resize(4, 4);
  batch.h_ba.resize(4, 4);
  for (int i = 0; i < 4; ++i) {
    batch.h_d_a2b.row(i) = encs[i].h_d_a2b;
    batch.h_d_b2a.row(i) = encs[i].h_d_b2a;
    batch.h_bb.row(i) = encs[i].h_bb;
    batch.h_ba.row(i) = encs[i].h_ba;
  }
  const auto together = decoder::greedy_decode(p, batch, 5, 12);
  for (int i = 0; i < 4; ++i) {
    const auto single = decoder::greedy_decode(p, encs[i], 12);
    CHECK(single == decoder::greedy_decode(p, encs[i], 12));
    CHECK(together[static_cast<std::size_t>(i)] == single);
  }
}

namespace {

struct StepProbe {
  DecoderParameters<double> p = small_params(19);
  Parameter<double> a2b, b2a, hbb, hba;
  Matrix<double> wl, wa;
  Rng mask_seed{21};

  StepProbe() {
    // Moderate weights keep the gates unsaturated, and a sharper attention
    // layer keeps the first LSTM's gradients above finite-difference noise.
    Rng rng(20);
    for (auto* w : p.all()) w->value = random_matrix(rng, w->value.rows(), w->value.cols(), 0.3);
    p.w3.value *= 3.0;
    a2b = Parameter<double>("a2b", random_matrix(rng, 2, 4));
    b2a = Parameter<double>("b2a", random_matrix(rng, 2, 4));
    hbb = Parameter<double>("hbb", random_matrix(rng, 2, 4));
    hba = Parameter<double>("hba", random_matrix(rng, 2, 4));
    Rng wr(22);
    wl = random_matrix(wr, 2, 9);
    wa = random_matrix(wr, 2, 3);
  }

  Var build(Graph<double>& g, Mode mode) {
    Rng masks = mask_seed;
    const auto vars = decoder::bind(g, p);
    const auto visual = decoder::prepare_visual<double>(g, vars, g.parameter(a2b), g.parameter(b2a),
                                                        g.parameter(hbb), g.parameter(hba));
    auto state = decoder::initial_state<double>(g, 2, 5);
    Var total = g.constant(Matrix<double>::Zero(1, 1));
    std::vector<int> prev = {Vocabulary::kBos, Vocabulary::kBos};
    for (int t = 0; t < 2; ++t) {
      const auto step = decoder::decode_step<double>(g, vars, visual, state, prev, mode, 0.5, &masks);
      total = g.add(total, g.sum(g.mul(step.logits, g.constant(wl))));
      total = g.add(total, g.sum(g.mul(step.attention, g.constant(wa))));
      state = step.next;
      prev = {5, 8};
    }
    return total;
  }
};

}  // namespace

TEST_CASE("gradient check: two decoding steps w.r.t. all weights and encoder summaries") {
  for (const Mode mode : {Mode::kEval, Mode::kTrain}) {
    CAPTURE(static_cast<int>(mode));
    StepProbe probe;
    // b3 shifts all three attention logits equally, so its gradient is
    // identically zero and a relative comparison would only measure noise.
    // The first LSTM reaches the logits only through the attention weights;
    // its weights are checked against an attention functional below.
    std::vector<Parameter<double>*> params;
    for (auto* w : probe.p.all()) {
      if (w != &probe.p.b3 && w != &probe.p.lstm1_w && w != &probe.p.lstm1_b) params.push_back(w);
    }
    for (auto* extra : {&probe.a2b, &probe.b2a, &probe.hbb, &probe.hba}) params.push_back(extra);
    const auto result = check_gradient(params, [&](Graph<double>& g) { return probe.build(g, mode); });
    CAPTURE(result.worst_index);
    CAPTURE(result.analytic_at_worst);
    CAPTURE(result.numeric_at_worst);
    CHECK(result.max_relative_error < kGradTolerance);

    probe.p.b3.zero_grad();
    Graph<double> g;
    g.backward(probe.build(g, mode));
    CHECK(std::abs(probe.p.b3.grad(0, 0)) < 1e-12);
  }
}

TEST_CASE("gradient check: attention weights alone") {
  StepProbe probe;
  probe.wl.setZero();
  std::vector<Parameter<double>*> params = {&probe.p.w3,   &probe.p.proj, &probe.p.lstm1_w, &probe.p.lstm1_b,
                                            &probe.p.w2,   &probe.p.b2,   &probe.p.w1,      &probe.p.lstm2_w,
                                            &probe.a2b,    &probe.hbb,    &probe.hba};
  const auto result = check_gradient(params, [&](Graph<double>& g) { return probe.build(g, Mode::kEval); });
  CHECK(result.max_relative_error < kGradTolerance);
}

TEST_CASE("gradient check: fusion layer") {
  Rng rng(23);
  auto p = small_params(24);
  Parameter<double> a2b("a2b", random_matrix(rng, 3, 4));
  Parameter<double> b2a("b2a", random_matrix(rng, 3, 4));
  const Matrix<double> w = random_matrix(rng, 3, 4);
  const auto result = check_gradient({&p.w1, &p.b1, &a2b, &b2a}, [&](Graph<double>& g) {
    const auto vars = decoder::bind(g, p);
    const Var fused = decoder::fuse_changed<double>(g, vars, g.parameter(a2b), g.parameter(b2a));
    return g.sum(g.square(g.mul(fused, g.constant(w))));
  });
  CHECK(result.max_relative_error < kGradTolerance);
}
