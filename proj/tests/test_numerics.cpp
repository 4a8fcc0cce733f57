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
#include <limits>
#include <set>
#include <string>

#include "mvam/numerics/errors.hpp"
#include "mvam/numerics/primitives.hpp"
#include "test_util.hpp"

using namespace mvam;
using namespace mvam::testing;
using numerics::Axis;

namespace {

// Scalar probe of an op output: sum(out .* W) for a fixed random W.
Var probe(Graph<double>& g, Var out, std::uint64_t seed = 99) {
  Rng rng(seed);
  const auto& v = g.value(out);
  return g.sum(g.mul(out, g.constant(random_matrix(rng, v.rows(), v.cols()))));
}

Parameter<double> param(const char* name, Rng& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  return Parameter<double>(name, random_matrix(rng, r, c, scale));
}

}  // namespace

TEST_CASE("rng: identical seeds give identical draws, derived streams are pure") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(42);
  const Rng d1 = c.derive(7);
  c.next_u64();
  Rng d2 = c.derive(7);
  Rng d1c = d1;
  CHECK(d1c.next_u64() == d2.next_u64());
  CHECK(Rng(42).derive(7).next_u64() != Rng(42).derive(8).next_u64());
  CHECK(Rng(3).algorithm() == "mt19937_64");
}

TEST_CASE("rng: distributions stay in range and state round-trips") {
  Rng rng(5);
  double sum = 0.0, sq = 0.0;
  constexpr int kN = 20000;
  for (int i = 0; i < kN; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const auto k = rng.uniform_int(6);
    CHECK(k < 6u);
    const auto r = rng.uniform_range(-2, 2);
    CHECK(r >= -2);
    CHECK(r <= 2);
    const double z = rng.normal(1.0, 2.0);
    sum += z;
    sq += z * z;
  }
  const double mean = sum / kN;
  CHECK(mean == doctest::Approx(1.0).epsilon(0.05));
  CHECK(std::sqrt(sq / kN - mean * mean) == doctest::Approx(2.0).epsilon(0.05));

  const std::string saved = rng.state();
  const auto next = rng.next_u64();
  Rng other(0);
  other.restore(saved);
  CHECK(other.next_u64() == next);
  CHECK(other.seed() == 5);
  CHECK_THROWS_AS(other.restore("garbage"), DataError);
}

TEST_CASE("primitives: documented trivial values") {
  Graph<double> g;
  const Var z = g.constant(Matrix<double>::Zero(1, 3));
  const auto s = g.value(g.softmax(z, Axis::kWithinRows));
  for (int i = 0; i < 3; ++i) CHECK(s(0, i) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(g.value(g.sigmoid(g.constant(Matrix<double>::Zero(1, 1))))(0, 0) == 0.5);
  const auto m = g.value(g.mean(g.constant(Matrix<double>::Constant(6, 4, 2.5)), Axis::kWithinCols));
  for (int i = 0; i < 4; ++i) CHECK(m(0, i) == doctest::Approx(2.5));
}

TEST_CASE("softmax: nonnegative and normalized for logits up to 1e3 on both axes") {
  Rng rng(11);
  Graph<double> g;
  const Var x = g.constant(random_matrix(rng, 7, 9, 1000.0));
  const auto rows = g.value(g.softmax(x, Axis::kWithinRows));
  const auto cols = g.value(g.softmax(x, Axis::kWithinCols));
  CHECK(rows.minCoeff() >= 0.0);
  CHECK(cols.minCoeff() >= 0.0);
  CHECK(rows.allFinite());
  CHECK(cols.allFinite());
  for (Eigen::Index r = 0; r < rows.rows(); ++r) CHECK(std::abs(rows.row(r).sum() - 1.0) <= 1e-9);
  for (Eigen::Index c = 0; c < cols.cols(); ++c) CHECK(std::abs(cols.col(c).sum() - 1.0) <= 1e-9);

  Graph<float> gf;
  Matrix<float> big(1, 3);
  big << 0.0f, -500.0f, 600.0f;
  const auto sf = gf.value(gf.softmax(gf.constant(big), Axis::kWithinRows));
  CHECK(sf(0, 2) == 1.0f);
  CHECK(sf(0, 1) == 0.0f);
}

TEST_CASE("matmul_nt: transpose duality is bit-exact and matches dot products") {
  Rng rng(3);
  Graph<float> g;
  Matrix<float> a = random_matrix(rng, 7, 13, 5.0).cast<float>();
  Matrix<float> b = random_matrix(rng, 9, 13, 5.0).cast<float>();
  const auto ab = g.value(g.matmul_nt(g.constant(a), g.constant(b)));
  const auto ba = g.value(g.matmul_nt(g.constant(b), g.constant(a)));
  for (Eigen::Index i = 0; i < 7; ++i) {
    for (Eigen::Index j = 0; j < 9; ++j) {
      CHECK(ab(i, j) == ba(j, i));
      double dot = 0.0;
      for (Eigen::Index k = 0; k < 13; ++k) dot += static_cast<double>(a(i, k)) * b(j, k);
      CHECK(ab(i, j) == doctest::Approx(dot).epsilon(1e-5));
    }
  }
  CHECK_THROWS_AS(g.matmul_nt(g.constant(a), g.constant(Matrix<float>::Zero(2, 3))), ContractError);
}

TEST_CASE("max: gradient goes to the first maximal entry in row-major order") {
  Matrix<double> m(2, 3);
  m << 1.0, 4.0, 4.0,
       4.0, 0.0, 4.0;
  {
    Graph<double> g;
    const Var x = g.variable(m);
    g.backward(g.sum(g.max(x, Axis::kWithinRows)));
    Matrix<double> expected(2, 3);
    expected << 0, 1, 0,
                1, 0, 0;
    CHECK(g.grad(x) == expected);
  }
  {
    Graph<double> g;
    const Var x = g.variable(m);
    const Var mx = g.max(x, Axis::kWithinCols);
    CHECK(g.value(mx)(0, 2) == 4.0);
    g.backward(g.sum(mx));
    Matrix<double> expected(2, 3);
    expected << 0, 1, 1,
                1, 0, 0;
    CHECK(g.grad(x) == expected);
  }
}

TEST_CASE("gradient checks: elementwise, linear algebra and reductions") {
  Rng rng(21);
  auto a = param("a", rng, 4, 5);
  auto b = param("b", rng, 4, 5);
  auto w = param("w", rng, 5, 3);
  auto row = param("row", rng, 1, 5);
  auto col = param("col", rng, 4, 1);
  auto s = param("s", rng, 1, 1);
  auto t = param("t", rng, 3, 5);

  const std::vector<std::pair<const char*, std::function<Var(Graph<double>&)>>> cases = {
      {"matmul", [&](Graph<double>& g) { return probe(g, g.matmul(g.parameter(a), g.parameter(w))); }},
      {"matmul_nt", [&](Graph<double>& g) { return probe(g, g.matmul_nt(g.parameter(a), g.parameter(t))); }},
      {"add", [&](Graph<double>& g) { return probe(g, g.add(g.parameter(a), g.parameter(b))); }},
      {"sub", [&](Graph<double>& g) { return probe(g, g.sub(g.parameter(a), g.parameter(b))); }},
      {"mul", [&](Graph<double>& g) { return probe(g, g.mul(g.parameter(a), g.parameter(b))); }},
      {"add_row", [&](Graph<double>& g) { return probe(g, g.add_row(g.parameter(a), g.parameter(row))); }},
      {"mul_col", [&](Graph<double>& g) { return probe(g, g.mul_col(g.parameter(a), g.parameter(col))); }},
      {"scale", [&](Graph<double>& g) { return probe(g, g.scale(g.parameter(a), g.parameter(s))); }},
      {"add_scalar", [&](Graph<double>& g) { return probe(g, g.add_scalar(g.parameter(a), g.parameter(s))); }},
      {"one_minus", [&](Graph<double>& g) { return probe(g, g.one_minus(g.parameter(a))); }},
      {"sigmoid", [&](Graph<double>& g) { return probe(g, g.sigmoid(g.parameter(a))); }},
      {"tanh", [&](Graph<double>& g) { return probe(g, g.tanh(g.parameter(a))); }},
      {"square", [&](Graph<double>& g) { return probe(g, g.square(g.parameter(a))); }},
      {"softmax rows", [&](Graph<double>& g) { return probe(g, g.softmax(g.parameter(a), Axis::kWithinRows)); }},
      {"softmax cols", [&](Graph<double>& g) { return probe(g, g.softmax(g.parameter(a), Axis::kWithinCols)); }},
      {"log_softmax rows",
       [&](Graph<double>& g) { return probe(g, g.log_softmax(g.parameter(a), Axis::kWithinRows)); }},
      {"log_softmax cols",
       [&](Graph<double>& g) { return probe(g, g.log_softmax(g.parameter(a), Axis::kWithinCols)); }},
      {"max rows", [&](Graph<double>& g) { return probe(g, g.max(g.parameter(a), Axis::kWithinRows)); }},
      {"max cols", [&](Graph<double>& g) { return probe(g, g.max(g.parameter(a), Axis::kWithinCols)); }},
      {"mean rows", [&](Graph<double>& g) { return probe(g, g.mean(g.parameter(a), Axis::kWithinRows)); }},
      {"mean cols", [&](Graph<double>& g) { return probe(g, g.mean(g.parameter(a), Axis::kWithinCols)); }},
      {"sum", [&](Graph<double>& g) { return g.sum(g.square(g.parameter(a))); }},
      {"concat rows",
       [&](Graph<double>& g) { return probe(g, g.concat({g.parameter(a), g.parameter(col)}, Axis::kWithinRows)); }},
      {"concat cols",
       [&](Graph<double>& g) { return probe(g, g.concat({g.parameter(a), g.parameter(t)}, Axis::kWithinCols)); }},
      {"slices",
       [&](Graph<double>& g) {
         const Var x = g.parameter(a);
         return probe(g, g.add(g.slice_cols(x, 1, 3), g.transpose(g.slice_rows(g.transpose(x), 2, 3))));
       }},
      {"embedding",
       [&](Graph<double>& g) {
         const std::vector<int> ids = {2, 0, 2, 3};
         return probe(g, g.embedding(g.parameter(a), ids));
       }},
      {"dropout",
       [&](Graph<double>& g) {
         Rng masks(8);
         return probe(g, g.dropout(g.parameter(a), 0.5, masks));
       }},
      {"nll",
       [&](Graph<double>& g) {
         const std::vector<int> targets = {1, 4, -1, 0};
         return g.nll(g.parameter(a), targets, -1);
       }},
  };
  for (const auto& [name, build] : cases) {
    CAPTURE(name);
    const auto result = check_gradient({&a, &b, &w, &row, &col, &s, &t}, build);
    CHECK(result.max_relative_error < kGradTolerance);
  }
}

TEST_CASE("gradient check: lstm_cell") {
  Rng rng(4);
  auto x = param("x", rng, 2, 3);
  auto h = param("h", rng, 2, 4);
  auto c = param("c", rng, 2, 4);
  auto w = param("w", rng, 7, 16, 0.5);
  auto bias = param("bias", rng, 1, 16, 0.5);
  const auto result = check_gradient({&x, &h, &c, &w, &bias}, [&](Graph<double>& g) {
    const auto st = g.lstm_cell(g.parameter(x), g.parameter(h), g.parameter(c), g.parameter(w), g.parameter(bias));
    return g.add(probe(g, st.h, 1), probe(g, st.c, 2));
  });
  CHECK(result.max_relative_error < kGradTolerance);
}

TEST_CASE("nll: ignored rows contribute nothing and values match log-softmax") {
  Rng rng(6);
  const Matrix<double> logits = random_matrix(rng, 3, 5);
  const std::vector<int> targets = {4, -1, 2};
  Graph<double> g;
  const double v = g.value(g.nll(g.constant(logits), targets, -1))(0, 0);
  double expected = 0.0;
  for (int r : {0, 2}) {
    const double lse = std::log(logits.row(r).array().exp().sum());
    expected += lse - logits(r, targets[static_cast<std::size_t>(r)]);
  }
  CHECK(v == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("graph: parameters accumulate gradients across backward passes") {
  Parameter<double> p("p", Matrix<double>::Constant(1, 2, 3.0));
  for (int pass = 0; pass < 2; ++pass) {
    Graph<double> g;
    g.backward(g.sum(g.square(g.parameter(p))));
  }
  CHECK(p.grad(0, 0) == doctest::Approx(12.0));
  p.zero_grad();
  CHECK(p.grad.isZero());

  Graph<double> off(numerics::GradMode::kDisabled);
  const Var x = off.sum(off.square(off.parameter(p)));
  CHECK(off.value(x)(0, 0) == doctest::Approx(18.0));
}

TEST_CASE("finite_diff_check: quadratic, non-finite points and eps range") {
  const numerics::ScalarFunction sq = [](std::span<const double> x) { return x[0] * x[0]; };
  const std::vector<double> point = {3.0};
  const std::vector<double> grad = {6.0};
  CHECK(numerics::finite_diff_check(sq, grad, point, 1e-5).max_relative_error < 1e-6);

  const numerics::ScalarFunction singular = [](std::span<const double> x) { return std::log(x[1]); };
  const std::vector<double> p2 = {1.0, 1e-6};
  const std::vector<double> g2 = {0.0, 1.0};
  try {
    numerics::finite_diff_check(singular, g2, p2, 1e-5);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("coordinate 1") != std::string::npos);
  }
  CHECK_THROWS_AS(numerics::finite_diff_check(sq, grad, point, 0.1), ContractError);
  CHECK_THROWS_AS(numerics::finite_diff_check(sq, grad, point, 0.0), ContractError);
}

TEST_CASE("primitives: capability list covers the model's needs") {
  const std::set<std::string_view> listed(numerics::required_primitives().begin(),
                                          numerics::required_primitives().end());
  for (const char* name : {"matmul", "add", "sub", "mul", "sigmoid", "tanh", "softmax", "max", "mean", "concat",
                           "embedding", "dropout", "lstm_cell", "log_softmax", "nll"}) {
    CAPTURE(name);
    CHECK(listed.count(name) == 1);
    CHECK(numerics::has_primitive(name));
  }
  CHECK_NOTHROW(numerics::require_primitives({"matmul", "lstm_cell"}));
  CHECK_THROWS_AS(numerics::require_primitives({"matmul", "conv2d"}), CapabilityError);
}

TEST_CASE("graph: repeated evaluation is bit-identical") {
  Rng rng(9);
  const Matrix<float> x = random_matrix(rng, 6, 8).cast<float>();
  auto run = [&] {
    Graph<float> g;
    const Var v = g.constant(x);
    return Matrix<float>(g.value(g.softmax(g.matmul_nt(v, v), Axis::kWithinRows)));
  };
  CHECK(run() == run());
}
