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

// Tape-based reverse-mode differentiation over dense row-major matrices.
//
// A Graph records every operation applied to its Vars in creation order;
// backward() walks the tape in reverse, so no explicit topological sort is
// needed. Values are 2-D: a batch of row vectors is a B x D matrix, a
// feature grid is a (W*H) x Cf matrix with cells in row-major (y outer,
// x inner) order, and scalars are 1 x 1.
//
// Max-reductions route gradient to the first maximal element in row-major
// order when several entries tie; the forward value is unaffected.

#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mvam/numerics/rng.hpp"

namespace mvam::numerics {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Learned tensor with its accumulated gradient.
template <typename T>
struct Parameter {
  std::string name;
  Matrix<T> value;
  Matrix<T> grad;

  Parameter() = default;
  Parameter(std::string n, Matrix<T> v)
      : name(std::move(n)), value(std::move(v)), grad(Matrix<T>::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

/// Handle to a node on a Graph tape.
struct Var {
  std::int32_t id = -1;
  bool valid() const { return id >= 0; }
};

/// kWithinRows reduces/normalizes across the columns of each row (one result
/// per row); kWithinCols across the rows of each column.
enum class Axis { kWithinRows, kWithinCols };

enum class GradMode { kEnabled, kDisabled };

/// Output pair of one LSTM step.
struct LstmState {
  Var h;
  Var c;
};

template <typename T>
class Graph {
 public:
  using Mat = Matrix<T>;

  explicit Graph(GradMode mode = GradMode::kEnabled) : mode_(mode) {}
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  bool grad_enabled() const { return mode_ == GradMode::kEnabled; }

  // -- leaves -------------------------------------------------------------
  Var constant(Mat value);
  /// Leaf whose gradient is kept (used for gradient checks w.r.t. inputs).
  Var variable(Mat value);
  /// Leaf bound to a Parameter; backward() adds into parameter.grad.
  Var parameter(Parameter<T>& p);

  const Mat& value(Var v) const { return nodes_.at(v.id).value; }
  /// Gradient of the last backward() root w.r.t. v (zero matrix if v did not
  /// participate).
  Mat grad(Var v) const;
  std::size_t size() const { return nodes_.size(); }

  // -- linear algebra -------------------------------------------------------
  Var matmul(Var a, Var b);
  /// a * b^T evaluated with a fixed sequential inner-product order, so that
  /// matmul_nt(x, y) is bit-identical to matmul_nt(y, x)^T.
  Var matmul_nt(Var a, Var b);
  /// x * w + bias (bias is 1 x out, broadcast over rows).
  Var linear(Var x, Var w, Var bias);

  // -- elementwise ----------------------------------------------------------
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  /// a (m x n) + row (1 x n) broadcast over rows.
  Var add_row(Var a, Var row);
  /// a (m x n) * col (m x 1) broadcast over columns.
  Var mul_col(Var a, Var col);
  /// a * s, s a 1 x 1 Var.
  Var scale(Var a, Var s);
  Var scale(Var a, T s);
  /// a + s, s a 1 x 1 Var.
  Var add_scalar(Var a, Var s);
  Var one_minus(Var a);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var square(Var a);

  // -- reductions and normalizations ---------------------------------------
  Var softmax(Var a, Axis axis);
  Var log_softmax(Var a, Axis axis);
  /// Max along axis; kWithinRows gives m x 1, kWithinCols gives 1 x n.
  Var max(Var a, Axis axis);
  /// Mean along axis (average pooling over grid cells is kWithinCols).
  Var mean(Var a, Axis axis);
  Var sum(Var a);

  // -- structure ------------------------------------------------------------
  /// kWithinRows concatenates side by side (same rows), kWithinCols stacks.
  Var concat(std::span<const Var> parts, Axis axis);
  Var concat(std::initializer_list<Var> parts, Axis axis) {
    return concat(std::span<const Var>(parts.begin(), parts.size()), axis);
  }
  Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
  Var slice_rows(Var a, Eigen::Index start, Eigen::Index count);
  Var transpose(Var a);

  // -- neural-network primitives -------------------------------------------
  /// Rows of `table` selected by ids.
  Var embedding(Var table, std::span<const int> ids);
  /// Inverted dropout with keep-probability 1 - rate; masks drawn from rng.
  Var dropout(Var a, T rate, Rng& rng);
  /// One LSTM step. w is (in + hidden) x 4*hidden with gate blocks ordered
  /// input, forget, cell, output; bias is 1 x 4*hidden.
  LstmState lstm_cell(Var x, Var h, Var c, Var w, Var bias);
  /// Summed negative log-likelihood of target ids under row-wise softmax of
  /// logits. Rows whose target equals ignore_id contribute nothing.
  Var nll(Var logits, std::span<const int> targets, int ignore_id = -1);

  /// Seeds d(root)/d(root) = 1 and propagates to every recorded node, then
  /// accumulates into bound Parameters. root must be 1 x 1.
  void backward(Var root);

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool requires_grad = false;
    std::function<void(Graph&, const Node&)> backward;
  };

  Var push(Mat value, bool requires_grad, std::function<void(Graph&, const Node&)> backward);
  bool needs(Var v) const { return nodes_[v.id].requires_grad; }
  bool any_needs(std::initializer_list<Var> vs) const;
  Mat& grad_ref(Var v);
  const Mat& val(Var v) const { return nodes_[v.id].value; }

  GradMode mode_;
  std::vector<Node> nodes_;
  std::vector<std::pair<Var, Parameter<T>*>> bound_;
};

extern template class Graph<float>;
extern template class Graph<double>;

}  // namespace mvam::numerics
