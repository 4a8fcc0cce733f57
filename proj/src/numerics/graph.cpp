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

#include "mvam/numerics/graph.hpp"

#include <cmath>
#include <sstream>
#include <type_traits>

#include "mvam/numerics/errors.hpp"

namespace mvam::numerics {

namespace {

template <typename M>
std::string shape_of(const M& m) {
  std::ostringstream out;
  out << m.rows() << "x" << m.cols();
  return out.str();
}

template <typename M>
void require_same_shape(const char* op, const M& a, const M& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ContractError(std::string(op) + ": shape mismatch " + shape_of(a) + " vs " + shape_of(b));
  }
}

template <typename T>
T stable_sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

// exp(z) for z at or below the underflow point is zero or subnormal; return
// zero outright, since subnormal arithmetic is very slow on x86.
template <typename T>
T exp_or_zero(T z) {
  constexpr T kCutoff = std::is_same_v<T, float> ? T(-87) : T(-708);
  return z > kCutoff ? std::exp(z) : T(0);
}

// Row-major storage: reduce over rows by accumulating whole rows, which is
// contiguous, instead of Eigen's strided per-column partial reduction.
template <typename M>
Eigen::Matrix<typename M::Scalar, 1, Eigen::Dynamic> column_sums(const M& m) {
  Eigen::Matrix<typename M::Scalar, 1, Eigen::Dynamic> out =
      Eigen::Matrix<typename M::Scalar, 1, Eigen::Dynamic>::Zero(m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) out += m.row(r);
  return out;
}

}  // namespace

template <typename T>
Var Graph<T>::push(Mat value, bool requires_grad,
                   std::function<void(Graph&, const Node&)> backward) {
  Node node;
  node.value = std::move(value);
  node.requires_grad = requires_grad && grad_enabled();
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

template <typename T>
bool Graph<T>::any_needs(std::initializer_list<Var> vs) const {
  if (!grad_enabled()) return false;
  for (Var v : vs) {
    if (nodes_[v.id].requires_grad) return true;
  }
  return false;
}

template <typename T>
typename Graph<T>::Mat& Graph<T>::grad_ref(Var v) {
  Node& n = nodes_[v.id];
  if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

template <typename T>
typename Graph<T>::Mat Graph<T>::grad(Var v) const {
  const Node& n = nodes_.at(v.id);
  if (n.grad.size() == 0) return Mat::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

template <typename T>
Var Graph<T>::constant(Mat value) {
  return push(std::move(value), false, nullptr);
}

template <typename T>
Var Graph<T>::variable(Mat value) {
  return push(std::move(value), true, [](Graph&, const Node&) {});
}

template <typename T>
Var Graph<T>::parameter(Parameter<T>& p) {
  Var v = push(p.value, true, [](Graph&, const Node&) {});
  if (grad_enabled()) bound_.emplace_back(v, &p);
  return v;
}

// -- linear algebra ---------------------------------------------------------

template <typename T>
Var Graph<T>::matmul(Var a, Var b) {
  const Mat& A = val(a);
  const Mat& B = val(b);
  if (A.cols() != B.rows()) {
    throw ContractError("matmul: inner dimensions differ " + shape_of(A) + " * " + shape_of(B));
  }
  Mat out = A * B;
  return push(std::move(out), any_needs({a, b}), [a, b](Graph& g, const Node& self) {
    if (g.needs(a)) g.grad_ref(a).noalias() += self.grad * g.val(b).transpose();
    if (g.needs(b)) g.grad_ref(b).noalias() += g.val(a).transpose() * self.grad;
  });
}

template <typename T>
Var Graph<T>::matmul_nt(Var a, Var b) {
  const Mat& A = val(a);
  const Mat& B = val(b);
  if (A.cols() != B.cols()) {
    throw ContractError("matmul_nt: row lengths differ " + shape_of(A) + " vs " + shape_of(B));
  }
  // Every entry is summed in increasing k, so matmul_nt(b, a) is exactly the
  // transpose of matmul_nt(a, b). The k-outer loop keeps that order per entry
  // while letting the inner loop vectorize across j.
  const Mat Bt = B.transpose();
  Mat out = Mat::Zero(A.rows(), B.rows());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index k = 0; k < A.cols(); ++k) out.row(i) += A(i, k) * Bt.row(k);
  }
  return push(std::move(out), any_needs({a, b}), [a, b](Graph& g, const Node& self) {
    if (g.needs(a)) g.grad_ref(a).noalias() += self.grad * g.val(b);
    if (g.needs(b)) g.grad_ref(b).noalias() += self.grad.transpose() * g.val(a);
  });
}

template <typename T>
Var Graph<T>::linear(Var x, Var w, Var bias) {
  return add_row(matmul(x, w), bias);
}

// -- elementwise ------------------------------------------------------------

template <typename T>
Var Graph<T>::add(Var a, Var b) {
  require_same_shape("add", val(a), val(b));
  Mat out = val(a) + val(b);
  return push(std::move(out), any_needs({a, b}), [a, b](Graph& g, const Node& self) {
    if (g.needs(a)) g.grad_ref(a) += self.grad;
    if (g.needs(b)) g.grad_ref(b) += self.grad;
  });
}

template <typename T>
Var Graph<T>::sub(Var a, Var b) {
  require_same_shape("sub", val(a), val(b));
  Mat out = val(a) - val(b);
  return push(std::move(out), any_needs({a, b}), [a, b](Graph& g, const Node& self) {
    if (g.needs(a)) g.grad_ref(a) += self.grad;
    if (g.needs(b)) g.grad_ref(b) -= self.grad;
  });
}

template <typename T>
Var Graph<T>::mul(Var a, Var b) {
  require_same_shape("mul", val(a), val(b));
  Mat out = val(a).cwiseProduct(val(b));
  return push(std::move(out), any_needs({a, b}), [a, b](Graph& g, const Node& self) {
    if (g.needs(a)) g.grad_ref(a) += self.grad.cwiseProduct(g.val(b));
    if (g.needs(b)) g.grad_ref(b) += self.grad.cwiseProduct(g.val(a));
  });
}

template <typename T>
Var Graph<T>::add_row(Var a, Var row) {
  const Mat& A = val(a);
  const Mat& R = val(row);
  if (R.rows() != 1 || R.cols() != A.cols()) {
    throw ContractError("add_row: expected 1x" + std::to_string(A.cols()) + " row, got " + shape_of(R));
  }
  Mat out = A.rowwise() + R.row(0);
  return push(std::move(out), any_needs({a, row}), [a, row](Graph& g, const Node& self) {
    if (g.needs(a)) g.grad_ref(a) += self.grad;
    if (g.needs(row)) g.grad_ref(row) += column_sums(self.grad);
  });
}

template <typename T>
Var Graph<T>::mul_col(Var a, Var col) {
  const Mat& A = val(a);
  const Mat& C = val(col);
  if (C.cols() != 1 || C.rows() != A.rows()) {
    throw ContractError("mul_col: expected " + std::to_string(A.rows()) + "x1 column, got " + shape_of(C));
  }
  Mat out(A.rows(), A.cols());
  for (Eigen::Index r = 0; r < A.rows(); ++r) out.row(r) = A.row(r) * C(r, 0);
  return push(std::move(out), any_needs({a, col}), [a, col](Graph& g, const Node& self) {
    const Mat& c = g.val(col);
    const Mat& av = g.val(a);
    if (g.needs(a)) {
      Mat& da = g.grad_ref(a);
      for (Eigen::Index r = 0; r < da.rows(); ++r) da.row(r) += self.grad.row(r) * c(r, 0);
    }
    if (g.needs(col)) {
      Mat& dc = g.grad_ref(col);
      for (Eigen::Index r = 0; r < dc.rows(); ++r) dc(r, 0) += self.grad.row(r).dot(av.row(r));
    }
  });
}

template <typename T>
Var Graph<T>::scale(Var a, Var s) {
  if (val(s).size() != 1) throw ContractError("scale: factor must be 1x1, got " + shape_of(val(s)));
  Mat out = val(a) * val(s)(0, 0);
  return push(std::move(out), any_needs({a, s}), [a, s](Graph& g, const Node& self) {
    if (g.needs(a)) g.grad_ref(a) += self.grad * g.val(s)(0, 0);
    if (g.needs(s)) g.grad_ref(s)(0, 0) += self.grad.cwiseProduct(g.val(a)).sum();
  });
}

template <typename T>
Var Graph<T>::scale(Var a, T s) {
  Mat out = val(a) * s;
  return push(std::move(out), any_needs({a}), [a, s](Graph& g, const Node& self) {
    g.grad_ref(a) += self.grad * s;
  });
}

template <typename T>
Var Graph<T>::add_scalar(Var a, Var s) {
  if (val(s).size() != 1) throw ContractError("add_scalar: offset must be 1x1, got " + shape_of(val(s)));
  Mat out = val(a).array() + val(s)(0, 0);
  return push(std::move(out), any_needs({a, s}), [a, s](Graph& g, const Node& self) {
    if (g.needs(a)) g.grad_ref(a) += self.grad;
    if (g.needs(s)) g.grad_ref(s)(0, 0) += self.grad.sum();
  });
}

template <typename T>
Var Graph<T>::one_minus(Var a) {
  Mat out = (T(1) - val(a).array()).matrix();
  return push(std::move(out), any_needs({a}), [a](Graph& g, const Node& self) {
    g.grad_ref(a) -= self.grad;
  });
}

template <typename T>
Var Graph<T>::sigmoid(Var a) {
  Mat out = val(a).unaryExpr([](T x) { return stable_sigmoid(x); });
  return push(std::move(out), any_needs({a}), [a](Graph& g, const Node& self) {
    g.grad_ref(a).array() += self.grad.array() * self.value.array() * (T(1) - self.value.array());
  });
}

template <typename T>
Var Graph<T>::tanh(Var a) {
  Mat out = val(a).array().tanh().matrix();
  return push(std::move(out), any_needs({a}), [a](Graph& g, const Node& self) {
    g.grad_ref(a).array() += self.grad.array() * (T(1) - self.value.array().square());
  });
}

template <typename T>
Var Graph<T>::square(Var a) {
  Mat out = val(a).array().square().matrix();
  return push(std::move(out), any_needs({a}), [a](Graph& g, const Node& self) {
    g.grad_ref(a).array() += T(2) * self.grad.array() * g.val(a).array();
  });
}

// -- reductions --------------------------------------------------------------

template <typename T>
Var Graph<T>::softmax(Var a, Axis axis) {
  const Mat& A = val(a);
  Mat out(A.rows(), A.cols());
  if (axis == Axis::kWithinRows) {
    for (Eigen::Index r = 0; r < A.rows(); ++r) {
      const T m = A.row(r).maxCoeff();
      out.row(r) = (A.row(r).array() - m).unaryExpr([](T z) { return exp_or_zero(z); }).matrix();
      out.row(r) /= out.row(r).sum();
    }
  } else {
    Eigen::Matrix<T, 1, Eigen::Dynamic> m = A.row(0);
    for (Eigen::Index r = 1; r < A.rows(); ++r) m = m.cwiseMax(A.row(r));
    for (Eigen::Index r = 0; r < A.rows(); ++r) {
      out.row(r) = (A.row(r) - m).array().unaryExpr([](T z) { return exp_or_zero(z); }).matrix();
    }
    const Eigen::Matrix<T, 1, Eigen::Dynamic> total = column_sums(out);
    for (Eigen::Index r = 0; r < A.rows(); ++r) out.row(r).array() /= total.array();
  }
  return push(std::move(out), any_needs({a}), [a, axis](Graph& g, const Node& self) {
    const Mat& y = self.value;
    const Mat& dy = self.grad;
    Mat& da = g.grad_ref(a);
    if (axis == Axis::kWithinRows) {
      const Eigen::Matrix<T, Eigen::Dynamic, 1> dot = dy.cwiseProduct(y).rowwise().sum();
      da.array() += y.array() * (dy.colwise() - dot).array();
    } else {
      const Eigen::Matrix<T, 1, Eigen::Dynamic> dot = column_sums(dy.cwiseProduct(y));
      for (Eigen::Index r = 0; r < da.rows(); ++r) {
        da.row(r).array() += y.row(r).array() * (dy.row(r) - dot).array();
      }
    }
  });
}

template <typename T>
Var Graph<T>::log_softmax(Var a, Axis axis) {
  const Mat& A = val(a);
  Mat out(A.rows(), A.cols());
  if (axis == Axis::kWithinRows) {
    for (Eigen::Index r = 0; r < A.rows(); ++r) {
      const T m = A.row(r).maxCoeff();
      const T lse = m + std::log((A.row(r).array() - m).exp().sum());
      out.row(r) = (A.row(r).array() - lse).matrix();
    }
  } else {
    for (Eigen::Index c = 0; c < A.cols(); ++c) {
      const T m = A.col(c).maxCoeff();
      const T lse = m + std::log((A.col(c).array() - m).exp().sum());
      out.col(c) = (A.col(c).array() - lse).matrix();
    }
  }
  return push(std::move(out), any_needs({a}), [a, axis](Graph& g, const Node& self) {
    const Mat p = self.value.array().exp().matrix();
    const Mat& dy = self.grad;
    Mat& da = g.grad_ref(a);
    if (axis == Axis::kWithinRows) {
      const Eigen::Matrix<T, Eigen::Dynamic, 1> total = dy.rowwise().sum();
      da.array() += dy.array() - (p.array().colwise() * total.array());
    } else {
      const Eigen::Matrix<T, 1, Eigen::Dynamic> total = dy.colwise().sum();
      da.array() += dy.array() - (p.array().rowwise() * total.array());
    }
  });
}

template <typename T>
Var Graph<T>::max(Var a, Axis axis) {
  const Mat& A = val(a);
  Mat out;
  std::vector<Eigen::Index> arg;
  if (axis == Axis::kWithinRows) {
    out.resize(A.rows(), 1);
    arg.resize(A.rows());
    for (Eigen::Index r = 0; r < A.rows(); ++r) {
      Eigen::Index best = 0;
      for (Eigen::Index c = 1; c < A.cols(); ++c) {
        if (A(r, c) > A(r, best)) best = c;
      }
      arg[r] = best;
      out(r, 0) = A(r, best);
    }
  } else {
    out.resize(1, A.cols());
    arg.resize(A.cols());
    for (Eigen::Index c = 0; c < A.cols(); ++c) {
      Eigen::Index best = 0;
      for (Eigen::Index r = 1; r < A.rows(); ++r) {
        if (A(r, c) > A(best, c)) best = r;
      }
      arg[c] = best;
      out(0, c) = A(best, c);
    }
  }
  return push(std::move(out), any_needs({a}),
              [a, axis, arg = std::move(arg)](Graph& g, const Node& self) {
                Mat& da = g.grad_ref(a);
                if (axis == Axis::kWithinRows) {
                  for (std::size_t r = 0; r < arg.size(); ++r) da(r, arg[r]) += self.grad(r, 0);
                } else {
                  for (std::size_t c = 0; c < arg.size(); ++c) da(arg[c], c) += self.grad(0, c);
                }
              });
}

template <typename T>
Var Graph<T>::mean(Var a, Axis axis) {
  const Mat& A = val(a);
  Mat out = axis == Axis::kWithinRows ? Mat(A.rowwise().mean())
                                      : Mat(column_sums(A) / static_cast<T>(A.rows()));
  return push(std::move(out), any_needs({a}), [a, axis](Graph& g, const Node& self) {
    Mat& da = g.grad_ref(a);
    if (axis == Axis::kWithinRows) {
      for (Eigen::Index r = 0; r < da.rows(); ++r) da.row(r).array() += self.grad(r, 0) / static_cast<T>(da.cols());
    } else {
      da.rowwise() += self.grad.row(0) / static_cast<T>(da.rows());
    }
  });
}

template <typename T>
Var Graph<T>::sum(Var a) {
  Mat out(1, 1);
  out(0, 0) = val(a).sum();
  return push(std::move(out), any_needs({a}), [a](Graph& g, const Node& self) {
    g.grad_ref(a).array() += self.grad(0, 0);
  });
}

// -- structure ---------------------------------------------------------------

template <typename T>
Var Graph<T>::concat(std::span<const Var> parts, Axis axis) {
  if (parts.empty()) throw ContractError("concat: no inputs");
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  bool any_needs = false;
  for (Var p : parts) {
    const Mat& P = val(p);
    if (axis == Axis::kWithinRows) {
      if (cols == 0 && rows == 0) rows = P.rows();
      if (P.rows() != rows) throw ContractError("concat: row counts differ (" + shape_of(P) + ")");
      cols += P.cols();
    } else {
      if (cols == 0 && rows == 0) cols = P.cols();
      if (P.cols() != cols) throw ContractError("concat: column counts differ (" + shape_of(P) + ")");
      rows += P.rows();
    }
    any_needs = any_needs || (grad_enabled() && needs(p));
  }
  Mat out(rows, cols);
  Eigen::Index offset = 0;
  for (Var p : parts) {
    const Mat& P = val(p);
    if (axis == Axis::kWithinRows) {
      out.middleCols(offset, P.cols()) = P;
      offset += P.cols();
    } else {
      out.middleRows(offset, P.rows()) = P;
      offset += P.rows();
    }
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return push(std::move(out), any_needs, [inputs, axis](Graph& g, const Node& self) {
    Eigen::Index off = 0;
    for (Var p : inputs) {
      const Mat& P = g.val(p);
      if (axis == Axis::kWithinRows) {
        if (g.needs(p)) g.grad_ref(p) += self.grad.middleCols(off, P.cols());
        off += P.cols();
      } else {
        if (g.needs(p)) g.grad_ref(p) += self.grad.middleRows(off, P.rows());
        off += P.rows();
      }
    }
  });
}

template <typename T>
Var Graph<T>::slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  const Mat& A = val(a);
  if (start < 0 || count < 0 || start + count > A.cols()) {
    throw ContractError("slice_cols: range out of bounds for " + shape_of(A));
  }
  Mat out = A.middleCols(start, count);
  return push(std::move(out), any_needs({a}), [a, start, count](Graph& g, const Node& self) {
    g.grad_ref(a).middleCols(start, count) += self.grad;
  });
}

template <typename T>
Var Graph<T>::slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
  const Mat& A = val(a);
  if (start < 0 || count < 0 || start + count > A.rows()) {
    throw ContractError("slice_rows: range out of bounds for " + shape_of(A));
  }
  Mat out = A.middleRows(start, count);
  return push(std::move(out), any_needs({a}), [a, start, count](Graph& g, const Node& self) {
    g.grad_ref(a).middleRows(start, count) += self.grad;
  });
}

template <typename T>
Var Graph<T>::transpose(Var a) {
  Mat out = val(a).transpose();
  return push(std::move(out), any_needs({a}), [a](Graph& g, const Node& self) {
    g.grad_ref(a) += self.grad.transpose();
  });
}

// -- neural-network primitives ----------------------------------------------

template <typename T>
Var Graph<T>::embedding(Var table, std::span<const int> ids) {
  const Mat& E = val(table);
  Mat out(static_cast<Eigen::Index>(ids.size()), E.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= E.rows()) {
      throw ContractError("embedding: token id " + std::to_string(ids[i]) + " outside vocabulary of " +
                          std::to_string(E.rows()));
    }
    out.row(static_cast<Eigen::Index>(i)) = E.row(ids[i]);
  }
  std::vector<int> idx(ids.begin(), ids.end());
  return push(std::move(out), any_needs({table}), [table, idx](Graph& g, const Node& self) {
    Mat& dt = g.grad_ref(table);
    for (std::size_t i = 0; i < idx.size(); ++i) dt.row(idx[i]) += self.grad.row(static_cast<Eigen::Index>(i));
  });
}

template <typename T>
Var Graph<T>::dropout(Var a, T rate, Rng& rng) {
  if (rate < T(0) || rate >= T(1)) throw ContractError("dropout: rate must lie in [0, 1)");
  const Mat& A = val(a);
  const T keep_scale = T(1) / (T(1) - rate);
  Mat mask(A.rows(), A.cols());
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = rng.uniform() < static_cast<double>(rate) ? T(0) : keep_scale;
  }
  Mat out = A.cwiseProduct(mask);
  return push(std::move(out), any_needs({a}), [a, mask = std::move(mask)](Graph& g, const Node& self) {
    g.grad_ref(a) += self.grad.cwiseProduct(mask);
  });
}

template <typename T>
LstmState Graph<T>::lstm_cell(Var x, Var h, Var c, Var w, Var bias) {
  const Eigen::Index hidden = val(h).cols();
  if (val(c).cols() != hidden || val(w).cols() != 4 * hidden) {
    throw ContractError("lstm_cell: inconsistent hidden sizes (h " + shape_of(val(h)) + ", c " +
                        shape_of(val(c)) + ", w " + shape_of(val(w)) + ")");
  }
  const Var z = linear(concat({x, h}, Axis::kWithinRows), w, bias);
  const Mat& Z = val(z);
  const Mat& C = val(c);
  const Eigen::Index rows = Z.rows();

  // Fused gate nonlinearities; output is [h' | c'] side by side.
  Mat gates(rows, 4 * hidden);
  gates.middleCols(0, hidden) = Z.middleCols(0, hidden).unaryExpr([](T v) { return stable_sigmoid(v); });
  gates.middleCols(hidden, hidden) =
      Z.middleCols(hidden, hidden).unaryExpr([](T v) { return stable_sigmoid(v); });
  gates.middleCols(2 * hidden, hidden) = Z.middleCols(2 * hidden, hidden).array().tanh().matrix();
  gates.middleCols(3 * hidden, hidden) =
      Z.middleCols(3 * hidden, hidden).unaryExpr([](T v) { return stable_sigmoid(v); });

  Mat out(rows, 2 * hidden);
  const auto i_g = gates.middleCols(0, hidden).array();
  const auto f_g = gates.middleCols(hidden, hidden).array();
  const auto g_g = gates.middleCols(2 * hidden, hidden).array();
  const auto o_g = gates.middleCols(3 * hidden, hidden).array();
  const Mat c_next = (f_g * C.array() + i_g * g_g).matrix();
  const Mat tanh_c = c_next.array().tanh().matrix();
  out.middleCols(0, hidden) = (o_g * tanh_c.array()).matrix();
  out.middleCols(hidden, hidden) = c_next;

  const Var fused = push(
      std::move(out), any_needs({z, c}),
      [z, c, hidden, gates = std::move(gates), tanh_c](Graph& g, const Node& self) {
        const auto dh = self.grad.middleCols(0, hidden).array();
        const auto i_a = gates.middleCols(0, hidden).array();
        const auto f_a = gates.middleCols(hidden, hidden).array();
        const auto g_a = gates.middleCols(2 * hidden, hidden).array();
        const auto o_a = gates.middleCols(3 * hidden, hidden).array();
        const auto tc = tanh_c.array();
        const Mat dc = (self.grad.middleCols(hidden, hidden).array() + dh * o_a * (T(1) - tc.square())).matrix();
        if (g.needs(z)) {
          Mat& dz = g.grad_ref(z);
          dz.middleCols(0, hidden).array() += dc.array() * g_a * i_a * (T(1) - i_a);
          dz.middleCols(hidden, hidden).array() += dc.array() * g.val(c).array() * f_a * (T(1) - f_a);
          dz.middleCols(2 * hidden, hidden).array() += dc.array() * i_a * (T(1) - g_a.square());
          dz.middleCols(3 * hidden, hidden).array() += dh * tc * o_a * (T(1) - o_a);
        }
        if (g.needs(c)) g.grad_ref(c).array() += dc.array() * f_a;
      });
  return LstmState{slice_cols(fused, 0, hidden), slice_cols(fused, hidden, hidden)};
}

template <typename T>
Var Graph<T>::nll(Var logits, std::span<const int> targets, int ignore_id) {
  const Mat& L = val(logits);
  if (static_cast<Eigen::Index>(targets.size()) != L.rows()) {
    throw ContractError("nll: " + std::to_string(targets.size()) + " targets for " + shape_of(L) + " logits");
  }
  Mat probs(L.rows(), L.cols());
  T total = T(0);
  for (Eigen::Index r = 0; r < L.rows(); ++r) {
    const T m = L.row(r).maxCoeff();
    probs.row(r) = (L.row(r).array() - m).exp().matrix();
    const T z = probs.row(r).sum();
    probs.row(r) /= z;
    const int t = targets[static_cast<std::size_t>(r)];
    if (t == ignore_id) continue;
    if (t < 0 || t >= L.cols()) throw ContractError("nll: target id " + std::to_string(t) + " out of range");
    total -= L(r, t) - m - std::log(z);
  }
  Mat out(1, 1);
  out(0, 0) = total;
  std::vector<int> tgt(targets.begin(), targets.end());
  return push(std::move(out), any_needs({logits}),
              [logits, tgt, ignore_id, probs = std::move(probs)](Graph& g, const Node& self) {
                Mat& dl = g.grad_ref(logits);
                const T up = self.grad(0, 0);
                for (Eigen::Index r = 0; r < probs.rows(); ++r) {
                  const int t = tgt[static_cast<std::size_t>(r)];
                  if (t == ignore_id) continue;
                  dl.row(r) += up * probs.row(r);
                  dl(r, t) -= up;
                }
              });
}

template <typename T>
void Graph<T>::backward(Var root) {
  if (!grad_enabled()) throw ContractError("backward: graph was built with gradients disabled");
  if (val(root).size() != 1) throw ContractError("backward: root must be 1x1, got " + shape_of(val(root)));
  for (Node& n : nodes_) {
    if (n.grad.size() != 0) n.grad.setZero();
  }
  grad_ref(root)(0, 0) = T(1);
  for (std::int32_t i = root.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.requires_grad || n.grad.size() == 0 || !n.backward) continue;
    n.backward(*this, n);
  }
  for (auto& [v, p] : bound_) {
    const Node& n = nodes_[static_cast<std::size_t>(v.id)];
    if (n.grad.size() != 0) p->grad += n.grad;
  }
}

template class Graph<float>;
template class Graph<double>;

}  // namespace mvam::numerics
