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

#include "mvam/encoder/vam.hpp"

#include <cmath>

#include "mvam/numerics/errors.hpp"

namespace mvam::encoder {

using numerics::Axis;
using numerics::GradMode;

FeatureGrid::FeatureGrid(int w, int h, int c)
    : width(w), height(h), channels(c), cells(Matrix<double>::Zero(w * h, c)) {
  if (w < 1 || h < 1 || c < 1) throw ContractError("FeatureGrid: extents must be positive, got " + shape());
}

FeatureGrid::FeatureGrid(int w, int h, Matrix<double> values)
    : width(w), height(h), channels(static_cast<int>(values.cols())), cells(std::move(values)) {
  if (w < 1 || h < 1 || channels < 1) throw ContractError("FeatureGrid: extents must be positive, got " + shape());
  if (cells.rows() != static_cast<Eigen::Index>(w) * h) {
    throw ContractError("FeatureGrid: " + std::to_string(cells.rows()) + " cell rows for a " +
                        std::to_string(w) + "x" + std::to_string(h) + " grid");
  }
}

std::string FeatureGrid::shape() const {
  return std::to_string(width) + "x" + std::to_string(height) + "x" + std::to_string(channels);
}

namespace {

void require_pair(const char* op, const FeatureGrid& a, const FeatureGrid& b) {
  if (!a.same_shape(b)) {
    throw ContractError(std::string(op) + ": grid shapes differ (" + a.shape() + " vs " + b.shape() + ")");
  }
}

ProbabilityMap to_map(const Matrix<double>& column, int width, int height) {
  ProbabilityMap map;
  map.width = width;
  map.height = height;
  map.values = column.col(0);
  return map;
}

FeatureGrid to_grid(const Matrix<double>& cells, int width, int height) {
  return FeatureGrid(width, height, cells);
}

}  // namespace

// -- differentiable API ------------------------------------------------------

template <typename T>
CellVars vam_cell(Graph<T>& g, Var f_ref, Var f_other, Var a_u, Var b_u, const VamOptions& options) {
  CellVars out;
  out.similarity = g.matmul_nt(f_ref, f_other);
  if (options.scale_similarity) {
    out.similarity = g.scale(out.similarity, T(1) / std::sqrt(static_cast<T>(g.value(f_ref).cols())));
  }
  const Var weights = g.softmax(out.similarity, Axis::kWithinRows);
  out.synthesized = g.matmul(weights, f_other);
  // sigmoid is monotone, so max_c sigmoid(a_u E + b_u) = sigmoid(max_c(a_u E) + b_u).
  const Var best = g.max(g.scale(out.similarity, a_u), Axis::kWithinRows);
  out.unchanged_map = g.sigmoid(g.add_scalar(best, b_u));
  out.changed_map = g.one_minus(out.unchanged_map);
  out.unchanged = g.mul_col(out.synthesized, out.unchanged_map);
  out.changed = g.mul_col(g.sub(f_ref, out.synthesized), out.changed_map);
  return out;
}

template <typename T>
std::pair<Var, Var> features_from_map(Graph<T>& g, Var f_ref, Var synthesized, Var unchanged_map) {
  const Var changed_map = g.one_minus(unchanged_map);
  const Var unchanged = g.mul_col(synthesized, unchanged_map);
  const Var changed = g.mul_col(g.sub(f_ref, synthesized), changed_map);
  return {changed, unchanged};
}

template <typename T>
PooledVars residual_pool(Graph<T>& g, Var f_b, Var f_a, Var changed_b, Var unchanged_b, Var changed_a,
                         Var unchanged_a) {
  const Var pool_b = g.mean(f_b, Axis::kWithinCols);
  const Var pool_a = g.mean(f_a, Axis::kWithinCols);
  PooledVars out;
  out.h_bb = g.add(g.mean(unchanged_b, Axis::kWithinCols), pool_b);
  out.h_ba = g.add(g.mean(unchanged_a, Axis::kWithinCols), pool_a);
  out.h_d_b2a = g.sub(g.add(g.mean(changed_b, Axis::kWithinCols), pool_b), pool_a);
  out.h_d_a2b = g.sub(g.add(g.mean(changed_a, Axis::kWithinCols), pool_a), pool_b);
  return out;
}

template <typename T>
EncodedVars m_vam(Graph<T>& g, Var f_b, Var f_a, Var a_u, Var b_u, const VamOptions& options) {
  const auto& fb = g.value(f_b);
  const auto& fa = g.value(f_a);
  if (fb.rows() != fa.rows() || fb.cols() != fa.cols()) {
    throw ContractError("m_vam: grid shapes differ (" + std::to_string(fb.rows()) + "x" +
                        std::to_string(fb.cols()) + " vs " + std::to_string(fa.rows()) + "x" +
                        std::to_string(fa.cols()) + ")");
  }
  EncodedVars out;
  out.before = vam_cell(g, f_b, f_a, a_u, b_u, options);
  out.after = vam_cell(g, f_a, f_b, a_u, b_u, options);
  out.pooled = residual_pool(g, f_b, f_a, out.before.changed, out.before.unchanged, out.after.changed,
                             out.after.unchanged);
  return out;
}

template CellVars vam_cell<float>(Graph<float>&, Var, Var, Var, Var, const VamOptions&);
template CellVars vam_cell<double>(Graph<double>&, Var, Var, Var, Var, const VamOptions&);
template std::pair<Var, Var> features_from_map<float>(Graph<float>&, Var, Var, Var);
template std::pair<Var, Var> features_from_map<double>(Graph<double>&, Var, Var, Var);
template PooledVars residual_pool<float>(Graph<float>&, Var, Var, Var, Var, Var, Var);
template PooledVars residual_pool<double>(Graph<double>&, Var, Var, Var, Var, Var, Var);
template EncodedVars m_vam<float>(Graph<float>&, Var, Var, Var, Var, const VamOptions&);
template EncodedVars m_vam<double>(Graph<double>&, Var, Var, Var, Var, const VamOptions&);

// -- value-level API -----------------------------------------------------------

SimilarityMatrix compute_similarity(const FeatureGrid& f_ref, const FeatureGrid& f_other,
                                    const VamOptions& options) {
  require_pair("compute_similarity", f_ref, f_other);
  Graph<double> g(GradMode::kDisabled);
  Var e = g.matmul_nt(g.constant(f_ref.cells), g.constant(f_other.cells));
  if (options.scale_similarity) e = g.scale(e, 1.0 / std::sqrt(static_cast<double>(f_ref.channels)));
  return SimilarityMatrix{g.value(e)};
}

FeatureGrid synthesize(const FeatureGrid& f_other, const SimilarityMatrix& similarity) {
  if (similarity.values.cols() != f_other.cell_count() || similarity.values.rows() != f_other.cell_count()) {
    throw ContractError("synthesize: similarity matrix does not match a " + f_other.shape() + " grid");
  }
  Graph<double> g(GradMode::kDisabled);
  const Var weights = g.softmax(g.constant(similarity.values), Axis::kWithinRows);
  const Var synth = g.matmul(weights, g.constant(f_other.cells));
  return to_grid(g.value(synth), f_other.width, f_other.height);
}

std::pair<ProbabilityMap, ProbabilityMap> unchanged_map(const SimilarityMatrix& similarity,
                                                        const VamParameters& params, int width,
                                                        int height) {
  if (similarity.values.rows() != static_cast<Eigen::Index>(width) * height) {
    throw ContractError("unchanged_map: similarity rows do not match the grid extents");
  }
  Graph<double> g(GradMode::kDisabled);
  Matrix<double> a(1, 1);
  a(0, 0) = params.a_u;
  Matrix<double> b(1, 1);
  b(0, 0) = params.b_u;
  const Var best = g.max(g.scale(g.constant(similarity.values), g.constant(a)), Axis::kWithinRows);
  const Var u = g.sigmoid(g.add_scalar(best, g.constant(b)));
  const Var c = g.one_minus(u);
  return {to_map(g.value(u), width, height), to_map(g.value(c), width, height)};
}

namespace {

Matrix<double> scalar(double v) {
  Matrix<double> m(1, 1);
  m(0, 0) = v;
  return m;
}

VamCellOutput collect(const Graph<double>& g, const CellVars& cell, int width, int height) {
  VamCellOutput out;
  out.synthesized = to_grid(g.value(cell.synthesized), width, height);
  out.changed = to_grid(g.value(cell.changed), width, height);
  out.unchanged = to_grid(g.value(cell.unchanged), width, height);
  out.unchanged_map = to_map(g.value(cell.unchanged_map), width, height);
  out.changed_map = to_map(g.value(cell.changed_map), width, height);
  return out;
}

}  // namespace

VamCellOutput vam_cell(const FeatureGrid& f_ref, const FeatureGrid& f_other, const VamParameters& params,
                       const VamOptions& options) {
  require_pair("vam_cell", f_ref, f_other);
  Graph<double> g(GradMode::kDisabled);
  const CellVars cell = vam_cell(g, g.constant(f_ref.cells), g.constant(f_other.cells),
                                 g.constant(scalar(params.a_u)), g.constant(scalar(params.b_u)), options);
  return collect(g, cell, f_ref.width, f_ref.height);
}

EncoderOutput m_vam(const FeatureGrid& f_b, const FeatureGrid& f_a, const VamParameters& params,
                    const VamOptions& options) {
  require_pair("m_vam", f_b, f_a);
  Graph<double> g(GradMode::kDisabled);
  const EncodedVars enc = m_vam(g, g.constant(f_b.cells), g.constant(f_a.cells), g.constant(scalar(params.a_u)),
                                g.constant(scalar(params.b_u)), options);
  EncoderOutput out;
  out.h_d_b2a = g.value(enc.pooled.h_d_b2a).row(0);
  out.h_d_a2b = g.value(enc.pooled.h_d_a2b).row(0);
  out.h_bb = g.value(enc.pooled.h_bb).row(0);
  out.h_ba = g.value(enc.pooled.h_ba).row(0);
  out.U_b = to_map(g.value(enc.before.unchanged_map), f_b.width, f_b.height);
  out.C_b = to_map(g.value(enc.before.changed_map), f_b.width, f_b.height);
  out.U_a = to_map(g.value(enc.after.unchanged_map), f_a.width, f_a.height);
  out.C_a = to_map(g.value(enc.after.changed_map), f_a.width, f_a.height);
  return out;
}

}  // namespace mvam::encoder
