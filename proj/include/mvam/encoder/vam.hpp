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

// Viewpoint-adapted matching.
//
// A matching cell compares every cell of a reference grid with every cell of
// the other grid, rebuilds the reference from the other grid by a softmax
// over those similarities, and scores each reference cell by how well its
// best match explains it:
//
//   E[r, c]  = <ref_r, other_c>
//   synth_r  = sum_c softmax_c(E[r, .]) * other_c
//   U_r      = max_c sigmoid(a_u * E[r, c] + b_u),   C_r = 1 - U_r
//   unchanged = synth (.) U,   changed = (ref - synth) (.) C
//
// The mirrored encoder runs one cell in each direction with shared (a_u, b_u)
// and average-pools the results into residual summary vectors.

#pragma once

#include <utility>

#include <Eigen/Core>

#include "mvam/encoder/feature_grid.hpp"
#include "mvam/numerics/graph.hpp"

namespace mvam::encoder {

using numerics::Graph;
using numerics::Var;

struct VamParameters {
  double a_u = 1.0;
  double b_u = 0.0;
};

struct VamOptions {
  /// Divide similarities by sqrt(Cf). Off by default: similarities are raw
  /// dot products and softmax stability comes from max subtraction.
  bool scale_similarity = false;
};

struct VamCellOutput {
  FeatureGrid synthesized;
  FeatureGrid changed;
  FeatureGrid unchanged;
  ProbabilityMap unchanged_map;
  ProbabilityMap changed_map;
};

struct EncoderOutput {
  Eigen::RowVectorXd h_d_b2a;
  Eigen::RowVectorXd h_d_a2b;
  Eigen::RowVectorXd h_bb;
  Eigen::RowVectorXd h_ba;
  ProbabilityMap U_b;
  ProbabilityMap C_b;
  ProbabilityMap U_a;
  ProbabilityMap C_a;
};

// -- value-level API (64-bit) ------------------------------------------------

SimilarityMatrix compute_similarity(const FeatureGrid& f_ref, const FeatureGrid& f_other,
                                    const VamOptions& options = {});
FeatureGrid synthesize(const FeatureGrid& f_other, const SimilarityMatrix& similarity);
std::pair<ProbabilityMap, ProbabilityMap> unchanged_map(const SimilarityMatrix& similarity,
                                                        const VamParameters& params, int width,
                                                        int height);
VamCellOutput vam_cell(const FeatureGrid& f_ref, const FeatureGrid& f_other, const VamParameters& params,
                       const VamOptions& options = {});
EncoderOutput m_vam(const FeatureGrid& f_b, const FeatureGrid& f_a, const VamParameters& params,
                    const VamOptions& options = {});

// -- differentiable API --------------------------------------------------------

/// Graph nodes of one matching cell. Grids are (W*H) x Cf, maps (W*H) x 1.
struct CellVars {
  Var similarity;
  Var synthesized;
  Var unchanged_map;
  Var changed_map;
  Var unchanged;
  Var changed;
};

/// Pooled 1 x Cf summaries.
struct PooledVars {
  Var h_d_b2a;
  Var h_d_a2b;
  Var h_bb;
  Var h_ba;
};

struct EncodedVars {
  CellVars before;  // reference = before grid
  CellVars after;   // reference = after grid
  PooledVars pooled;
};

template <typename T>
CellVars vam_cell(Graph<T>& g, Var f_ref, Var f_other, Var a_u, Var b_u, const VamOptions& options = {});

/// Residual pooling: h_bi = pool(f_bi) + pool(f_i),
/// h_d_{i->j} = pool(f_d_{i->j}) + pool(f_i) - pool(f_j).
template <typename T>
PooledVars residual_pool(Graph<T>& g, Var f_b, Var f_a, Var changed_b, Var unchanged_b, Var changed_a,
                         Var unchanged_a);

/// Changed/unchanged features from an externally supplied unchanged map
/// (used to decode from a perturbed map).
template <typename T>
std::pair<Var, Var> features_from_map(Graph<T>& g, Var f_ref, Var synthesized, Var unchanged_map);

template <typename T>
EncodedVars m_vam(Graph<T>& g, Var f_b, Var f_a, Var a_u, Var b_u, const VamOptions& options = {});

/// Grid as a graph-ready matrix of scalar type T.
template <typename T>
Matrix<T> to_matrix(const FeatureGrid& grid) {
  return grid.cells.template cast<T>();
}

}  // namespace mvam::encoder
