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

#pragma once

#include <string>

#include <Eigen/Core>

#include "mvam/numerics/graph.hpp"

namespace mvam::encoder {

using numerics::Matrix;

/// W x H grid of Cf-dimensional cell features, stored as a (W*H) x Cf matrix
/// whose row index is y * W + x.
struct FeatureGrid {
  int width = 0;
  int height = 0;
  int channels = 0;
  Matrix<double> cells;

  FeatureGrid() = default;
  FeatureGrid(int w, int h, int c);
  FeatureGrid(int w, int h, Matrix<double> values);

  int cell_count() const { return width * height; }
  int cell_index(int x, int y) const { return y * width + x; }
  double& at(int x, int y, int k) { return cells(cell_index(x, y), k); }
  double at(int x, int y, int k) const { return cells(cell_index(x, y), k); }

  std::string shape() const;
  bool same_shape(const FeatureGrid& other) const {
    return width == other.width && height == other.height && channels == other.channels;
  }
};

/// Per-cell probabilities in [0, 1], cells in the same order as FeatureGrid.
struct ProbabilityMap {
  int width = 0;
  int height = 0;
  Eigen::VectorXd values;

  double at(int x, int y) const { return values(y * width + x); }
};

/// (W*H) x (W*H) cell-to-cell dot products; row = reference cell,
/// column = candidate cell.
struct SimilarityMatrix {
  Matrix<double> values;
};

}  // namespace mvam::encoder
