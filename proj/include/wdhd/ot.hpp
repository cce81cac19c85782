// Copyright 2026 The wdhd Authors.
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

#include <Eigen/Core>
#include <utility>
#include <vector>

#include "wdhd/error.hpp"
#include "wdhd/interchange.hpp"

namespace wdhd {

// C(t, s) = ||u_t - v_s||^2.
using CostMatrix = Eigen::MatrixXd;

struct TransportPlan {
  Eigen::MatrixXd plan;            // m x n, nonnegative
  Eigen::VectorXd row_marginals;   // 1/m each
  Eigen::VectorXd col_marginals;   // 1/n each
  double objective = 0.0;          // sum plan .* cost (EMD2)
  int pivots = 0;
  // Cells of the optimal basis, m + n - 1 of them.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> basis;
};

// Squared Euclidean ground cost between the rows of u and v. Direct form, so
// cost_matrix(u, v) == cost_matrix(v, u).transpose() bitwise.
template <typename DerivedU, typename DerivedV>
CostMatrix cost_matrix(const Eigen::MatrixBase<DerivedU>& u,
                       const Eigen::MatrixBase<DerivedV>& v) {
  if (u.cols() != v.cols()) throw InvalidArgument("cost_matrix: dimension mismatch");
  if (u.rows() < 1 || v.rows() < 1) throw InvalidArgument("cost_matrix: empty support");
  CostMatrix c(u.rows(), v.rows());
  for (Eigen::Index s = 0; s < v.rows(); ++s)
    for (Eigen::Index t = 0; t < u.rows(); ++t)
      c(t, s) = (u.row(t).template cast<double>() - v.row(s).template cast<double>())
                    .squaredNorm();
  return c;
}

// Exact optimal transport between uniform measures on the rows and columns
// of `cost` (transportation simplex, Vogel start, Bland pivoting).
TransportPlan solve_emd2(const CostMatrix& cost);

// sqrt(EMD2) between the uniform empirical measures on the rows of u and v.
double w2_distance(const PointCloud& u, const PointCloud& v);

}  // namespace wdhd
