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
#include <Eigen/Jacobi>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "wdhd/error.hpp"

namespace wdhd {

template <typename Scalar>
struct SymmetricEigen {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> eigenvalues;   // descending
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> eigenvectors;  // columns
  int sweeps = 0;
};

// Cyclic Jacobi eigensolver for a real symmetric matrix. Sweeps over all
// (p, q) pairs until the off-diagonal Frobenius norm falls to
// `tolerance * ||A||_F`.
template <typename Derived>
SymmetricEigen<typename Derived::Scalar> jacobi_eigen(
    const Eigen::MatrixBase<Derived>& input,
    typename Derived::Scalar tolerance = typename Derived::Scalar(1e-12),
    int max_sweeps = 100) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (input.rows() != input.cols()) throw InvalidArgument("jacobi_eigen: matrix is not square");

  const Eigen::Index n = input.rows();
  Matrix a = input;
  Matrix v = Matrix::Identity(n, n);

  auto off_norm = [&] {
    Scalar s(0);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  const Scalar threshold = tolerance * std::max(a.norm(), std::numeric_limits<Scalar>::min());
  int sweep = 0;
  for (; sweep < max_sweeps && off_norm() > threshold; ++sweep) {
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (a(p, q) == Scalar(0)) continue;
        Eigen::JacobiRotation<Scalar> rot;
        rot.makeJacobi(a, p, q);
        a.applyOnTheLeft(p, q, rot.adjoint());
        a.applyOnTheRight(p, q, rot);
        a(p, q) = a(q, p) = Scalar(0);
        v.applyOnTheRight(p, q, rot);
      }
    }
  }
  if (off_norm() > threshold) throw SolverError("jacobi_eigen: no convergence");

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return a(x, x) > a(y, y); });

  SymmetricEigen<Scalar> out;
  out.eigenvalues.resize(n);
  out.eigenvectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.eigenvalues(k) = a(order[k], order[k]);
    out.eigenvectors.col(k) = v.col(order[k]);
  }
  out.sweeps = sweep;
  return out;
}

}  // namespace wdhd
