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
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>

#include "wdhd/interchange.hpp"

namespace wdhd {

struct ProjectionSpec {
  std::uint64_t seed = 42;
  Eigen::Index source_dim = 0;
  Eigen::Index target_dim = 128;
};

// Standard normal draw number `counter` of the stream keyed by `seed`.
// Counter-based: any entry can be produced without its predecessors.
double counter_gaussian(std::uint64_t seed, std::uint64_t counter);

// target_dim x source_dim Gaussian matrix with entry variance 1/target_dim.
Eigen::MatrixXd make_projection(const ProjectionSpec& spec);

// Rows mapped z -> P z. Pass-through (exact widening to double) when the
// source dimension already fits in target_dim.
PointCloud project(const EmbeddingMatrix& matrix, const ProjectionSpec& spec);
PointCloud project(const EmbeddingMatrix& matrix, const Eigen::MatrixXd& projection);

// One seed and target dimension shared by a whole run; matrices are built
// once per source dimension and reused for every response.
class RandomProjection {
 public:
  explicit RandomProjection(std::uint64_t seed = 42, Eigen::Index target_dim = 128);

  std::uint64_t seed() const { return seed_; }
  Eigen::Index target_dim() const { return target_dim_; }

  // nullptr when source_dim <= target_dim (pass-through).
  std::shared_ptr<const Eigen::MatrixXd> matrix_for(Eigen::Index source_dim) const;

  PointCloud apply(const EmbeddingMatrix& matrix) const;

 private:
  std::uint64_t seed_;
  Eigen::Index target_dim_;
  mutable std::mutex mutex_;
  mutable std::map<Eigen::Index, std::shared_ptr<const Eigen::MatrixXd>> cache_;
};

}  // namespace wdhd
