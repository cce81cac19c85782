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

#include "wdhd/projection.hpp"

#include <cmath>
#include <numbers>

#include "wdhd/error.hpp"

namespace wdhd {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Uniform on (0, 1), never 0 so log() is safe.
double keyed_uniform(std::uint64_t seed, std::uint64_t counter) {
  const std::uint64_t h = splitmix64(seed ^ splitmix64(counter));
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

void check_spec(const ProjectionSpec& spec) {
  if (spec.source_dim < 1 || spec.target_dim < 1)
    throw InvalidArgument("projection dimensions must be >= 1");
}

}  // namespace

double counter_gaussian(std::uint64_t seed, std::uint64_t counter) {
  // Box-Muller; draws 2k and 2k+1 share one uniform pair.
  const std::uint64_t pair = counter >> 1;
  const double u1 = keyed_uniform(seed, 2 * pair);
  const double u2 = keyed_uniform(seed, 2 * pair + 1);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return (counter & 1u) ? radius * std::sin(angle) : radius * std::cos(angle);
}

Eigen::MatrixXd make_projection(const ProjectionSpec& spec) {
  check_spec(spec);
  const double scale = 1.0 / std::sqrt(static_cast<double>(spec.target_dim));
  Eigen::MatrixXd p(spec.target_dim, spec.source_dim);
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = 0; j < p.cols(); ++j)
      p(i, j) = scale * counter_gaussian(
                            spec.seed, static_cast<std::uint64_t>(i * spec.source_dim + j));
  return p;
}

PointCloud project(const EmbeddingMatrix& matrix, const Eigen::MatrixXd& projection) {
  if (matrix.cols() != projection.cols())
    throw InvalidArgument("projection expects " + std::to_string(projection.cols()) +
                          " columns, got " + std::to_string(matrix.cols()));
  return matrix.cast<double>() * projection.transpose();
}

PointCloud project(const EmbeddingMatrix& matrix, const ProjectionSpec& spec) {
  check_spec(spec);
  if (matrix.cols() != spec.source_dim)
    throw InvalidArgument("embedding has " + std::to_string(matrix.cols()) +
                          " columns, projection expects " + std::to_string(spec.source_dim));
  if (spec.source_dim <= spec.target_dim) return matrix.cast<double>();
  return project(matrix, make_projection(spec));
}

RandomProjection::RandomProjection(std::uint64_t seed, Eigen::Index target_dim)
    : seed_(seed), target_dim_(target_dim) {
  if (target_dim < 1) throw InvalidArgument("projection target dimension must be >= 1");
}

std::shared_ptr<const Eigen::MatrixXd> RandomProjection::matrix_for(Eigen::Index source_dim) const {
  if (source_dim < 1) throw InvalidArgument("embedding dimension must be >= 1");
  if (source_dim <= target_dim_) return nullptr;
  std::lock_guard lock(mutex_);
  auto& slot = cache_[source_dim];
  if (!slot)
    slot = std::make_shared<const Eigen::MatrixXd>(
        make_projection({seed_, source_dim, target_dim_}));
  return slot;
}

PointCloud RandomProjection::apply(const EmbeddingMatrix& matrix) const {
  auto p = matrix_for(matrix.cols());
  if (!p) return matrix.cast<double>();
  return project(matrix, *p);
}

}  // namespace wdhd
