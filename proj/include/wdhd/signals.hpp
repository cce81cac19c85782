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
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "wdhd/error.hpp"
#include "wdhd/interchange.hpp"
#include "wdhd/projection.hpp"

namespace wdhd {

// K x K pairwise W2 distances, symmetric with zero diagonal, in response order.
using DistanceMatrix = Eigen::MatrixXd;

struct SignalConfig {
  double p = 0.1;        // numerator order of EigenWD, 0 < p < 2
  double alpha = 1e-6;   // diagonal shift added to the kernel
  double epsilon = 1e-6; // bandwidth stabilizer
  // Unset: median of the strictly positive distances.
  std::optional<double> fixed_bandwidth;
  double eigen_floor = 0.0;

  void validate() const;
};

struct KernelMatrix {
  Eigen::MatrixXd values;
  double bandwidth_used = 1.0;
};

struct SpectrumSummary {
  Eigen::VectorXd eigenvalues;  // descending, clamped to eigen_floor
  int clamped_count = 0;
};

struct PromptScore {
  double avg_wd = 0.0;
  double eigen_wd = 0.0;
  DistanceMatrix distances;
};

// Loads and projects every response of `record`. Throws EmptySupport for a
// response with no retained tokens.
std::vector<PointCloud> load_point_clouds(const PromptRecord& record,
                                          const RandomProjection& projection);

DistanceMatrix distance_matrix(const std::vector<PointCloud>& clouds, unsigned threads = 1);
DistanceMatrix distance_matrix(const PromptRecord& record, const RandomProjection& projection,
                               unsigned threads = 1);

double avg_wd(const DistanceMatrix& d);

// Lower median of the strictly positive entries; 1 when there are none.
double median_bandwidth(const DistanceMatrix& d);

// Gaussian kernel exp(-D^2 / (2 (b^2 + eps))) plus alpha on the diagonal.
KernelMatrix kernelize(const DistanceMatrix& d, const SignalConfig& cfg);

SpectrumSummary spectrum(const KernelMatrix& kernel, const SignalConfig& cfg);
SpectrumSummary spectrum(const Eigen::MatrixXd& symmetric, const SignalConfig& cfg);

// ||lambda||_p / ||lambda||_2 evaluated in the log domain. Zero entries
// contribute nothing to either norm.
template <typename Derived>
double eigen_wd(const Eigen::MatrixBase<Derived>& lambda, double p) {
  if (!(p > 0.0 && p < 2.0)) throw InvalidArgument("eigen_wd: p must lie in (0, 2)");
  double max_log = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    const double x = static_cast<double>(lambda(i));
    if (x < 0.0 || !std::isfinite(x)) throw InvalidArgument("eigen_wd: eigenvalues must be finite and >= 0");
    if (x > 0.0) max_log = std::max(max_log, std::log(x));
  }
  if (max_log == -std::numeric_limits<double>::infinity())
    throw InvalidArgument("eigen_wd: all-zero spectrum");
  double sum_p = 0.0, sum_2 = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    const double x = static_cast<double>(lambda(i));
    if (x <= 0.0) continue;
    const double shifted = std::log(x) - max_log;
    sum_p += std::exp(p * shifted);
    sum_2 += std::exp(2.0 * shifted);
  }
  // max_log cancels between numerator and denominator.
  return std::exp(std::log(sum_p) / p - 0.5 * std::log(sum_2));
}

double eigen_wd(const SpectrumSummary& s, const SignalConfig& cfg);

// EigenWD of a distance matrix: kernelize, spectrum, ratio of norms.
double eigen_wd_from_distances(const DistanceMatrix& d, const SignalConfig& cfg);

PromptScore score_prompt(const PromptRecord& record, const RandomProjection& projection,
                         const SignalConfig& cfg, unsigned threads = 1);

}  // namespace wdhd
