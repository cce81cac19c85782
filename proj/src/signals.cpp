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

#include "wdhd/signals.hpp"

#include <algorithm>
#include <string>

#include "wdhd/jacobi.hpp"
#include "wdhd/ot.hpp"
#include "wdhd/parallel.hpp"

namespace wdhd {

void SignalConfig::validate() const {
  if (!(p > 0.0 && p < 2.0)) throw InvalidArgument("p must lie in (0, 2)");
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be > 0");
  if (!(epsilon >= 0.0)) throw InvalidArgument("epsilon must be >= 0");
  if (!(eigen_floor >= 0.0)) throw InvalidArgument("eigen_floor must be >= 0");
  if (fixed_bandwidth && !(*fixed_bandwidth > 0.0))
    throw InvalidArgument("fixed bandwidth must be > 0");
}

std::vector<PointCloud> load_point_clouds(const PromptRecord& record,
                                          const RandomProjection& projection) {
  std::vector<PointCloud> clouds;
  clouds.reserve(record.responses.size());
  Eigen::Index width = -1;
  for (const auto& r : record.responses) {
    const EmbeddingMatrix z = r.embedding.load();
    if (z.rows() == 0) throw EmptySupport(record.prompt_id, r.response_id);
    if (width >= 0 && z.cols() != width)
      throw DataError("prompt '" + record.prompt_id + "': responses have different embedding widths");
    width = z.cols();
    clouds.push_back(projection.apply(z));
  }
  return clouds;
}

DistanceMatrix distance_matrix(const std::vector<PointCloud>& clouds, unsigned threads) {
  const auto k = static_cast<Eigen::Index>(clouds.size());
  if (k < 2) throw InvalidArgument("distance_matrix needs at least two responses");
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i + 1; j < k; ++j) pairs.emplace_back(i, j);

  DistanceMatrix d = DistanceMatrix::Zero(k, k);
  parallel_for(pairs.size(), threads, [&](std::size_t idx) {
    const auto [i, j] = pairs[idx];
    d(i, j) = w2_distance(clouds[i], clouds[j]);
  });
  for (const auto& [i, j] : pairs) d(j, i) = d(i, j);
  return d;
}

DistanceMatrix distance_matrix(const PromptRecord& record, const RandomProjection& projection,
                               unsigned threads) {
  if (record.k() < 2)
    throw InvalidArgument("prompt '" + record.prompt_id + "' has fewer than two responses");
  return distance_matrix(load_point_clouds(record, projection), threads);
}

double avg_wd(const DistanceMatrix& d) {
  const Eigen::Index k = d.rows();
  if (k < 2 || d.cols() != k) throw InvalidArgument("avg_wd needs a square matrix with K >= 2");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i + 1; j < k; ++j) sum += d(i, j);
  return 2.0 * sum / (double(k) * double(k - 1));
}

double median_bandwidth(const DistanceMatrix& d) {
  std::vector<double> positive;
  for (Eigen::Index j = 0; j < d.cols(); ++j)
    for (Eigen::Index i = 0; i < d.rows(); ++i)
      if (d(i, j) > 0.0) positive.push_back(d(i, j));
  if (positive.empty()) return 1.0;
  const auto mid = positive.begin() + static_cast<std::ptrdiff_t>((positive.size() - 1) / 2);
  std::nth_element(positive.begin(), mid, positive.end());
  return *mid;
}

KernelMatrix kernelize(const DistanceMatrix& d, const SignalConfig& cfg) {
  cfg.validate();
  if (d.rows() != d.cols()) throw InvalidArgument("kernelize: distance matrix is not square");
  KernelMatrix out;
  out.bandwidth_used = cfg.fixed_bandwidth ? *cfg.fixed_bandwidth : median_bandwidth(d);
  const double denom = 2.0 * (out.bandwidth_used * out.bandwidth_used + cfg.epsilon);
  out.values = (-d.array().square() / denom).exp().matrix();
  out.values.diagonal().array() += cfg.alpha;
  return out;
}

SpectrumSummary spectrum(const Eigen::MatrixXd& symmetric, const SignalConfig& cfg) {
  if (symmetric.rows() != symmetric.cols()) throw InvalidArgument("spectrum: matrix is not square");
  if (symmetric.rows() > 1024) throw InvalidArgument("spectrum: K > 1024 unsupported");
  if ((symmetric - symmetric.transpose()).cwiseAbs().maxCoeff() > 1e-9)
    throw InvalidArgument("spectrum: matrix is not symmetric");
  SpectrumSummary out;
  out.eigenvalues = jacobi_eigen(symmetric, 1e-12).eigenvalues;
  for (auto& x : out.eigenvalues) {
    if (x < cfg.eigen_floor) {
      x = cfg.eigen_floor;
      ++out.clamped_count;
    }
  }
  return out;
}

SpectrumSummary spectrum(const KernelMatrix& kernel, const SignalConfig& cfg) {
  return spectrum(kernel.values, cfg);
}

double eigen_wd(const SpectrumSummary& s, const SignalConfig& cfg) {
  return eigen_wd(s.eigenvalues, cfg.p);
}

double eigen_wd_from_distances(const DistanceMatrix& d, const SignalConfig& cfg) {
  return eigen_wd(spectrum(kernelize(d, cfg), cfg), cfg);
}

PromptScore score_prompt(const PromptRecord& record, const RandomProjection& projection,
                         const SignalConfig& cfg, unsigned threads) {
  cfg.validate();
  PromptScore out;
  out.distances = distance_matrix(record, projection, threads);
  out.avg_wd = avg_wd(out.distances);
  out.eigen_wd = eigen_wd_from_distances(out.distances, cfg);
  return out;
}

}  // namespace wdhd
