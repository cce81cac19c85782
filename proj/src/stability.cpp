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

#include "wdhd/stability.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "wdhd/jacobi.hpp"
#include "wdhd/ot.hpp"

namespace wdhd {

namespace {

constexpr double kSingleSolveTol = 1e-9;
constexpr double kCompoundTol = 1e-8;

class TrialRng {
 public:
  explicit TrialRng(std::uint64_t seed) : engine_(seed) {}

  Eigen::Index between(Eigen::Index lo, Eigen::Index hi) {
    return std::uniform_int_distribution<Eigen::Index>(lo, hi)(engine_);
  }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  PointCloud gaussian(Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
    PointCloud z(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) z(i, j) = scale * normal_(engine_);
    return z;
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

Eigen::MatrixXd gaussian_kernel(const DistanceMatrix& d, double bandwidth, double epsilon,
                                double alpha) {
  Eigen::MatrixXd k = (-d.array().square() / (2.0 * (bandwidth * bandwidth + epsilon))).exp().matrix();
  k.diagonal().array() += alpha;
  return k;
}

DistanceMatrix random_distances(TrialRng& rng, Eigen::Index k, double bound) {
  DistanceMatrix d = DistanceMatrix::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i + 1; j < k; ++j) d(i, j) = d(j, i) = rng.uniform(0.0, bound);
  return d;
}

}  // namespace

void PerturbationReport::record(const BoundCheck& c, double tolerance) {
  max_slack = std::min(max_slack, c.slack());
  if (c.observed > c.bound + tolerance) ++violations;
}

BoundCheck token_bound(const PointCloud& z, const PointCloud& z_perturbed) {
  if (z.rows() != z_perturbed.rows() || z.cols() != z_perturbed.cols())
    throw InvalidArgument("token_bound: perturbation must keep the support size");
  return {w2_distance(z, z_perturbed),
          (z - z_perturbed).norm() / std::sqrt(static_cast<double>(z.rows()))};
}

BoundCheck two_sided_bound(const PointCloud& mu, const PointCloud& nu, const PointCloud& mu_p,
                           const PointCloud& nu_p) {
  return {std::abs(w2_distance(mu, nu) - w2_distance(mu_p, nu_p)),
          w2_distance(mu, mu_p) + w2_distance(nu, nu_p)};
}

AvgWdBounds avgwd_bounds(const std::vector<PointCloud>& samples,
                         const std::vector<PointCloud>& perturbed) {
  if (samples.size() != perturbed.size()) throw InvalidArgument("avgwd_bounds: sample count mismatch");
  double eps_sum = 0.0, eps_max = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].rows() != perturbed[i].rows() || samples[i].cols() != perturbed[i].cols())
      throw InvalidArgument("avgwd_bounds: perturbation must keep the support size");
    const double eps = (samples[i] - perturbed[i]).norm() / std::sqrt(double(samples[i].rows()));
    eps_sum += eps;
    eps_max = std::max(eps_max, eps);
  }
  const double change =
      std::abs(avg_wd(distance_matrix(samples)) - avg_wd(distance_matrix(perturbed)));
  const double k = static_cast<double>(samples.size());
  return {{change, 2.0 / k * eps_sum}, {change, 2.0 * eps_max}};
}

SpectralChainBounds spectral_chain_bounds(const DistanceMatrix& d, const DistanceMatrix& d_perturbed,
                                          double bandwidth, double epsilon, double alpha,
                                          double entry_bound) {
  const Eigen::MatrixXd k1 = gaussian_kernel(d, bandwidth, epsilon, alpha);
  const Eigen::MatrixXd k2 = gaussian_kernel(d_perturbed, bandwidth, epsilon, alpha);
  const double kernel_gap = (k1 - k2).norm();
  const double lipschitz = entry_bound / (bandwidth * bandwidth + epsilon);
  const Eigen::VectorXd l1 = jacobi_eigen(k1).eigenvalues;
  const Eigen::VectorXd l2 = jacobi_eigen(k2).eigenvalues;
  return {{kernel_gap, lipschitz * (d - d_perturbed).norm()}, {(l1 - l2).norm(), kernel_gap}};
}

PerturbationReport check_lemma_token_bound(const StabilityConfig& cfg) {
  TrialRng rng(cfg.seed);
  PerturbationReport report;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    const Eigen::Index m = rng.between(1, cfg.max_tokens);
    const Eigen::Index d = rng.between(1, cfg.max_dim);
    const PointCloud z = rng.gaussian(m, d);
    const PointCloud zp = z + rng.gaussian(m, d, cfg.noise_scale);
    report.record(token_bound(z, zp), kSingleSolveTol);
    ++report.trial_count;
  }
  return report;
}

PerturbationReport check_two_sided_stability(const StabilityConfig& cfg) {
  TrialRng rng(cfg.seed);
  PerturbationReport report;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    const Eigen::Index d = rng.between(1, cfg.max_dim);
    auto draw = [&] { return rng.gaussian(rng.between(1, cfg.max_tokens), d); };
    const PointCloud mu = draw(), nu = draw();
    // Alternate between independent measures and nearby perturbations.
    PointCloud mu_p, nu_p;
    if (t % 2 == 0) {
      mu_p = draw();
      nu_p = draw();
    } else {
      mu_p = mu + rng.gaussian(mu.rows(), d, cfg.noise_scale);
      nu_p = nu + rng.gaussian(nu.rows(), d, cfg.noise_scale);
    }
    report.record(two_sided_bound(mu, nu, mu_p, nu_p), kCompoundTol);
    ++report.trial_count;
  }
  return report;
}

PerturbationReport check_avgwd_lipschitz(const StabilityConfig& cfg) {
  TrialRng rng(cfg.seed);
  PerturbationReport report;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    const auto k = static_cast<std::size_t>(
        rng.between(static_cast<Eigen::Index>(cfg.min_k), static_cast<Eigen::Index>(cfg.max_k)));
    const Eigen::Index d = rng.between(1, cfg.max_dim);
    std::vector<PointCloud> samples, perturbed;
    for (std::size_t i = 0; i < k; ++i) {
      samples.push_back(rng.gaussian(rng.between(1, cfg.max_tokens), d));
      perturbed.push_back(samples.back() +
                          rng.gaussian(samples.back().rows(), d, cfg.noise_scale));
    }
    const AvgWdBounds b = avgwd_bounds(samples, perturbed);
    report.record(b.per_sample, kSingleSolveTol);
    report.record(b.uniform, kSingleSolveTol);
    ++report.trial_count;
  }
  return report;
}

PerturbationReport check_spectral_chain(const StabilityConfig& cfg) {
  TrialRng rng(cfg.seed);
  PerturbationReport report;
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    const Eigen::Index k = rng.between(static_cast<Eigen::Index>(cfg.spectral_min_k),
                                       static_cast<Eigen::Index>(cfg.spectral_max_k));
    const DistanceMatrix d = random_distances(rng, k, cfg.entry_bound);
    DistanceMatrix dp = d;
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = i + 1; j < k; ++j)
        dp(i, j) = dp(j, i) =
            std::clamp(d(i, j) + cfg.noise_scale * rng.uniform(-1.0, 1.0) * cfg.entry_bound, 0.0,
                       cfg.entry_bound);
    const SpectralChainBounds b = spectral_chain_bounds(d, dp, cfg.fixed_bandwidth, cfg.epsilon,
                                                        cfg.alpha, cfg.entry_bound);
    report.record(b.kernel, kCompoundTol);
    report.record(b.hoffman_wielandt, kCompoundTol);
    ++report.trial_count;
  }
  return report;
}

}  // namespace wdhd
