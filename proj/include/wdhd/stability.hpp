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

#include <cstdint>
#include <limits>
#include <vector>

#include "wdhd/interchange.hpp"
#include "wdhd/signals.hpp"

namespace wdhd {

// Observed change against its proven bound for one trial.
struct BoundCheck {
  double observed = 0.0;
  double bound = 0.0;
  double slack() const { return bound - observed; }
};

struct PerturbationReport {
  std::size_t trial_count = 0;
  // Smallest (bound - observed) seen over all trials and inequalities.
  double max_slack = std::numeric_limits<double>::infinity();
  std::size_t violations = 0;

  void record(const BoundCheck& c, double tolerance);
};

struct StabilityConfig {
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
  double noise_scale = 0.1;
  Eigen::Index max_tokens = 20;
  Eigen::Index max_dim = 16;
  std::size_t min_k = 3;
  std::size_t max_k = 8;
  // Spectral chain: kernel parameters and the entry bound R of D.
  double fixed_bandwidth = 1.0;
  double epsilon = 1e-6;
  double alpha = 1e-6;
  double entry_bound = 5.0;
  std::size_t spectral_min_k = 3;
  std::size_t spectral_max_k = 10;
};

// W2(mu(Z), mu(Z')) <= ||Z - Z'||_F / sqrt(m); rows of Z and Z' paired.
BoundCheck token_bound(const PointCloud& z, const PointCloud& z_perturbed);

// |W2(mu, nu) - W2(mu', nu')| <= W2(mu, mu') + W2(nu, nu').
BoundCheck two_sided_bound(const PointCloud& mu, const PointCloud& nu, const PointCloud& mu_p,
                           const PointCloud& nu_p);

struct AvgWdBounds {
  BoundCheck per_sample;  // (2/K) sum eps_i
  BoundCheck uniform;     // 2 max eps_i
};
AvgWdBounds avgwd_bounds(const std::vector<PointCloud>& samples,
                         const std::vector<PointCloud>& perturbed);

struct SpectralChainBounds {
  BoundCheck kernel;  // ||K(D) - K(D')||_F <= R / (b^2 + eps) ||D - D'||_F
  BoundCheck hoffman_wielandt;  // ||lambda - lambda'||_2 <= ||K(D) - K(D')||_F
};
SpectralChainBounds spectral_chain_bounds(const DistanceMatrix& d, const DistanceMatrix& d_perturbed,
                                          double bandwidth, double epsilon, double alpha,
                                          double entry_bound);

PerturbationReport check_lemma_token_bound(const StabilityConfig& cfg);
PerturbationReport check_two_sided_stability(const StabilityConfig& cfg);
PerturbationReport check_avgwd_lipschitz(const StabilityConfig& cfg);
PerturbationReport check_spectral_chain(const StabilityConfig& cfg);

}  // namespace wdhd
