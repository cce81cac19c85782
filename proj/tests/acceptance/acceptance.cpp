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

// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria (capped at 1).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "../oracles.hpp"
#include "../test_util.hpp"
#include "wdhd/cli.hpp"
#include "wdhd/evaluation.hpp"
#include "wdhd/ot.hpp"
#include "wdhd/signals.hpp"
#include "wdhd/stability.hpp"

namespace {

using namespace wdhd;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

unsigned worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

Outcome ot_exactness() {
  std::mt19937_64 rng(2026);
  std::uniform_int_distribution<int> size(1, 6), dim(1, 4);
  double worst = 0.0;
  const auto t0 = Clock::now();
  for (int i = 0; i < 200; ++i) {
    const int m = size(rng), n = size(rng), d = dim(rng);
    const auto c = oracle::squared_distances(oracle::random_cloud(rng, m, d),
                                             oracle::random_cloud(rng, n, d));
    const double ref = m == n ? oracle::permutation_emd2(c) : oracle::assignment_emd2(c);
    worst = std::max(worst, std::abs(solve_emd2(c).objective - ref));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-8 && secs < 10.0,
          "200 instances, max |err| = " + fmt("%.3g", worst) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome metric_axioms() {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> size(1, 8), dim(1, 6);
  double sym = 0.0, tri = 0.0, neg = 0.0, mean_gap = 0.0;
  for (int i = 0; i < 500; ++i) {
    const int d = dim(rng);
    const auto a = oracle::random_cloud(rng, size(rng), d);
    const auto b = oracle::random_cloud(rng, size(rng), d);
    const auto c = oracle::random_cloud(rng, size(rng), d, 2.0);
    const double ab = w2_distance(a, b), ba = w2_distance(b, a);
    const double bc = w2_distance(b, c), ac = w2_distance(a, c);
    sym = std::max(sym, std::abs(ab - ba));
    neg = std::max({neg, -ab, -bc, -ac});
    tri = std::max(tri, ac - ab - bc);
    const double dm = (a.colwise().mean() - b.colwise().mean()).squaredNorm();
    mean_gap = std::max(mean_gap, dm - ab * ab);
  }
  const bool ok = sym <= 1e-9 && neg <= 0.0 && tri <= 1e-8 && mean_gap <= 1e-9;
  return {ok, "500 triples, symmetry " + fmt("%.2g", sym) + ", triangle excess " + fmt("%.2g", tri) +
                  ", mean-displacement excess " + fmt("%.2g", mean_gap)};
}

Outcome stability_bounds() {
  StabilityConfig cfg;
  cfg.trials = 1000;
  cfg.seed = 1;
  const auto t0 = Clock::now();
  const auto a = check_lemma_token_bound(cfg);
  const auto b = check_two_sided_stability(cfg);
  const auto c = check_avgwd_lipschitz(cfg);
  const double secs = seconds_since(t0);
  const std::size_t v = a.violations + b.violations + c.violations;
  const bool ok = v == 0 && a.trial_count == 1000 && b.trial_count == 1000 &&
                  c.trial_count == 1000 && secs < 120.0;
  return {ok, "3 x 1000 trials, violations " + std::to_string(a.violations) + "/" +
                  std::to_string(b.violations) + "/" + std::to_string(c.violations) +
                  ", min slack " + fmt("%.2g", std::min({a.max_slack, b.max_slack, c.max_slack})) +
                  ", " + fmt("%.1f", secs) + " s"};
}

Outcome spectral_chain() {
  StabilityConfig cfg;
  cfg.trials = 1000;
  cfg.seed = 2;
  const auto r = check_spectral_chain(cfg);
  return {r.violations == 0 && r.trial_count == 1000,
          "1000 trials, violations " + std::to_string(r.violations) + ", min slack " +
              fmt("%.2g", r.max_slack)};
}

Outcome eigenwd_properties() {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> size(1, 20);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::bernoulli_distribution zero(0.2);
  double below_one = 0.0, single_err = 0.0, scale_err = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::VectorXd lam(size(rng));
    for (auto& x : lam) x = zero(rng) ? 0.0 : u(rng);
    lam(0) = std::max(lam(0), 1e-3);
    Eigen::VectorXd single = Eigen::VectorXd::Zero(lam.size());
    single(trial % lam.size()) = u(rng) + 1e-3;
    for (double p : {0.1, 0.5, 1.0, 1.9}) {
      const double e = eigen_wd(lam, p);
      below_one = std::max(below_one, 1.0 - e);
      single_err = std::max(single_err, std::abs(eigen_wd(single, p) - 1.0));
      for (double c : {1e-6, 1.0, 1e6})
        scale_err = std::max(scale_err, std::abs(eigen_wd(Eigen::VectorXd(c * lam), p) - e) / e);
    }
  }
  // D-level scale invariance with eps = 0.
  SignalConfig cfg;
  cfg.epsilon = 0.0;
  double pipeline_err = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<PointCloud> clouds;
    for (int i = 0; i < 6; ++i) clouds.push_back(oracle::random_cloud(rng, 4, 3));
    const auto d = distance_matrix(clouds);
    const double base = eigen_wd_from_distances(d, cfg);
    for (double c : {1e-3, 7.0, 1e3})
      pipeline_err =
          std::max(pipeline_err, std::abs(eigen_wd_from_distances(c * d, cfg) - base) / base);
  }
  const bool ok =
      below_one <= 1e-12 && single_err <= 1e-9 && scale_err <= 1e-12 && pipeline_err <= 1e-12;
  return {ok, "1000 spectra x 4 p, min(EigenWD)-1 >= " + fmt("%.2g", -below_one) +
                  ", single-spike err " + fmt("%.2g", single_err) + ", scale rel err " +
                  fmt("%.2g", scale_err) + ", pipeline rel err " + fmt("%.2g", pipeline_err)};
}

Outcome closed_forms() {
  const double e1 = std::abs(eigen_wd(Eigen::Vector2d(1, 1), 0.1) - 1024.0 / std::sqrt(2.0));
  DistanceMatrix d3(3, 3);
  d3 << 0, 1, 3, 1, 0, 2, 3, 2, 0;
  PromptRecord rec;
  rec.prompt_id = "dirac";
  for (float x : {0.0f, 1.0f, 3.0f}) {
    EmbeddingMatrix z(1, 1);
    z(0, 0) = x;
    rec.responses.push_back({"r", "", "", EmbeddingRef(z), std::nullopt});
  }
  const double e2 = std::abs(avg_wd(distance_matrix(rec, RandomProjection())) - 2.0);
  SignalConfig cfg;
  cfg.epsilon = 0.0;
  DistanceMatrix d2(2, 2);
  d2 << 0, 1, 1, 0;
  const double e3 = std::abs(kernelize(d2, cfg).values(0, 1) - std::exp(-0.5));
  return {e1 <= 1e-6 && e2 <= 1e-12 && e3 <= 1e-12,
          "errors " + fmt("%.2g", e1) + ", " + fmt("%.2g", e2) + ", " + fmt("%.2g", e3)};
}

Outcome auroc_oracle() {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> n(2, 50), level(0, 9);
  std::bernoulli_distribution coin(0.5);
  int mismatches = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int size = n(rng);
    std::vector<double> s(size);
    std::vector<int> y(size);
    std::vector<LabeledScore> ls;
    for (int i = 0; i < size; ++i) {
      s[i] = 0.1 * level(rng);
      y[i] = i < 2 ? i : coin(rng);
      ls.push_back({"", s[i], y[i]});
    }
    if (auroc(ls).value() != oracle::pair_count_auroc(s, y)) ++mismatches;
  }
  return {mismatches == 0, "500 vectors with ties, mismatches " + std::to_string(mismatches)};
}

std::map<std::string, double> aurocs(const std::vector<PromptRecord>& recs,
                                     const std::vector<double>& p_values) {
  ScoringOptions opts;
  opts.detectors = {Detector::AvgWD, Detector::EigenWD};
  opts.threads = worker_count();
  const auto rows = sweep(recs, RandomProjection(), opts, SweepGrid{{}, p_values},
                          make_labels(recs).labels);
  std::map<std::string, double> out;
  for (const auto& r : rows) out[r.detector + "@" + format_double(r.p)] = r.auroc.value_or(NAN);
  return out;
}

const std::vector<double> kPGrid{0.1, 0.25, 0.5, 1.0};

struct SyntheticRuns {
  std::vector<std::map<std::string, double>> separated;  // separation 10, seeds 0..19
  std::vector<std::map<std::string, double>> null_case;  // separation 0, seeds 0..19
  double seconds = 0.0;
};

const SyntheticRuns& synthetic_runs() {
  static const SyntheticRuns runs = [] {
    SyntheticRuns r;
    const auto t0 = Clock::now();
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      SynthConfig cfg;
      cfg.n_prompts = 200;
      cfg.k = 10;
      cfg.seed = seed;
      cfg.separation = 10.0;
      r.separated.push_back(aurocs(synth_dataset(cfg), kPGrid));
      cfg.separation = 0.0;
      r.null_case.push_back(aurocs(synth_dataset(cfg), {0.1}));
    }
    r.seconds = seconds_since(t0);
    return r;
  }();
  return runs;
}

double mean_of(const std::vector<std::map<std::string, double>>& v, const std::string& key) {
  double s = 0.0;
  for (const auto& m : v) s += m.at(key);
  return s / double(v.size());
}

Outcome synthetic_separability() {
  const auto& runs = synthetic_runs();
  const double avg_sep = runs.separated[0].at("avgwd@0.1");
  const double eig_sep = runs.separated[0].at("eigenwd@0.1");
  const double avg_null = mean_of(runs.null_case, "avgwd@0.1");
  const double eig_null = mean_of(runs.null_case, "eigenwd@0.1");
  const bool ok = avg_sep >= 0.95 && eig_sep >= 0.95 && std::abs(avg_null - 0.5) <= 0.1 &&
                  std::abs(eig_null - 0.5) <= 0.1;
  return {ok, "separation 10: AvgWD " + fmt("%.3f", avg_sep) + ", EigenWD " + fmt("%.3f", eig_sep) +
                  "; separation 0 (20 seeds): AvgWD " + fmt("%.3f", avg_null) + ", EigenWD " +
                  fmt("%.3f", eig_null) + "; " + fmt("%.0f", runs.seconds) +
                  " s for 40 datasets incl. p grid"};
}

Outcome p_ablation() {
  const auto& runs = synthetic_runs();
  std::string detail = "EigenWD AUROC (20 seeds) over p {0.1,0.25,0.5,1}:";
  bool ok = true;
  double prev = INFINITY, lo = INFINITY, hi = -INFINITY;
  for (double p : kPGrid) {
    const double a = mean_of(runs.separated, "eigenwd@" + format_double(p));
    detail += " " + fmt("%.3f", a);
    if (a > prev + 1e-12) ok = false;
    prev = a;
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  if (hi - lo <= 1e-12) detail += " (constant across p; ordering holds only through ties)";
  return {ok, detail};
}

Outcome determinism() {
  wdhd::testing::TempDir dir;
  std::ostringstream sink;
  auto run = [&](std::vector<std::string> args) { return cli::run(args, sink, sink); };
  const std::string data = (dir / "data").string();
  if (run({"synth", "--out", data, "--n-prompts", "20", "--k", "6", "--seed", "5"}) != 0)
    return {false, "synth failed: " + sink.str()};
  const std::string manifest = data + "/manifest.jsonl";
  int rc = 0;
  rc |= run({"score", "--manifest", manifest, "--out", (dir / "a").string(), "--threads", "1"});
  rc |= run({"score", "--manifest", manifest, "--out", (dir / "b").string(), "--threads", "1"});
  rc |= run({"score", "--manifest", manifest, "--out", (dir / "c").string(), "--threads", "8"});
  rc |= run({"eval", "--manifest", manifest, "--out", (dir / "d").string(), "--threads", "1"});
  rc |= run({"eval", "--manifest", manifest, "--out", (dir / "e").string(), "--threads", "8"});
  if (rc != 0) return {false, "cli failed: " + sink.str()};
  using wdhd::testing::slurp;
  const std::string a = slurp(dir / "a/scores.csv");
  const bool same = a == slurp(dir / "b/scores.csv");
  const bool threads = a == slurp(dir / "c/scores.csv") &&
                       slurp(dir / "d/eval.csv") == slurp(dir / "e/eval.csv");
  return {same && threads && !a.empty(),
          std::string("rerun ") + (same ? "byte-identical" : "differs") + ", 1 vs 8 threads " +
              (threads ? "byte-identical" : "differs")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"ot-exactness", ot_exactness},
      {"metric-axioms", metric_axioms},
      {"stability-bounds", stability_bounds},
      {"spectral-chain", spectral_chain},
      {"eigenwd-properties", eigenwd_properties},
      {"closed-form-spot-values", closed_forms},
      {"auroc-oracle", auroc_oracle},
      {"synthetic-separability", synthetic_separability},
      {"p-ablation-direction", p_ablation},
      {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
