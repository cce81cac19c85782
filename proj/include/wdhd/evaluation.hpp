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
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wdhd/interchange.hpp"
#include "wdhd/projection.hpp"
#include "wdhd/signals.hpp"

namespace wdhd {

enum class Detector { AvgWD, EigenWD, EffectiveRank, Eigenscore, LNE, LexicalSimilarity };

std::string_view detector_name(Detector d);
Detector parse_detector(std::string_view name);
// Comma-separated list; "all" selects every detector.
std::vector<Detector> parse_detectors(std::string_view list);
const std::vector<Detector>& all_detectors();

struct LabeledScore {
  std::string prompt_id;
  double score = 0.0;
  int label = 0;  // 1 hallucinated
};

// Mann-Whitney AUROC with half credit for ties; nullopt when either class
// is empty.
std::optional<double> auroc(std::span<const LabeledScore> scores);

struct Labeling {
  std::vector<std::optional<int>> labels;  // parallel to the records
  std::size_t passed_through = 0;
  std::size_t derived = 0;
  std::size_t excluded = 0;
  std::string basis = "response[0]";
};

// Existing labels pass through; otherwise label 0 when ROUGE-L of the first
// response against the reference is >= threshold, else 1. Records with
// neither a label nor a reference get no label.
Labeling make_labels(const std::vector<PromptRecord>& records, double threshold = 0.5);

struct SynthConfig {
  std::size_t n_prompts = 200;
  std::size_t k = 10;
  std::size_t modes = 3;         // clusters used by hallucinated prompts
  double separation = 10.0;      // distance between cluster centers, in units of sigma
  std::uint64_t seed = 0;
  Eigen::Index dim = 16;
  double sigma = 1.0;            // token spread around a cluster center
  Eigen::Index min_tokens = 5;
  Eigen::Index max_tokens = 30;
};

// Balanced synthetic prompts (odd indices hallucinated) with in-memory
// embeddings. Faithful prompts draw every token from one Gaussian cluster;
// hallucinated prompts assign response i to cluster i mod modes.
std::vector<PromptRecord> synth_dataset(const SynthConfig& cfg);

struct ScoringOptions {
  SignalConfig signals;
  std::vector<Detector> detectors = all_detectors();
  double es_reg = 1e-3;
  unsigned threads = 1;
};

// Everything computed for one prompt. `skip_reason` is set when the prompt
// cannot be scored at all (EmptySupport, K < 2); individual detectors that
// cannot run (LNE without log-probabilities) land in `unavailable`.
struct PromptAnalysis {
  std::string prompt_id;
  std::size_t k = 0;
  std::optional<std::string> skip_reason;
  DistanceMatrix distances;
  std::map<Detector, double> scores;
  std::map<Detector, std::string> unavailable;
};

// First `k` responses, or all when k == 0 or k >= K.
PromptRecord subsample(const PromptRecord& record, std::size_t k);

PromptAnalysis analyze_prompt(const PromptRecord& record, const RandomProjection& projection,
                              const ScoringOptions& options);

// Prompt-level parallel; output order follows `records` regardless of
// thread count.
std::vector<PromptAnalysis> analyze_records(const std::vector<PromptRecord>& records,
                                            const RandomProjection& projection,
                                            const ScoringOptions& options);

struct EvalReport {
  std::string detector;
  std::string dataset;
  std::string model;
  std::size_t k = 0;
  double p = 0.1;
  std::optional<double> auroc;  // nullopt: single-class partition
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::size_t skipped = 0;
};

// Partition key for grouped evaluation: dataset, model, K, plus any extra
// metadata keys (folded into the dataset column as ";key=value").
struct GroupKey {
  std::string dataset;
  std::string model;
  std::size_t k = 0;
  auto operator<=>(const GroupKey&) const = default;
};

GroupKey group_key(const PromptRecord& record, std::size_t k,
                   const std::vector<std::string>& extra_keys);

// One report per (partition, detector).
std::vector<EvalReport> evaluate(const std::vector<PromptRecord>& records,
                                 const std::vector<PromptAnalysis>& analyses,
                                 const std::vector<std::optional<int>>& labels,
                                 const std::vector<Detector>& detectors, double p,
                                 const std::vector<std::string>& extra_keys = {});

struct SweepGrid {
  std::vector<std::size_t> k_values;  // 0 = all responses
  std::vector<double> p_values;
};

// Distances are computed once per K value and reused across p.
std::vector<EvalReport> sweep(const std::vector<PromptRecord>& records,
                              const RandomProjection& projection, const ScoringOptions& options,
                              const SweepGrid& grid, const std::vector<std::optional<int>>& labels,
                              const std::vector<std::string>& extra_keys = {});

// Shortest round-trip decimal form.
std::string format_double(double x);

inline constexpr std::string_view kReportHeader =
    "detector,dataset,model,K,p,auroc,n_pos,n_neg,skipped";
void write_report_csv(std::ostream& out, const std::vector<EvalReport>& reports);

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m);
// Binary PGM (P5), min-max normalized to 0..255; constant matrices map to 0.
std::string heatmap_pgm(const DistanceMatrix& d);

}  // namespace wdhd
