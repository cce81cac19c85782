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

#include "wdhd/evaluation.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <ostream>
#include <random>
#include <sstream>

#include "wdhd/baselines.hpp"
#include "wdhd/error.hpp"
#include "wdhd/parallel.hpp"

namespace wdhd {

namespace {

constexpr std::array<std::pair<Detector, std::string_view>, 6> kDetectorNames{{
    {Detector::AvgWD, "avgwd"},
    {Detector::EigenWD, "eigenwd"},
    {Detector::EffectiveRank, "er"},
    {Detector::Eigenscore, "es"},
    {Detector::LNE, "lne"},
    {Detector::LexicalSimilarity, "ls"},
}};

bool wants(const std::vector<Detector>& ds, Detector d) {
  return std::find(ds.begin(), ds.end(), d) != ds.end();
}

std::string zero_pad(std::size_t v, int width) {
  std::string s = std::to_string(v);
  return s.size() >= static_cast<std::size_t>(width) ? s : std::string(width - s.size(), '0') + s;
}

}  // namespace

std::string_view detector_name(Detector d) {
  for (const auto& [det, name] : kDetectorNames)
    if (det == d) return name;
  return "unknown";
}

Detector parse_detector(std::string_view name) {
  for (const auto& [det, n] : kDetectorNames)
    if (n == name) return det;
  throw InvalidArgument("unknown detector '" + std::string(name) + "'");
}

const std::vector<Detector>& all_detectors() {
  static const std::vector<Detector> all = [] {
    std::vector<Detector> v;
    for (const auto& entry : kDetectorNames) v.push_back(entry.first);
    return v;
  }();
  return all;
}

std::vector<Detector> parse_detectors(std::string_view list) {
  if (list == "all") return all_detectors();
  std::vector<Detector> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t comma = std::min(list.find(',', start), list.size());
    const auto item = list.substr(start, comma - start);
    if (!item.empty()) {
      const Detector d = parse_detector(item);
      if (!wants(out, d)) out.push_back(d);
    }
    start = comma + 1;
  }
  if (out.empty()) throw InvalidArgument("no detectors selected");
  return out;
}

std::optional<double> auroc(std::span<const LabeledScore> scores) {
  std::vector<std::pair<double, int>> v;
  v.reserve(scores.size());
  std::size_t n_pos = 0;
  for (const auto& s : scores) {
    if (!std::isfinite(s.score)) throw InvalidArgument("auroc: non-finite score for " + s.prompt_id);
    if (s.label != 0 && s.label != 1) throw InvalidArgument("auroc: label must be 0 or 1");
    v.emplace_back(s.score, s.label);
    n_pos += static_cast<std::size_t>(s.label);
  }
  const std::size_t n_neg = v.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  // Sum of positive ranks (1-based, ties averaged). Twice the rank keeps it integral.
  double twice_rank_sum = 0.0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    while (j < v.size() && v[j].first == v[i].first) ++j;
    const double twice_rank = double(i + 1 + j);
    for (std::size_t t = i; t < j; ++t)
      if (v[t].second == 1) twice_rank_sum += twice_rank;
    i = j;
  }
  const double u = twice_rank_sum / 2.0 - double(n_pos) * double(n_pos + 1) / 2.0;
  return u / (double(n_pos) * double(n_neg));
}

Labeling make_labels(const std::vector<PromptRecord>& records, double threshold) {
  Labeling out;
  out.labels.reserve(records.size());
  for (const auto& rec : records) {
    if (rec.label) {
      out.labels.push_back(rec.label);
      ++out.passed_through;
    } else if (rec.reference && !rec.responses.empty()) {
      const double score = rouge_l(rec.responses.front().text, *rec.reference);
      out.labels.push_back(score >= threshold ? 0 : 1);
      ++out.derived;
    } else {
      out.labels.push_back(std::nullopt);
      ++out.excluded;
    }
  }
  return out;
}

std::vector<PromptRecord> synth_dataset(const SynthConfig& cfg) {
  if (cfg.n_prompts < 2 || cfg.k < 2) throw InvalidArgument("synth_dataset needs n_prompts >= 2 and K >= 2");
  if (cfg.modes < 1 || static_cast<Eigen::Index>(cfg.modes) > cfg.dim)
    throw InvalidArgument("synth_dataset needs 1 <= modes <= dim");
  if (cfg.min_tokens < 1 || cfg.max_tokens < cfg.min_tokens)
    throw InvalidArgument("synth_dataset: bad token-count range");

  static constexpr std::array<std::string_view, 3> kLeads{"the answer is", "i think it is",
                                                          "it is"};
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<Eigen::Index> token_count(cfg.min_tokens, cfg.max_tokens);
  std::uniform_int_distribution<std::size_t> lead(0, kLeads.size() - 1);

  // Cluster c sits at base + (separation / sqrt 2) e_c, so any two clusters
  // are `separation` apart.
  const double offset = cfg.separation * cfg.sigma / std::sqrt(2.0);

  std::vector<PromptRecord> records;
  records.reserve(cfg.n_prompts);
  for (std::size_t q = 0; q < cfg.n_prompts; ++q) {
    const bool hallucinated = q % 2 == 1;
    const std::string pid = "p" + zero_pad(q, 4);
    Eigen::VectorXd base(cfg.dim);
    for (auto& x : base) x = 2.0 * gauss(rng);

    PromptRecord rec;
    rec.prompt_id = pid;
    rec.prompt_text = "synthetic prompt " + std::to_string(q);
    rec.reference = "the answer is " + pid + "a0";
    rec.label = hallucinated ? 1 : 0;
    rec.metadata = {{"dataset", "synthetic"},
                    {"model", "gaussian-clusters"},
                    {"separation", format_double(cfg.separation)},
                    {"seed", std::to_string(cfg.seed)}};
    for (std::size_t i = 0; i < cfg.k; ++i) {
      const std::size_t mode = hallucinated ? i % cfg.modes : 0;
      Eigen::VectorXd center = base;
      center(static_cast<Eigen::Index>(mode)) += offset;
      const Eigen::Index m = token_count(rng);
      EmbeddingMatrix z(m, cfg.dim);
      for (Eigen::Index t = 0; t < m; ++t)
        for (Eigen::Index c = 0; c < cfg.dim; ++c)
          z(t, c) = static_cast<float>(center(c) + cfg.sigma * gauss(rng));

      std::vector<double> logprobs(static_cast<std::size_t>(m));
      for (auto& lp : logprobs) lp = -std::abs(0.5 * gauss(rng));

      // Distinct clusters answer with distinct words; at zero separation the
      // clusters coincide and so do the words.
      const std::size_t word = cfg.separation > 0.0 ? mode : 0;
      ResponseSample r;
      r.response_id = pid + "_r" + zero_pad(i, 2);
      r.text = std::string(kLeads[lead(rng)]) + " " + pid + "a" + std::to_string(word);
      r.embedding_file = "emb/" + r.response_id + ".wdem";
      r.embedding = EmbeddingRef(std::move(z));
      r.token_logprobs = std::move(logprobs);
      rec.responses.push_back(std::move(r));
    }
    records.push_back(std::move(rec));
  }
  return records;
}

PromptRecord subsample(const PromptRecord& record, std::size_t k) {
  PromptRecord out = record;
  if (k > 0 && k < out.responses.size()) out.responses.resize(k);
  return out;
}

PromptAnalysis analyze_prompt(const PromptRecord& record, const RandomProjection& projection,
                              const ScoringOptions& options) {
  PromptAnalysis out;
  out.prompt_id = record.prompt_id;
  out.k = record.k();
  if (record.k() < 2) {
    out.skip_reason = "fewer than two responses";
    return out;
  }
  std::vector<PointCloud> clouds;
  try {
    clouds = load_point_clouds(record, projection);
  } catch (const EmptySupport& e) {
    out.skip_reason = "empty support in response '" + e.response_id() + "'";
    return out;
  }

  const auto& ds = options.detectors;
  out.distances = distance_matrix(clouds, options.threads);
  if (wants(ds, Detector::AvgWD)) out.scores[Detector::AvgWD] = avg_wd(out.distances);
  if (wants(ds, Detector::EigenWD))
    out.scores[Detector::EigenWD] = eigen_wd_from_distances(out.distances, options.signals);
  if (wants(ds, Detector::EffectiveRank) || wants(ds, Detector::Eigenscore)) {
    const Eigen::MatrixXd s = sentence_embeddings(clouds);
    if (wants(ds, Detector::EffectiveRank)) out.scores[Detector::EffectiveRank] = effective_rank(s);
    if (wants(ds, Detector::Eigenscore))
      out.scores[Detector::Eigenscore] = eigenscore(s, options.es_reg);
  }
  if (wants(ds, Detector::LNE)) {
    try {
      out.scores[Detector::LNE] = length_normalized_entropy(record);
    } catch (const MissingLogprobs& e) {
      out.unavailable[Detector::LNE] = e.what();
    }
  }
  if (wants(ds, Detector::LexicalSimilarity))
    out.scores[Detector::LexicalSimilarity] = lexical_similarity_score(record);
  return out;
}

std::vector<PromptAnalysis> analyze_records(const std::vector<PromptRecord>& records,
                                            const RandomProjection& projection,
                                            const ScoringOptions& options) {
  options.signals.validate();
  std::vector<PromptAnalysis> out(records.size());
  ScoringOptions inner = options;
  inner.threads = 1;
  parallel_for(records.size(), options.threads,
               [&](std::size_t i) { out[i] = analyze_prompt(records[i], projection, inner); });
  return out;
}

GroupKey group_key(const PromptRecord& record, std::size_t k,
                   const std::vector<std::string>& extra_keys) {
  auto get = [&](const std::string& key) {
    auto it = record.metadata.find(key);
    return it == record.metadata.end() ? std::string("unknown") : it->second;
  };
  GroupKey g{get("dataset"), get("model"), k};
  for (const auto& key : extra_keys)
    if (key != "dataset" && key != "model") g.dataset += ";" + key + "=" + get(key);
  return g;
}

std::vector<EvalReport> evaluate(const std::vector<PromptRecord>& records,
                                 const std::vector<PromptAnalysis>& analyses,
                                 const std::vector<std::optional<int>>& labels,
                                 const std::vector<Detector>& detectors, double p,
                                 const std::vector<std::string>& extra_keys) {
  if (analyses.size() != records.size() || labels.size() != records.size())
    throw InvalidArgument("evaluate: records, analyses and labels must align");
  std::map<GroupKey, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < records.size(); ++i)
    groups[group_key(records[i], analyses[i].k, extra_keys)].push_back(i);

  std::vector<EvalReport> reports;
  for (const auto& [key, members] : groups) {
    for (Detector det : detectors) {
      EvalReport r;
      r.detector = detector_name(det);
      r.dataset = key.dataset;
      r.model = key.model;
      r.k = key.k;
      r.p = p;
      std::vector<LabeledScore> scored;
      for (std::size_t i : members) {
        const auto& a = analyses[i];
        auto it = a.scores.find(det);
        if (!labels[i] || a.skip_reason || it == a.scores.end()) {
          ++r.skipped;
          continue;
        }
        scored.push_back({records[i].prompt_id, it->second, *labels[i]});
        (*labels[i] == 1 ? r.n_pos : r.n_neg) += 1;
      }
      r.auroc = auroc(scored);
      reports.push_back(std::move(r));
    }
  }
  return reports;
}

std::vector<EvalReport> sweep(const std::vector<PromptRecord>& records,
                              const RandomProjection& projection, const ScoringOptions& options,
                              const SweepGrid& grid, const std::vector<std::optional<int>>& labels,
                              const std::vector<std::string>& extra_keys) {
  const std::vector<std::size_t> ks = grid.k_values.empty() ? std::vector<std::size_t>{0} : grid.k_values;
  const std::vector<double> ps =
      grid.p_values.empty() ? std::vector<double>{options.signals.p} : grid.p_values;
  for (double p : ps) {
    SignalConfig c = options.signals;
    c.p = p;
    c.validate();
  }

  std::vector<EvalReport> reports;
  for (std::size_t k : ks) {
    std::vector<PromptRecord> subset;
    subset.reserve(records.size());
    for (const auto& rec : records) subset.push_back(subsample(rec, k));
    std::vector<PromptAnalysis> analyses = analyze_records(subset, projection, options);
    for (std::size_t i = 0; i < subset.size(); ++i) {
      if (k > 0 && records[i].k() < k) {
        analyses[i].skip_reason = "fewer responses than grid K";
        analyses[i].k = k;
      }
    }
    for (double p : ps) {
      if (wants(options.detectors, Detector::EigenWD)) {
        SignalConfig c = options.signals;
        c.p = p;
        for (auto& a : analyses)
          if (!a.skip_reason) a.scores[Detector::EigenWD] = eigen_wd_from_distances(a.distances, c);
      }
      auto rows = evaluate(subset, analyses, labels, options.detectors, p, extra_keys);
      reports.insert(reports.end(), rows.begin(), rows.end());
    }
  }
  return reports;
}

std::string format_double(double x) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

void write_report_csv(std::ostream& out, const std::vector<EvalReport>& reports) {
  out << kReportHeader << '\n';
  for (const auto& r : reports) {
    out << r.detector << ',' << r.dataset << ',' << r.model << ',' << r.k << ','
        << format_double(r.p) << ',' << (r.auroc ? format_double(*r.auroc) : "undefined") << ','
        << r.n_pos << ',' << r.n_neg << ',' << r.skipped << '\n';
  }
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << '\n';
  }
}

std::string heatmap_pgm(const DistanceMatrix& d) {
  const double lo = d.size() ? d.minCoeff() : 0.0;
  const double hi = d.size() ? d.maxCoeff() : 0.0;
  std::ostringstream out;
  out << "P5\n" << d.cols() << ' ' << d.rows() << "\n255\n";
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.cols(); ++j) {
      const double t = hi > lo ? (d(i, j) - lo) / (hi - lo) : 0.0;
      out.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * t))));
    }
  }
  return out.str();
}

}  // namespace wdhd
