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

#include "wdhd/cli.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "wdhd/error.hpp"
#include "wdhd/evaluation.hpp"
#include "wdhd/interchange.hpp"
#include "wdhd/projection.hpp"
#include "wdhd/signals.hpp"
#include "wdhd/stability.hpp"

namespace wdhd::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Flags shared by every command that scores a manifest.
struct RunConfig {
  std::string command;
  std::string manifest;
  std::string out_dir;
  std::uint64_t seed = 42;
  long proj_dim = 128;
  double p = 0.1;
  double alpha = 1e-6;
  double epsilon = 1e-6;
  std::string bandwidth = "median";
  double eigen_floor = 0.0;
  double es_reg = 1e-3;
  std::string detectors = "all";
  unsigned threads = 1;
  bool strict = false;
  bool export_heatmaps = false;
  std::string scores_file;
  double label_threshold = 0.5;
  std::string group_by;
  std::string k_grid;
  std::string p_grid = "0.1,0.25,0.5,1.0";
  std::string prompt_id;

  SignalConfig signals() const {
    SignalConfig s;
    s.p = p;
    s.alpha = alpha;
    s.epsilon = epsilon;
    s.eigen_floor = eigen_floor;
    if (bandwidth != "median") {
      try {
        s.fixed_bandwidth = std::stod(bandwidth);
      } catch (const std::exception&) {
        throw InvalidArgument("--bandwidth must be 'median' or a positive number");
      }
    }
    s.validate();
    return s;
  }

  ScoringOptions scoring() const {
    ScoringOptions o;
    o.signals = signals();
    o.detectors = parse_detectors(detectors);
    o.es_reg = es_reg;
    o.threads = threads;
    if (!(es_reg > 0.0)) throw InvalidArgument("--es-reg must be > 0");
    if (proj_dim < 1) throw InvalidArgument("--proj-dim must be >= 1");
    return o;
  }

  json to_json() const {
    json j{{"command", command},
           {"manifest", manifest},
           {"out", out_dir},
           {"projection", {{"seed", seed}, {"target_dim", proj_dim}}},
           {"signals",
            {{"p", p},
             {"alpha", alpha},
             {"epsilon", epsilon},
             {"bandwidth", bandwidth},
             {"eigen_floor", eigen_floor}}},
           {"detectors", detectors},
           {"es_reg", es_reg},
           {"threads", threads},
           {"rouge_tokenizer", "lowercase; split on unicode whitespace; drop ascii punctuation"}};
    if (command == "score") {
      j["strict"] = strict;
      j["export_heatmaps"] = export_heatmaps;
    }
    if (command == "eval" || command == "sweep") {
      j["label_threshold"] = label_threshold;
      j["labeling_basis"] = "response[0]";
      j["group_by"] = group_by;
      if (!scores_file.empty()) j["scores"] = scores_file;
    }
    if (command == "sweep") j["sweep"] = {{"k_grid", k_grid}, {"p_grid", p_grid}};
    if (command == "export-heatmap") j["prompt_id"] = prompt_id;
    return j;
  }
};

std::vector<std::string> split(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);)
    if (!item.empty()) out.push_back(item);
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

void write_config(const fs::path& dir, const json& config) {
  fs::create_directories(dir);
  write_text(dir / "run_config.json", config.dump(2) + "\n");
}

void add_scoring_flags(CLI::App& app, RunConfig& c) {
  app.add_option("--manifest", c.manifest, "JSONL manifest")->required();
  app.add_option("--out", c.out_dir, "Output directory")->required();
  app.add_option("--proj-dim", c.proj_dim, "Random projection target dimension")->capture_default_str();
  app.add_option("--seed", c.seed, "Projection seed")->capture_default_str();
  app.add_option("--p", c.p, "EigenWD numerator order, 0 < p < 2")->capture_default_str();
  app.add_option("--alpha", c.alpha, "Kernel diagonal shift")->capture_default_str();
  app.add_option("--epsilon", c.epsilon, "Bandwidth stabilizer")->capture_default_str();
  app.add_option("--bandwidth", c.bandwidth, "'median' or a fixed positive bandwidth")->capture_default_str();
  app.add_option("--eigen-floor", c.eigen_floor, "Clamp for kernel eigenvalues")->capture_default_str();
  app.add_option("--es-reg", c.es_reg, "Eigenscore regularizer")->capture_default_str();
  app.add_option("--detectors", c.detectors, "Comma list of avgwd,eigenwd,er,es,lne,ls or 'all'")
      ->capture_default_str();
  app.add_option("--threads", c.threads, "Worker threads")->capture_default_str();
}

struct Loaded {
  std::vector<PromptRecord> records;
  ScoringOptions options;
  RandomProjection projection;
};

Loaded load(const RunConfig& c) {
  ScoringOptions options = c.scoring();
  return {read_manifest(c.manifest), options,
          RandomProjection(c.seed, static_cast<Eigen::Index>(c.proj_dim))};
}

void export_heatmap(const fs::path& dir, const std::string& prompt_id, const DistanceMatrix& d) {
  fs::create_directories(dir);
  std::ostringstream csv;
  write_matrix_csv(csv, d);
  write_text(dir / (prompt_id + "_D.csv"), csv.str());
  write_text(dir / (prompt_id + "_D.pgm"), heatmap_pgm(d));
}

int cmd_score(const RunConfig& c, std::ostream& out, std::ostream& err) {
  Loaded l = load(c);
  const auto analyses = analyze_records(l.records, l.projection, l.options);
  const fs::path dir = c.out_dir;
  write_config(dir, c.to_json());

  std::ostringstream scores, skipped;
  scores << "prompt_id,detector,score\n";
  skipped << "prompt_id,detector,reason\n";
  std::size_t skipped_prompts = 0;
  for (const auto& a : analyses) {
    if (a.skip_reason) {
      ++skipped_prompts;
      skipped << a.prompt_id << ",*," << *a.skip_reason << '\n';
      continue;
    }
    for (Detector d : l.options.detectors) {
      if (auto it = a.scores.find(d); it != a.scores.end())
        scores << a.prompt_id << ',' << detector_name(d) << ',' << format_double(it->second) << '\n';
      else if (auto u = a.unavailable.find(d); u != a.unavailable.end())
        skipped << a.prompt_id << ',' << detector_name(d) << ',' << u->second << '\n';
    }
    if (c.export_heatmaps) export_heatmap(dir / "heatmaps", a.prompt_id, a.distances);
  }
  write_text(dir / "scores.csv", scores.str());
  write_text(dir / "skipped.csv", skipped.str());
  out << "scored " << analyses.size() - skipped_prompts << " of " << analyses.size()
      << " prompts -> " << (dir / "scores.csv").string() << '\n';
  if (skipped_prompts > 0) {
    err << "skipped " << skipped_prompts << " prompt(s); see " << (dir / "skipped.csv").string()
        << '\n';
    if (c.strict) return kDataError;
  }
  return kSuccess;
}

// scores.csv from a previous `score` run, mapped back onto analyses.
std::vector<PromptAnalysis> read_scores(const std::string& path,
                                        const std::vector<PromptRecord>& records) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open scores file " + path);
  std::map<std::string, std::size_t> index;
  std::vector<PromptAnalysis> analyses(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    index[records[i].prompt_id] = i;
    analyses[i].prompt_id = records[i].prompt_id;
    analyses[i].k = records[i].k();
    analyses[i].skip_reason = "absent from scores file";
  }
  std::string line;
  std::getline(in, line);
  if (line != "prompt_id,detector,score") throw DataError(path + ": unexpected header");
  for (std::size_t n = 2; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    const auto fields = split(line);
    if (fields.size() != 3) throw DataError(path + ": malformed line " + std::to_string(n));
    auto it = index.find(fields[0]);
    if (it == index.end()) continue;
    auto& a = analyses[it->second];
    a.skip_reason.reset();
    try {
      a.scores[parse_detector(fields[1])] = std::stod(fields[2]);
    } catch (const std::invalid_argument&) {
      throw DataError(path + ": malformed line " + std::to_string(n));
    }
  }
  return analyses;
}

void report_labels(const Labeling& labels, std::ostream& err) {
  if (labels.excluded > 0)
    err << "warning: " << labels.excluded
        << " prompt(s) have neither a label nor a reference and are excluded\n";
}

int cmd_eval(const RunConfig& c, std::ostream& out, std::ostream& err) {
  Loaded l = load(c);
  const Labeling labels = make_labels(l.records, c.label_threshold);
  report_labels(labels, err);
  const auto analyses = c.scores_file.empty()
                            ? analyze_records(l.records, l.projection, l.options)
                            : read_scores(c.scores_file, l.records);
  const auto reports = evaluate(l.records, analyses, labels.labels, l.options.detectors, c.p,
                                split(c.group_by));
  write_config(c.out_dir, c.to_json());
  std::ostringstream csv;
  write_report_csv(csv, reports);
  write_text(fs::path(c.out_dir) / "eval.csv", csv.str());
  out << csv.str();
  return kSuccess;
}

int cmd_sweep(const RunConfig& c, std::ostream& out, std::ostream& err) {
  Loaded l = load(c);
  const Labeling labels = make_labels(l.records, c.label_threshold);
  report_labels(labels, err);
  SweepGrid grid;
  try {
    for (const auto& k : split(c.k_grid)) grid.k_values.push_back(std::stoul(k));
    for (const auto& p : split(c.p_grid)) grid.p_values.push_back(std::stod(p));
  } catch (const std::exception&) {
    throw InvalidArgument("--k-grid and --p-grid take comma-separated numbers");
  }
  const auto reports = sweep(l.records, l.projection, l.options, grid, labels.labels, split(c.group_by));
  write_config(c.out_dir, c.to_json());
  std::ostringstream csv;
  write_report_csv(csv, reports);
  write_text(fs::path(c.out_dir) / "sweep.csv", csv.str());
  out << csv.str();
  return kSuccess;
}

int cmd_export_heatmap(const RunConfig& c, std::ostream& out) {
  Loaded l = load(c);
  for (const auto& rec : l.records) {
    if (rec.prompt_id != c.prompt_id) continue;
    const DistanceMatrix d = distance_matrix(rec, l.projection, c.threads);
    write_config(c.out_dir, c.to_json());
    export_heatmap(c.out_dir, rec.prompt_id, d);
    out << "wrote " << (fs::path(c.out_dir) / (rec.prompt_id + "_D.{csv,pgm}")).string() << '\n';
    return kSuccess;
  }
  throw DataError("unknown prompt_id '" + c.prompt_id + "'");
}

int cmd_check(const StabilityConfig& s, const std::string& out_dir, std::ostream& out) {
  struct Row {
    const char* name;
    PerturbationReport report;
  };
  const std::vector<Row> rows{{"token_bound", check_lemma_token_bound(s)},
                              {"two_sided_stability", check_two_sided_stability(s)},
                              {"avgwd_lipschitz", check_avgwd_lipschitz(s)},
                              {"spectral_chain", check_spectral_chain(s)}};
  std::ostringstream csv;
  csv << "check,trials,max_slack,violations\n";
  std::size_t violations = 0;
  for (const auto& r : rows) {
    csv << r.name << ',' << r.report.trial_count << ',' << format_double(r.report.max_slack) << ','
        << r.report.violations << '\n';
    violations += r.report.violations;
  }
  out << csv.str();
  if (!out_dir.empty()) {
    json cfg{{"command", "check"},
             {"trials", s.trials},
             {"seed", s.seed},
             {"noise_scale", s.noise_scale},
             {"fixed_bandwidth", s.fixed_bandwidth},
             {"epsilon", s.epsilon},
             {"alpha", s.alpha},
             {"entry_bound", s.entry_bound}};
    write_config(out_dir, cfg);
    write_text(fs::path(out_dir) / "check.csv", csv.str());
  }
  return violations == 0 ? kSuccess : kSolverFailure;
}

int cmd_synth(const SynthConfig& s, const std::string& out_dir, std::ostream& out) {
  const auto records = synth_dataset(s);
  write_dataset(records, out_dir);
  json cfg{{"command", "synth"},      {"n_prompts", s.n_prompts}, {"k", s.k},
           {"modes", s.modes},        {"separation", s.separation}, {"seed", s.seed},
           {"dim", s.dim},            {"sigma", s.sigma},
           {"min_tokens", s.min_tokens}, {"max_tokens", s.max_tokens}};
  write_config(out_dir, cfg);
  out << "wrote " << records.size() << " prompts to " << (fs::path(out_dir) / "manifest.jsonl").string()
      << '\n';
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Wasserstein-distance hallucination scoring"};
  app.require_subcommand(1);

  RunConfig score_cfg, eval_cfg, sweep_cfg, heat_cfg;
  score_cfg.command = "score";
  eval_cfg.command = "eval";
  sweep_cfg.command = "sweep";
  heat_cfg.command = "export-heatmap";

  auto* score = app.add_subcommand("score", "Score every prompt with the selected detectors");
  add_scoring_flags(*score, score_cfg);
  score->add_flag("--strict", score_cfg.strict, "Exit nonzero if any prompt was skipped");
  score->add_flag("--export-heatmaps", score_cfg.export_heatmaps, "Write D as CSV and PGM per prompt");

  auto* eval = app.add_subcommand("eval", "AUROC per detector and metadata partition");
  add_scoring_flags(*eval, eval_cfg);
  eval->add_option("--scores", eval_cfg.scores_file, "Reuse scores.csv from a score run");
  eval->add_option("--label-threshold", eval_cfg.label_threshold, "ROUGE-L threshold for labels")
      ->capture_default_str();
  eval->add_option("--group-by", eval_cfg.group_by, "Extra metadata keys to partition by");

  auto* sw = app.add_subcommand("sweep", "AUROC over a grid of K subsamples and p values");
  add_scoring_flags(*sw, sweep_cfg);
  sw->add_option("--k-grid", sweep_cfg.k_grid, "Comma list of K values (first K responses)");
  sw->add_option("--p-grid", sweep_cfg.p_grid, "Comma list of p values")->capture_default_str();
  sw->add_option("--label-threshold", sweep_cfg.label_threshold, "ROUGE-L threshold for labels")
      ->capture_default_str();
  sw->add_option("--group-by", sweep_cfg.group_by, "Extra metadata keys to partition by");

  auto* heat = app.add_subcommand("export-heatmap", "Write one prompt's distance matrix");
  add_scoring_flags(*heat, heat_cfg);
  heat->add_option("--prompt-id", heat_cfg.prompt_id, "Prompt to export")->required();

  StabilityConfig check_cfg;
  std::string check_out;
  auto* check = app.add_subcommand("check", "Verify the perturbation bounds on random trials");
  check->add_option("--trials", check_cfg.trials)->capture_default_str();
  check->add_option("--seed", check_cfg.seed)->capture_default_str();
  check->add_option("--noise-scale", check_cfg.noise_scale)->capture_default_str();
  check->add_option("--fixed-bandwidth", check_cfg.fixed_bandwidth)->capture_default_str();
  check->add_option("--out", check_out, "Optional output directory for check.csv");

  SynthConfig synth_cfg;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic manifest and embedding blobs");
  synth->add_option("--out", synth_out)->required();
  synth->add_option("--n-prompts", synth_cfg.n_prompts)->capture_default_str();
  synth->add_option("--k", synth_cfg.k)->capture_default_str();
  synth->add_option("--modes", synth_cfg.modes)->capture_default_str();
  synth->add_option("--separation", synth_cfg.separation)->capture_default_str();
  synth->add_option("--seed", synth_cfg.seed)->capture_default_str();
  synth->add_option("--dim", synth_cfg.dim)->capture_default_str();

  std::vector<const char*> argv{"wdhd"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageError;
  }

  try {
    // Validate flags up front so bad values are usage errors, not data errors.
    for (const RunConfig* c : {&score_cfg, &eval_cfg, &sweep_cfg, &heat_cfg})
      if (app.got_subcommand(c->command)) (void)c->scoring();
    if (check->parsed() && check_cfg.fixed_bandwidth <= 0.0)
      throw InvalidArgument("--fixed-bandwidth must be > 0");
  } catch (const InvalidArgument& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  }

  try {
    if (score->parsed()) return cmd_score(score_cfg, out, err);
    if (eval->parsed()) return cmd_eval(eval_cfg, out, err);
    if (sw->parsed()) return cmd_sweep(sweep_cfg, out, err);
    if (heat->parsed()) return cmd_export_heatmap(heat_cfg, out);
    if (check->parsed()) return cmd_check(check_cfg, check_out, out);
    if (synth->parsed()) return cmd_synth(synth_cfg, synth_out, out);
  } catch (const SolverError& e) {
    err << "solver failure: " << e.what() << '\n';
    return kSolverFailure;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const InvalidArgument& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "I/O error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsageError;
}

}  // namespace wdhd::cli
