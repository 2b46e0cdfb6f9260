// Command-line surface for the meta-evaluation library: dataset ingestion,
// metric ranking with significance clusters, tie calibration, and the
// diagnostic experiment drivers. Every command writes a manifest sidecar
// recording the resolved configuration and input digests.

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "meval/corpus.hpp"
#include "meval/correlation.hpp"
#include "meval/experiments.hpp"
#include "meval/format.hpp"
#include "meval/rng.hpp"
#include "meval/sentinels.hpp"
#include "meval/significance.hpp"
#include "meval/ties.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "meval 0.1.0";

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string file_digest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) meval::raise(meval::Errc::io_error, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  char hex[32];
  std::snprintf(hex, sizeof(hex), "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(buf.str())));
  return hex;
}

// Digests of every file a dataset directory contributes.
void digest_dataset_dir(const fs::path& dir, json& inputs) {
  std::vector<fs::path> files;
  files.push_back(dir / "human.tsv");
  if (fs::is_directory(dir / "metrics")) {
    for (const auto& entry : fs::directory_iterator(dir / "metrics")) {
      if (entry.path().extension() == ".tsv") files.push_back(entry.path());
    }
  }
  for (const char* name : {"lengths.tsv", "flags.tsv"}) {
    if (fs::exists(dir / name)) files.push_back(dir / name);
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) inputs[f.string()] = file_digest(f);
}

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) meval::raise(meval::Errc::io_error, "cannot write " + path.string());
  out << content;
}

void write_manifest(const fs::path& out, const std::string& command,
                    const json& config, const json& inputs) {
  json manifest = {{"command", command},
                   {"version", kVersion},
                   {"config", config},
                   {"inputs", inputs}};
  write_text(out.string() + ".manifest.json", manifest.dump(2) + "\n");
}

std::uint64_t resolve_seed(std::optional<std::uint64_t> seed) {
  if (seed) return *seed;
  std::random_device rd;
  const std::uint64_t generated =
      (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  std::cerr << "note: no --seed given, generated seed " << generated
            << " (recorded in the manifest)\n";
  return generated;
}

meval::Grouping parse_grouping(const std::string& s) {
  if (s == "none") return meval::Grouping::none;
  if (s == "segment") return meval::Grouping::segment;
  if (s == "system") return meval::Grouping::system;
  throw CLI::ValidationError("--grouping must be none, segment, or system");
}

meval::PairScope parse_scope(const std::string& s) {
  if (s == "segment") return meval::PairScope::within_segment;
  if (s == "all") return meval::PairScope::all;
  throw CLI::ValidationError("--pair-scope must be segment or all");
}

// Metric list resolution: explicit names are validated against the dataset,
// an empty list means every metric in canonical order.
std::vector<std::string> resolve_metrics(const meval::Dataset& dataset,
                                         std::vector<std::string> names) {
  if (names.empty()) {
    names = dataset.metric_names();
    if (names.empty()) {
      meval::raise(meval::Errc::unknown_metric,
                   "dataset '" + dataset.language_pair() + "' has no metrics");
    }
    return names;
  }
  for (const auto& n : names) dataset.scores(n);  // validates
  return names;
}

std::vector<meval::SubsampleConfig> read_grid_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) meval::raise(meval::Errc::io_error, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "p_tied\tp_untied") {
    meval::raise(meval::Errc::parse_error,
                 path.string() + ": expected header 'p_tied\\tp_untied'");
  }
  std::vector<meval::SubsampleConfig> grid;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    meval::SubsampleConfig cfg;
    char tab = 0;
    if (!(row >> cfg.tied_removal_prob) || !(row.get(tab), tab == '\t') ||
        !(row >> cfg.untied_removal_prob) || !(row >> std::ws).eof() ||
        cfg.tied_removal_prob < 0.0 || cfg.tied_removal_prob > 1.0 ||
        cfg.untied_removal_prob < 0.0 || cfg.untied_removal_prob > 1.0) {
      meval::raise(meval::Errc::parse_error,
                   path.string() + ":" + std::to_string(line_no) +
                       ": expected two probabilities in [0, 1]");
    }
    grid.push_back(cfg);
  }
  if (grid.empty()) {
    meval::raise(meval::Errc::parse_error, path.string() + ": empty grid");
  }
  return grid;
}

json calibration_json(const meval::CalibrationResult& cal, std::size_t n_pairs) {
  return {{"epsilon", meval::rounded_number(cal.epsilon)},
          {"acc_eq", meval::rounded_number(cal.acc_eq)},
          {"counts",
           {{"concordant", cal.counts_at_epsilon.concordant},
            {"discordant", cal.counts_at_epsilon.discordant},
            {"human_only", cal.counts_at_epsilon.human_only},
            {"metric_only", cal.counts_at_epsilon.metric_only},
            {"both_tied", cal.counts_at_epsilon.both_tied}}},
          {"candidates_evaluated", cal.candidates_evaluated},
          {"n_pairs", n_pairs}};
}

struct StatisticChoice {
  meval::StatisticFn fn;
  meval::ValueKind kind = meval::ValueKind::correlation;
};

StatisticChoice make_statistic(const std::string& name, meval::Grouping grouping,
                               meval::PairScope scope) {
  using meval::Statistic;
  using meval::ValueKind;
  if (name == "pearson") {
    return {meval::grouped_statistic_fn(Statistic::pearson, grouping),
            ValueKind::correlation};
  }
  if (name == "kendall") {
    return {meval::grouped_statistic_fn(Statistic::kendall_tau, grouping),
            ValueKind::correlation};
  }
  if (name == "acc_eq") {
    return {meval::calibrated_acc_eq_fn(scope), ValueKind::accuracy};
  }
  if (name == "sys_acc") {
    return {meval::sys_pairwise_accuracy_fn(), ValueKind::accuracy};
  }
  if (name == "sys_pearson") {
    return {meval::system_level_pearson_fn(), ValueKind::correlation};
  }
  throw CLI::ValidationError(
      "--statistic must be one of pearson, kendall, acc_eq, sys_acc, "
      "sys_pearson");
}

// ---------------------------------------------------------------------------
// rank

struct RankOptions {
  std::vector<std::string> data_dirs;
  std::vector<std::string> statistics{"pearson", "acc_eq"};
  std::string grouping = "none";
  std::string pair_scope = "segment";
  int resamples = 1000;
  double alpha = 0.05;
  std::optional<std::uint64_t> seed;
  int workers = 1;
  std::string out;
};

void run_rank(const RankOptions& opt) {
  const meval::Grouping grouping = parse_grouping(opt.grouping);
  const meval::PairScope scope = parse_scope(opt.pair_scope);
  for (const auto& name : opt.statistics) {
    make_statistic(name, grouping, scope);  // flag validation before any IO
  }

  std::vector<meval::Dataset> datasets;
  for (const auto& dir : opt.data_dirs) datasets.push_back(meval::load_dataset(dir));

  const std::vector<std::string> metrics = resolve_metrics(datasets.front(), {});
  if (metrics.size() < 2) {
    meval::raise(meval::Errc::too_few_metrics,
                 "ranking needs at least 2 metrics");
  }
  for (const auto& ds : datasets) {
    auto names = ds.metric_names();
    std::sort(names.begin(), names.end());
    auto expected = metrics;
    std::sort(expected.begin(), expected.end());
    if (names != expected) {
      meval::raise(meval::Errc::inconsistent_metric_sets,
                   "dataset '" + ds.language_pair() +
                       "' has a different metric set");
    }
  }

  meval::PermConfig perm;
  perm.n_resamples = opt.resamples;
  perm.alpha = opt.alpha;
  perm.seed = resolve_seed(opt.seed);
  perm.n_workers = opt.workers;

  std::vector<meval::TaskResult> tasks;
  json per_task = json::object();
  for (const auto& ds : datasets) {
    for (const auto& stat_name : opt.statistics) {
      const StatisticChoice stat = make_statistic(stat_name, grouping, scope);
      const std::string task_id = ds.language_pair() + ":" + stat_name;
      meval::PermConfig task_perm = perm;
      task_perm.seed = meval::derive_seed(perm.seed, {tasks.size()});
      tasks.push_back(meval::evaluate_task(task_id, stat.kind, ds, metrics,
                                           stat.fn, task_perm));
      const meval::TaskResult& task = tasks.back();

      std::vector<std::pair<std::string, double>> values = task.values;
      const auto ranks = meval::cluster_ranks(values, task.pvalues, opt.alpha);
      json rows = json::array();
      for (const auto& [name, value] : values) {
        rows.push_back({{"metric", name},
                        {"value", meval::rounded_number(value)},
                        {"rank", ranks.at(name)}});
      }
      json pvalues = json::object();
      for (const auto& [pair, p] : task.pvalues) {
        pvalues[pair.first + "|" + pair.second] = meval::rounded_number(p);
      }
      per_task[task_id] = {{"rows", rows}, {"pvalues", pvalues}};

      std::string safe_id = task_id;
      for (char& c : safe_id) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-') c = '_';
      }
      std::ostringstream task_tsv;
      task_tsv << "metric\tvalue\trank\n";
      for (const auto& [name, value] : values) {
        task_tsv << name << '\t' << meval::format_number(value) << '\t'
                 << ranks.at(name) << '\n';
      }
      write_text(opt.out + "." + safe_id + ".tsv", task_tsv.str());
    }
  }

  const meval::RankingTable table = meval::aggregate_ranking(tasks, nullptr, opt.alpha);
  write_text(opt.out, table.to_tsv());
  json out_json = table.to_json();
  out_json["per_task"] = per_task;
  write_text(opt.out + ".json", out_json.dump(2) + "\n");

  json inputs = json::object();
  for (const auto& dir : opt.data_dirs) digest_dataset_dir(dir, inputs);
  write_manifest(opt.out, "rank",
                 {{"data", opt.data_dirs},
                  {"statistics", opt.statistics},
                  {"grouping", opt.grouping},
                  {"pair_scope", opt.pair_scope},
                  {"resamples", opt.resamples},
                  {"alpha", opt.alpha},
                  {"seed", perm.seed},
                  {"workers", opt.workers},
                  {"metrics", metrics},
                  {"out", opt.out}},
                 inputs);
}

// ---------------------------------------------------------------------------
// calibrate

struct CalibrateOptions {
  std::string data_dir;
  std::vector<std::string> metrics;
  std::string pair_scope = "segment";
  std::string out;
};

void run_calibrate(const CalibrateOptions& opt) {
  const meval::PairScope scope = parse_scope(opt.pair_scope);
  const meval::Dataset dataset = meval::load_dataset(opt.data_dir);
  const auto metrics = resolve_metrics(dataset, opt.metrics);

  json results = json::object();
  for (const auto& name : metrics) {
    const meval::PairSet pairs =
        meval::enumerate_pairs(dataset.scores(name), dataset.human(), scope);
    const meval::CalibrationResult cal = meval::calibrate_epsilon(pairs);
    results[name] = calibration_json(cal, pairs.size());
  }
  write_text(opt.out, results.dump(2) + "\n");

  json inputs = json::object();
  digest_dataset_dir(opt.data_dir, inputs);
  write_manifest(opt.out, "calibrate",
                 {{"data", opt.data_dir},
                  {"metrics", metrics},
                  {"pair_scope", opt.pair_scope},
                  {"out", opt.out}},
                 inputs);
}

// ---------------------------------------------------------------------------
// sweep / heldout

struct SweepOptions {
  std::string data_dir;
  std::vector<std::string> metrics;
  std::string grid_file;
  std::optional<double> p_tied;
  std::optional<double> p_untied;
  int n_seeds = 5;
  std::optional<std::uint64_t> seed;
  std::string pair_scope = "segment";
  double calibration_fraction = 0.2;  // heldout only
  std::string out;
};

std::vector<meval::SubsampleConfig> resolve_grid(const SweepOptions& opt) {
  if (!opt.grid_file.empty() && (opt.p_tied || opt.p_untied)) {
    throw CLI::ValidationError(
        "--grid-file cannot be combined with --p-tied/--p-untied");
  }
  if (!opt.grid_file.empty()) return read_grid_file(opt.grid_file);
  if (opt.p_tied || opt.p_untied) {
    meval::SubsampleConfig cfg;
    cfg.tied_removal_prob = opt.p_tied.value_or(0.0);
    cfg.untied_removal_prob = opt.p_untied.value_or(0.0);
    return {cfg};
  }
  return meval::default_sweep_grid();
}

json sweep_config_json(const SweepOptions& opt,
                       const std::vector<meval::SubsampleConfig>& grid,
                       const std::vector<std::string>& metrics,
                       std::uint64_t seed) {
  json grid_json = json::array();
  for (const auto& cfg : grid) {
    grid_json.push_back({{"p_tied", cfg.tied_removal_prob},
                         {"p_untied", cfg.untied_removal_prob}});
  }
  return {{"data", opt.data_dir},   {"metrics", metrics},
          {"grid", grid_json},      {"n_seeds", opt.n_seeds},
          {"seed", seed},           {"pair_scope", opt.pair_scope},
          {"out", opt.out}};
}

void write_sweep_outputs(const SweepOptions& opt, const meval::SweepResult& result,
                         const std::string& command, json config) {
  write_text(opt.out, result.to_csv());
  write_text(opt.out + ".json", result.to_json().dump(2) + "\n");
  json inputs = json::object();
  digest_dataset_dir(opt.data_dir, inputs);
  if (!opt.grid_file.empty()) inputs[opt.grid_file] = file_digest(opt.grid_file);
  write_manifest(opt.out, command, std::move(config), inputs);
}

void run_sweep(const SweepOptions& opt) {
  const meval::PairScope scope = parse_scope(opt.pair_scope);
  const auto grid = resolve_grid(opt);
  const meval::Dataset dataset = meval::load_dataset(opt.data_dir);
  const auto metrics = resolve_metrics(dataset, opt.metrics);
  const std::uint64_t seed = resolve_seed(opt.seed);

  const meval::SweepResult result =
      meval::tie_sweep(dataset, metrics, grid, opt.n_seeds, seed, scope);
  write_sweep_outputs(opt, result, "sweep",
                      sweep_config_json(opt, grid, metrics, seed));
}

void run_heldout(const SweepOptions& opt) {
  const meval::PairScope scope = parse_scope(opt.pair_scope);
  const auto grid = resolve_grid(opt);
  const meval::Dataset dataset = meval::load_dataset(opt.data_dir);
  const auto metrics = resolve_metrics(dataset, opt.metrics);
  const std::uint64_t seed = resolve_seed(opt.seed);

  meval::HeldOutConfig base;
  base.calibration_fraction = opt.calibration_fraction;
  base.seed = seed;
  const meval::SweepResult result =
      meval::held_out_sweep(dataset, metrics, base, grid, opt.n_seeds, scope);
  json config = sweep_config_json(opt, grid, metrics, seed);
  config["calibration_fraction"] = opt.calibration_fraction;
  write_sweep_outputs(opt, result, "heldout", std::move(config));
}

// ---------------------------------------------------------------------------
// lengthbias

struct LengthBiasOptions {
  std::string data_dir;
  std::string metric;
  std::optional<double> min_human;
  std::string out;
};

void run_lengthbias(const LengthBiasOptions& opt) {
  const meval::Dataset dataset = meval::load_dataset(opt.data_dir);
  const meval::LengthBiasReport report =
      meval::length_bias_report(dataset, opt.metric, opt.min_human);
  write_text(opt.out, report.to_csv());
  write_text(opt.out + ".json", report.to_json().dump(2) + "\n");

  json inputs = json::object();
  digest_dataset_dir(opt.data_dir, inputs);
  json config = {{"data", opt.data_dir}, {"metric", opt.metric}, {"out", opt.out}};
  if (opt.min_human) config["min_human"] = *opt.min_human;
  write_manifest(opt.out, "lengthbias", config, inputs);
}

// ---------------------------------------------------------------------------
// matrix

struct MatrixOptions {
  std::string data_dir;
  std::vector<std::string> metrics;
  std::string grouping = "none";
  std::string out;
};

void run_matrix(const MatrixOptions& opt) {
  const meval::Grouping grouping = parse_grouping(opt.grouping);
  const meval::Dataset dataset = meval::load_dataset(opt.data_dir);
  const auto metrics = resolve_metrics(dataset, opt.metrics);
  if (metrics.size() < 2) {
    throw CLI::ValidationError("matrix needs at least 2 metrics");
  }

  const auto matrix = meval::metric_correlation_matrix(dataset, metrics, grouping);
  write_text(opt.out, meval::correlation_matrix_tsv(metrics, matrix));
  json matrix_json = json::object();
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    json row = json::object();
    for (std::size_t j = 0; j < metrics.size(); ++j) {
      row[metrics[j]] = meval::rounded_number(matrix[i][j]);
    }
    matrix_json[metrics[i]] = row;
  }
  write_text(opt.out + ".json", matrix_json.dump(2) + "\n");

  json inputs = json::object();
  digest_dataset_dir(opt.data_dir, inputs);
  write_manifest(opt.out, "matrix",
                 {{"data", opt.data_dir},
                  {"metrics", metrics},
                  {"grouping", opt.grouping},
                  {"out", opt.out}},
                 inputs);
}

// ---------------------------------------------------------------------------
// sentinel

struct SentinelOptions {
  std::string data_dir;
  std::string mode;
  std::string metric;
  std::string reducer = "mean";
  double variance = 1e-4;
  double truncation_factor = 0.4;
  std::vector<double> levels;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void run_sentinel(const SentinelOptions& opt) {
  const meval::Dataset dataset = meval::load_dataset(opt.data_dir);

  meval::ScoreMatrix result;
  std::uint64_t seed = 0;
  if (opt.mode == "seg-const") {
    meval::SegmentReducer reducer;
    if (opt.reducer == "mean") {
      reducer = meval::SegmentReducer::mean;
    } else if (opt.reducer == "median") {
      reducer = meval::SegmentReducer::median;
    } else {
      throw CLI::ValidationError("--reducer must be mean or median");
    }
    result = meval::segment_constant_scores(dataset.human(), reducer);
  } else if (opt.mode == "perturb") {
    if (opt.metric.empty()) {
      throw CLI::ValidationError("--mode perturb requires --metric");
    }
    seed = resolve_seed(opt.seed);
    meval::PerturbConfig config;
    config.variance = opt.variance;
    config.truncation_factor = opt.truncation_factor;
    config.seed = seed;
    result = meval::perturb_discrete(dataset.scores(opt.metric), config);
  } else if (opt.mode == "discretize") {
    if (opt.metric.empty()) {
      throw CLI::ValidationError("--mode discretize requires --metric");
    }
    if (opt.levels.size() < 2) {
      throw CLI::ValidationError("--mode discretize requires --levels with >= 2 values");
    }
    std::vector<double> levels = opt.levels;
    std::sort(levels.begin(), levels.end());
    if (std::adjacent_find(levels.begin(), levels.end()) != levels.end()) {
      throw CLI::ValidationError("--levels values must be distinct");
    }
    result = meval::discretize(dataset.scores(opt.metric),
                               meval::DiscreteLevels(levels));
  } else {
    throw CLI::ValidationError("--mode must be seg-const, perturb, or discretize");
  }

  const fs::path out_path(opt.out);
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  meval::write_score_matrix_tsv(result, dataset.segments(), dataset.systems(),
                                out_path);

  json inputs = json::object();
  digest_dataset_dir(opt.data_dir, inputs);
  json config = {{"data", opt.data_dir},
                 {"mode", opt.mode},
                 {"name", result.name()},
                 {"out", opt.out}};
  if (opt.mode == "seg-const") config["reducer"] = opt.reducer;
  if (opt.mode == "perturb") {
    config["metric"] = opt.metric;
    config["variance"] = opt.variance;
    config["truncation_factor"] = opt.truncation_factor;
    config["seed"] = seed;
  }
  if (opt.mode == "discretize") {
    config["metric"] = opt.metric;
    config["levels"] = opt.levels;
  }
  write_manifest(opt.out, "sentinel", config, inputs);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"meval: meta-evaluation of machine-translation metrics"};
  app.require_subcommand(1);

  RankOptions rank;
  auto* rank_cmd = app.add_subcommand(
      "rank", "Rank metrics by agreement with human judgments");
  rank_cmd->add_option("--data", rank.data_dirs, "dataset directories")
      ->required()
      ->expected(-1);
  rank_cmd->add_option("--statistic", rank.statistics,
                       "pearson|kendall|acc_eq|sys_acc|sys_pearson");
  rank_cmd->add_option("--grouping", rank.grouping, "none|segment|system");
  rank_cmd->add_option("--pair-scope", rank.pair_scope, "segment|all");
  rank_cmd->add_option("--resamples", rank.resamples, "permutation resamples")
      ->check(CLI::PositiveNumber);
  rank_cmd->add_option("--alpha", rank.alpha, "significance level");
  rank_cmd->add_option("--seed", rank.seed, "RNG seed");
  rank_cmd->add_option("--workers", rank.workers, "permutation worker threads")
      ->check(CLI::PositiveNumber);
  rank_cmd->add_option("--out", rank.out, "output TSV path")->required();
  rank_cmd->callback([&] { run_rank(rank); });

  CalibrateOptions calibrate;
  auto* calibrate_cmd =
      app.add_subcommand("calibrate", "Tie-calibrate epsilon per metric");
  calibrate_cmd->add_option("--data", calibrate.data_dir, "dataset directory")
      ->required();
  calibrate_cmd->add_option("--metric", calibrate.metrics,
                            "metric names (default: all)");
  calibrate_cmd->add_option("--pair-scope", calibrate.pair_scope, "segment|all");
  calibrate_cmd->add_option("--out", calibrate.out, "output JSON path")
      ->required();
  calibrate_cmd->callback([&] { run_calibrate(calibrate); });

  SweepOptions sweep;
  auto* sweep_cmd = app.add_subcommand(
      "sweep", "Tie-distribution subsampling sweep with recalibration");
  sweep_cmd->add_option("--data", sweep.data_dir, "dataset directory")->required();
  sweep_cmd->add_option("--metric", sweep.metrics, "metric names (default: all)");
  sweep_cmd->add_option("--grid-file", sweep.grid_file,
                        "TSV of removal probabilities (p_tied, p_untied)");
  sweep_cmd->add_option("--p-tied", sweep.p_tied,
                        "single-point grid: removal probability for tied pairs");
  sweep_cmd->add_option("--p-untied", sweep.p_untied,
                        "single-point grid: removal probability for untied pairs");
  sweep_cmd->add_option("--n-seeds", sweep.n_seeds, "seeds per grid point")
      ->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--seed", sweep.seed, "base RNG seed");
  sweep_cmd->add_option("--pair-scope", sweep.pair_scope, "segment|all");
  sweep_cmd->add_option("--out", sweep.out, "output CSV path")->required();
  sweep_cmd->callback([&] { run_sweep(sweep); });

  SweepOptions heldout;
  auto* heldout_cmd = app.add_subcommand(
      "heldout", "Calibrate epsilon on a held-out split, evaluate on the rest");
  heldout_cmd->add_option("--data", heldout.data_dir, "dataset directory")
      ->required();
  heldout_cmd->add_option("--metric", heldout.metrics, "metric names (default: all)");
  heldout_cmd->add_option("--grid-file", heldout.grid_file,
                          "TSV of removal probabilities for the calibration split");
  heldout_cmd->add_option("--p-tied", heldout.p_tied,
                          "single-point grid: removal probability for tied pairs");
  heldout_cmd->add_option("--p-untied", heldout.p_untied,
                          "single-point grid: removal probability for untied pairs");
  heldout_cmd->add_option("--calibration-fraction", heldout.calibration_fraction,
                          "share of segments used for calibration");
  heldout_cmd->add_option("--n-seeds", heldout.n_seeds, "seeds per grid point")
      ->check(CLI::PositiveNumber);
  heldout_cmd->add_option("--seed", heldout.seed, "base RNG seed");
  heldout_cmd->add_option("--pair-scope", heldout.pair_scope, "segment|all");
  heldout_cmd->add_option("--out", heldout.out, "output CSV path")->required();
  heldout_cmd->callback([&] { run_heldout(heldout); });

  LengthBiasOptions lengthbias;
  auto* lengthbias_cmd = app.add_subcommand(
      "lengthbias", "Score-over-length scatter with least-squares fit");
  lengthbias_cmd->add_option("--data", lengthbias.data_dir, "dataset directory")
      ->required();
  lengthbias_cmd
      ->add_option("--metric", lengthbias.metric, "metric name or 'human'")
      ->required();
  lengthbias_cmd->add_option("--min-human", lengthbias.min_human,
                             "drop entries with human score below this");
  lengthbias_cmd->add_option("--out", lengthbias.out, "output CSV path")
      ->required();
  lengthbias_cmd->callback([&] { run_lengthbias(lengthbias); });

  MatrixOptions matrix;
  auto* matrix_cmd =
      app.add_subcommand("matrix", "Pairwise metric-metric correlation matrix");
  matrix_cmd->add_option("--data", matrix.data_dir, "dataset directory")
      ->required();
  matrix_cmd->add_option("--metric", matrix.metrics, "metric names (default: all)");
  matrix_cmd->add_option("--grouping", matrix.grouping, "none|segment|system");
  matrix_cmd->add_option("--out", matrix.out, "output TSV path")->required();
  matrix_cmd->callback([&] { run_matrix(matrix); });

  SentinelOptions sentinel;
  auto* sentinel_cmd = app.add_subcommand(
      "sentinel", "Generate sentinel score matrices (canonical metric TSV)");
  sentinel_cmd->add_option("--data", sentinel.data_dir, "dataset directory")
      ->required();
  sentinel_cmd
      ->add_option("--mode", sentinel.mode, "seg-const|perturb|discretize")
      ->required();
  sentinel_cmd->add_option("--metric", sentinel.metric,
                           "input metric (perturb/discretize)");
  sentinel_cmd->add_option("--reducer", sentinel.reducer, "mean|median (seg-const)");
  sentinel_cmd->add_option("--variance", sentinel.variance,
                           "noise variance (perturb)");
  sentinel_cmd->add_option("--truncation-factor", sentinel.truncation_factor,
                           "noise cap as a share of the minimum level gap");
  sentinel_cmd->add_option("--levels", sentinel.levels,
                           "discrete levels (discretize)");
  sentinel_cmd->add_option("--seed", sentinel.seed, "RNG seed (perturb)");
  sentinel_cmd->add_option("--out", sentinel.out, "output TSV path")->required();
  sentinel_cmd->callback([&] { run_sentinel(sentinel); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 4;
  } catch (const meval::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return meval::is_data_error(e.code()) ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
