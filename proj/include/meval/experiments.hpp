#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "meval/correlation.hpp"
#include "meval/ties.hpp"

namespace meval {

// Pair-removal probabilities for reshaping the tie distribution of a test
// set. Decisions are a pure function of (seed, pair keys), so the same seed
// removes the same logical pairs from every metric's pair set.
struct SubsampleConfig {
  double tied_removal_prob = 0.0;    // applies to human-tied pairs
  double untied_removal_prob = 0.0;  // applies to the rest
  std::uint64_t seed = 0;
};

struct HeldOutConfig {
  double calibration_fraction = 0.2;  // share of segments used to pick epsilon
  std::uint64_t seed = 0;
  SubsampleConfig subsample;  // applied to the calibration split only
};

struct OlsFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t n = 0;
};

struct MetricSweepPoint {
  double epsilon = 0.0;
  double acc_eq = 0.0;
  double epsilon_scaled = 0.0;  // min-max scaled per metric across the sweep
};

struct SweepRow {
  double tied_removal_prob = 0.0;
  double untied_removal_prob = 0.0;
  double tie_fraction = 0.0;    // realized human-tie share, averaged over seeds
  double retained_pairs = 0.0;  // averaged over seeds
  std::vector<MetricSweepPoint> per_metric;
};

struct SweepResult {
  std::vector<std::string> metric_names;
  std::vector<SweepRow> rows;
  int seeds_used = 1;

  std::string to_csv() const;
  nlohmann::json to_json() const;
};

// Retains each human-tied pair with probability 1 - tied_removal_prob and
// each non-tied pair with probability 1 - untied_removal_prob.
PairSet subsample_pairs(const PairSet& pairs, const SubsampleConfig& config);

// The 13-point removal-probability grid used for the tie studies.
std::vector<SubsampleConfig> default_sweep_grid();

// For every grid point and seed: subsample, recalibrate epsilon per metric,
// and average the results over seeds.
SweepResult tie_sweep(const Dataset& dataset,
                      const std::vector<std::string>& metric_names,
                      const std::vector<SubsampleConfig>& grid, int n_seeds,
                      std::uint64_t base_seed,
                      PairScope scope = PairScope::within_segment);

// Splits segments into calibration/test, subsamples the calibration pairs,
// picks epsilon there, and reports acc_eq on the untouched test pairs.
SweepResult held_out_calibration(const Dataset& dataset,
                                 const std::vector<std::string>& metric_names,
                                 const HeldOutConfig& config,
                                 PairScope scope = PairScope::within_segment);

// held_out_calibration across a removal grid with seed averaging; the
// segment split stays fixed while the calibration set is resampled.
SweepResult held_out_sweep(const Dataset& dataset,
                           const std::vector<std::string>& metric_names,
                           const HeldOutConfig& base,
                           const std::vector<SubsampleConfig>& grid,
                           int n_seeds,
                           PairScope scope = PairScope::within_segment);

// Closed-form simple least squares.
OlsFit ols_fit(std::span<const double> x, std::span<const double> y);

struct LengthBiasReport {
  std::string metric;
  std::vector<std::pair<double, double>> points;  // (length, score)
  OlsFit fit;

  std::string to_csv() const;
  nlohmann::json to_json() const;
};

// Scatter of metric score over candidate length (characters) plus the least
// squares fit. min_human, when set, drops entries whose human score is below
// the threshold (a display filter; it also drops entries with no human
// score).
LengthBiasReport length_bias_report(const Dataset& dataset,
                                    std::string_view metric,
                                    std::optional<double> min_human = {});

// Pairwise grouped Pearson between metrics (the human matrix plays no
// role). Symmetric with unit diagonal.
std::vector<std::vector<double>> metric_correlation_matrix(
    const Dataset& dataset, const std::vector<std::string>& metric_names,
    Grouping grouping);

std::string correlation_matrix_tsv(const std::vector<std::string>& metric_names,
                                   const std::vector<std::vector<double>>& matrix);

}  // namespace meval
