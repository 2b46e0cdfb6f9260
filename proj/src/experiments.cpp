#include "meval/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "meval/format.hpp"
#include "meval/rng.hpp"

namespace meval {

PairSet subsample_pairs(const PairSet& pairs, const SubsampleConfig& config) {
  if (pairs.empty()) raise(Errc::empty_pairs, "pair set is empty");
  PairSet kept;
  kept.reserve(pairs.size());
  for (const ScoredPair& p : pairs) {
    const double removal_prob =
        p.human_tied() ? config.tied_removal_prob : config.untied_removal_prob;
    const double u = derived_unit_uniform(
        config.seed, {p.first.key.segment, p.first.key.system,
                      p.second.key.segment, p.second.key.system});
    if (u >= removal_prob) kept.push_back(p);
  }
  if (kept.empty()) {
    raise(Errc::all_pairs_removed, "subsampling removed every pair");
  }
  return kept;
}

std::vector<SubsampleConfig> default_sweep_grid() {
  std::vector<SubsampleConfig> grid;
  for (double tied : {1.0, 0.65, 0.30, 0.0}) {
    grid.push_back({tied, 0.0, 0});
  }
  for (double untied : {0.2, 0.4, 0.5, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85}) {
    grid.push_back({0.0, untied, 0});
  }
  return grid;
}

namespace {

double tie_fraction_of(const PairSet& pairs) {
  if (pairs.empty()) return 0.0;
  std::size_t tied = 0;
  for (const ScoredPair& p : pairs) tied += p.human_tied();
  return static_cast<double>(tied) / static_cast<double>(pairs.size());
}

// Min-max scale each metric's epsilon across the sweep rows.
void scale_epsilons(SweepResult& result) {
  for (std::size_t m = 0; m < result.metric_names.size(); ++m) {
    double lo = result.rows.front().per_metric[m].epsilon;
    double hi = lo;
    for (const SweepRow& row : result.rows) {
      lo = std::min(lo, row.per_metric[m].epsilon);
      hi = std::max(hi, row.per_metric[m].epsilon);
    }
    for (SweepRow& row : result.rows) {
      row.per_metric[m].epsilon_scaled =
          hi > lo ? (row.per_metric[m].epsilon - lo) / (hi - lo) : 0.0;
    }
  }
}

}  // namespace

SweepResult tie_sweep(const Dataset& dataset,
                      const std::vector<std::string>& metric_names,
                      const std::vector<SubsampleConfig>& grid, int n_seeds,
                      std::uint64_t base_seed, PairScope scope) {
  if (grid.empty()) raise(Errc::empty_pairs, "empty removal grid");
  if (n_seeds < 1) raise(Errc::parse_error, "n_seeds must be >= 1");

  // The human-side pair universe drives the realized tie fractions; metric
  // pair sets see consistent removal decisions through the per-pair streams.
  const PairSet human_pairs =
      enumerate_pairs(dataset.human(), dataset.human(), scope);
  std::vector<PairSet> metric_pairs;
  for (const std::string& name : metric_names) {
    metric_pairs.push_back(
        enumerate_pairs(dataset.scores(name), dataset.human(), scope));
  }

  SweepResult result;
  result.metric_names = metric_names;
  result.seeds_used = n_seeds;
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    SweepRow row;
    row.tied_removal_prob = grid[gi].tied_removal_prob;
    row.untied_removal_prob = grid[gi].untied_removal_prob;
    row.per_metric.resize(metric_names.size());
    for (int si = 0; si < n_seeds; ++si) {
      SubsampleConfig cfg = grid[gi];
      cfg.seed = derive_seed(base_seed, {gi, static_cast<std::uint64_t>(si)});
      const PairSet sampled_universe = subsample_pairs(human_pairs, cfg);
      row.tie_fraction += tie_fraction_of(sampled_universe);
      row.retained_pairs += static_cast<double>(sampled_universe.size());
      for (std::size_t m = 0; m < metric_names.size(); ++m) {
        const CalibrationResult cal =
            calibrate_epsilon(subsample_pairs(metric_pairs[m], cfg));
        row.per_metric[m].epsilon += cal.epsilon;
        row.per_metric[m].acc_eq += cal.acc_eq;
      }
    }
    const double denom = static_cast<double>(n_seeds);
    row.tie_fraction /= denom;
    row.retained_pairs /= denom;
    for (auto& point : row.per_metric) {
      point.epsilon /= denom;
      point.acc_eq /= denom;
    }
    result.rows.push_back(std::move(row));
  }
  scale_epsilons(result);
  return result;
}

namespace {

// Seeded segment split; true marks calibration segments.
std::vector<char> split_segments(std::size_t n_segments, double fraction,
                                 std::uint64_t seed) {
  if (n_segments < 2) {
    raise(Errc::split_too_small, "need at least 2 segments to split");
  }
  if (!(fraction > 0.0 && fraction < 1.0)) {
    raise(Errc::parse_error, "calibration fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> order(n_segments);
  std::iota(order.begin(), order.end(), 0);
  auto eng = make_engine(seed, {0x5eedULL});
  std::shuffle(order.begin(), order.end(), eng);
  std::size_t n_cal = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(n_segments)));
  n_cal = std::clamp<std::size_t>(n_cal, 1, n_segments - 1);
  std::vector<char> is_calibration(n_segments, 0);
  for (std::size_t i = 0; i < n_cal; ++i) is_calibration[order[i]] = 1;
  return is_calibration;
}

// Pairs whose endpoints both lie in the selected segment side. Pairs that
// straddle the split are dropped so nothing leaks across it.
PairSet filter_pairs(const PairSet& pairs, const std::vector<char>& in_side,
                     bool side) {
  PairSet out;
  for (const ScoredPair& p : pairs) {
    if (bool(in_side[p.first.key.segment]) == side &&
        bool(in_side[p.second.key.segment]) == side) {
      out.push_back(p);
    }
  }
  return out;
}

}  // namespace

SweepResult held_out_calibration(const Dataset& dataset,
                                 const std::vector<std::string>& metric_names,
                                 const HeldOutConfig& config, PairScope scope) {
  const std::vector<char> is_calibration = split_segments(
      dataset.n_segments(), config.calibration_fraction, config.seed);

  const PairSet human_pairs =
      enumerate_pairs(dataset.human(), dataset.human(), scope);
  const PairSet human_cal = filter_pairs(human_pairs, is_calibration, true);
  if (human_cal.empty()) {
    raise(Errc::split_too_small, "calibration split has no pairs");
  }
  const PairSet sampled_universe = subsample_pairs(human_cal, config.subsample);

  SweepResult result;
  result.metric_names = metric_names;
  result.seeds_used = 1;
  SweepRow row;
  row.tied_removal_prob = config.subsample.tied_removal_prob;
  row.untied_removal_prob = config.subsample.untied_removal_prob;
  row.tie_fraction = tie_fraction_of(sampled_universe);
  row.retained_pairs = static_cast<double>(sampled_universe.size());
  for (const std::string& name : metric_names) {
    const PairSet pairs =
        enumerate_pairs(dataset.scores(name), dataset.human(), scope);
    const PairSet cal_pairs = filter_pairs(pairs, is_calibration, true);
    const PairSet test_pairs = filter_pairs(pairs, is_calibration, false);
    if (cal_pairs.empty() || test_pairs.empty()) {
      raise(Errc::split_too_small,
            "split leaves '" + name + "' without pairs on one side");
    }
    const CalibrationResult cal =
        calibrate_epsilon(subsample_pairs(cal_pairs, config.subsample));
    MetricSweepPoint point;
    point.epsilon = cal.epsilon;
    point.acc_eq = acc_eq_at(test_pairs, cal.epsilon);
    row.per_metric.push_back(point);
  }
  result.rows.push_back(std::move(row));
  scale_epsilons(result);
  return result;
}

SweepResult held_out_sweep(const Dataset& dataset,
                           const std::vector<std::string>& metric_names,
                           const HeldOutConfig& base,
                           const std::vector<SubsampleConfig>& grid,
                           int n_seeds, PairScope scope) {
  if (grid.empty()) raise(Errc::empty_pairs, "empty removal grid");
  if (n_seeds < 1) raise(Errc::parse_error, "n_seeds must be >= 1");

  SweepResult result;
  result.metric_names = metric_names;
  result.seeds_used = n_seeds;
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    SweepRow row;
    row.tied_removal_prob = grid[gi].tied_removal_prob;
    row.untied_removal_prob = grid[gi].untied_removal_prob;
    row.per_metric.resize(metric_names.size());
    for (int si = 0; si < n_seeds; ++si) {
      HeldOutConfig cfg = base;
      cfg.subsample = grid[gi];
      cfg.subsample.seed =
          derive_seed(base.seed, {gi, static_cast<std::uint64_t>(si)});
      const SweepResult one = held_out_calibration(dataset, metric_names, cfg, scope);
      row.tie_fraction += one.rows.front().tie_fraction;
      row.retained_pairs += one.rows.front().retained_pairs;
      for (std::size_t m = 0; m < metric_names.size(); ++m) {
        row.per_metric[m].epsilon += one.rows.front().per_metric[m].epsilon;
        row.per_metric[m].acc_eq += one.rows.front().per_metric[m].acc_eq;
      }
    }
    const double denom = static_cast<double>(n_seeds);
    row.tie_fraction /= denom;
    row.retained_pairs /= denom;
    for (auto& point : row.per_metric) {
      point.epsilon /= denom;
      point.acc_eq /= denom;
    }
    result.rows.push_back(std::move(row));
  }
  scale_epsilons(result);
  return result;
}

OlsFit ols_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    raise(Errc::length_mismatch, "sequences have different lengths");
  }
  if (x.size() < 2) {
    raise(Errc::too_few_points, "least squares needs at least 2 points");
  }
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) raise(Errc::constant_x, "x values are all equal");
  OlsFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.n = x.size();
  return fit;
}

LengthBiasReport length_bias_report(const Dataset& dataset,
                                    std::string_view metric,
                                    std::optional<double> min_human) {
  if (!dataset.has_lengths()) {
    raise(Errc::missing_lengths, "dataset has no lengths.tsv");
  }
  const ScoreMatrix& scores = dataset.scores(metric);
  LengthBiasReport report;
  report.metric = std::string(metric);
  for (std::size_t seg = 0; seg < dataset.n_segments(); ++seg) {
    for (std::size_t sys = 0; sys < dataset.n_systems(); ++sys) {
      if (!scores.has(seg, sys)) continue;
      const auto length = dataset.candidate_length(seg, sys);
      if (!length) continue;
      if (min_human) {
        if (!dataset.human().has(seg, sys)) continue;
        if (dataset.human().at(seg, sys) < *min_human) continue;
      }
      report.points.emplace_back(static_cast<double>(*length),
                                 scores.at(seg, sys));
    }
  }
  if (report.points.empty()) {
    raise(Errc::missing_lengths,
          "no entries with both a score and a candidate length");
  }
  std::vector<double> xs, ys;
  xs.reserve(report.points.size());
  ys.reserve(report.points.size());
  for (const auto& [x, y] : report.points) {
    xs.push_back(x);
    ys.push_back(y);
  }
  report.fit = ols_fit(xs, ys);
  return report;
}

std::vector<std::vector<double>> metric_correlation_matrix(
    const Dataset& dataset, const std::vector<std::string>& metric_names,
    Grouping grouping) {
  const std::size_t n = metric_names.size();
  if (n < 2) {
    raise(Errc::too_few_points, "correlation matrix needs >= 2 metrics");
  }
  std::vector<std::vector<double>> matrix(n, std::vector<double>(n, 1.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double r =
          grouped_statistic(dataset.scores(metric_names[i]),
                            dataset.scores(metric_names[j]), grouping,
                            Statistic::pearson)
              .value;
      matrix[i][j] = r;
      matrix[j][i] = r;
    }
  }
  return matrix;
}

std::string correlation_matrix_tsv(
    const std::vector<std::string>& metric_names,
    const std::vector<std::vector<double>>& matrix) {
  std::ostringstream out;
  out << "metric";
  for (const std::string& name : metric_names) out << '\t' << name;
  out << '\n';
  for (std::size_t i = 0; i < metric_names.size(); ++i) {
    out << metric_names[i];
    for (double v : matrix[i]) out << '\t' << format_number(v);
    out << '\n';
  }
  return out.str();
}

std::string SweepResult::to_csv() const {
  std::ostringstream out;
  out << "tied_removal_prob,untied_removal_prob,tie_fraction,retained_pairs,"
         "metric,epsilon,epsilon_scaled,acc_eq\n";
  for (const SweepRow& row : rows) {
    for (std::size_t m = 0; m < metric_names.size(); ++m) {
      const MetricSweepPoint& p = row.per_metric[m];
      out << format_number(row.tied_removal_prob) << ','
          << format_number(row.untied_removal_prob) << ','
          << format_number(row.tie_fraction) << ','
          << format_number(row.retained_pairs) << ',' << metric_names[m] << ','
          << format_number(p.epsilon) << ',' << format_number(p.epsilon_scaled)
          << ',' << format_number(p.acc_eq) << '\n';
    }
  }
  return out.str();
}

nlohmann::json SweepResult::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const SweepRow& row : rows) {
    nlohmann::json metrics_json = nlohmann::json::object();
    for (std::size_t m = 0; m < metric_names.size(); ++m) {
      const MetricSweepPoint& p = row.per_metric[m];
      metrics_json[metric_names[m]] = {
          {"epsilon", rounded_number(p.epsilon)},
          {"epsilon_scaled", rounded_number(p.epsilon_scaled)},
          {"acc_eq", rounded_number(p.acc_eq)}};
    }
    rows_json.push_back(
        {{"tied_removal_prob", rounded_number(row.tied_removal_prob)},
         {"untied_removal_prob", rounded_number(row.untied_removal_prob)},
         {"tie_fraction", rounded_number(row.tie_fraction)},
         {"retained_pairs", rounded_number(row.retained_pairs)},
         {"metrics", metrics_json}});
  }
  return {{"seeds_used", seeds_used}, {"rows", rows_json}};
}

std::string LengthBiasReport::to_csv() const {
  std::ostringstream out;
  out << "length,score\n";
  for (const auto& [length, score] : points) {
    out << format_number(length) << ',' << format_number(score) << '\n';
  }
  return out.str();
}

nlohmann::json LengthBiasReport::to_json() const {
  return {{"metric", metric},
          {"n", fit.n},
          {"slope", rounded_number(fit.slope)},
          {"intercept", rounded_number(fit.intercept)}};
}

}  // namespace meval
