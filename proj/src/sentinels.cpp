#include "meval/sentinels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "meval/rng.hpp"

namespace meval {

DiscreteLevels::DiscreteLevels(std::vector<double> levels)
    : levels_(std::move(levels)) {
  if (levels_.size() < 2) {
    raise(Errc::parse_error, "need at least 2 discrete levels");
  }
  min_gap_ = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < levels_.size(); ++i) {
    const double gap = levels_[i] - levels_[i - 1];
    if (!(gap > 0.0)) {
      raise(Errc::zero_gap, "levels must be strictly increasing");
    }
    min_gap_ = std::min(min_gap_, gap);
  }
}

ScoreMatrix segment_constant_scores(const ScoreMatrix& human,
                                    SegmentReducer reducer) {
  ScoreMatrix out("sentinel_seg_const", human.n_segments(), human.n_systems());
  std::vector<double> values;
  for (std::size_t seg = 0; seg < human.n_segments(); ++seg) {
    values.clear();
    for (std::size_t sys = 0; sys < human.n_systems(); ++sys) {
      if (human.has(seg, sys)) values.push_back(human.at(seg, sys));
    }
    if (values.empty()) {
      raise(Errc::empty_segment, "segment " + std::to_string(seg) +
                                     " has no present human scores");
    }
    double reduced;
    if (reducer == SegmentReducer::mean) {
      double sum = 0.0;
      for (double v : values) sum += v;
      reduced = sum / static_cast<double>(values.size());
    } else {
      std::sort(values.begin(), values.end());
      const std::size_t mid = values.size() / 2;
      reduced = values.size() % 2 == 1
                    ? values[mid]
                    : 0.5 * (values[mid - 1] + values[mid]);
    }
    for (std::size_t sys = 0; sys < human.n_systems(); ++sys) {
      out.set(seg, sys, reduced);
    }
  }
  return out;
}

namespace {

std::vector<double> distinct_values(const ScoreMatrix& m) {
  std::vector<double> values;
  for (std::size_t seg = 0; seg < m.n_segments(); ++seg) {
    for (std::size_t sys = 0; sys < m.n_systems(); ++sys) {
      if (m.has(seg, sys)) values.push_back(m.at(seg, sys));
    }
  }
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  return values;
}

}  // namespace

ScoreMatrix perturb_discrete(const ScoreMatrix& metric,
                             const PerturbConfig& config) {
  if (!(config.variance > 0.0)) {
    raise(Errc::parse_error, "noise variance must be > 0");
  }
  if (!(config.truncation_factor > 0.0 && config.truncation_factor < 0.5)) {
    raise(Errc::parse_error, "truncation factor must lie in (0, 0.5)");
  }
  const std::vector<double> levels = distinct_values(metric);
  if (levels.size() > config.max_levels) {
    raise(Errc::not_discrete, "'" + metric.name() + "' has " +
                                  std::to_string(levels.size()) +
                                  " distinct values (cap " +
                                  std::to_string(config.max_levels) + ")");
  }
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < levels.size(); ++i) {
    min_gap = std::min(min_gap, levels[i] - levels[i - 1]);
  }
  if (!(min_gap > 0.0)) {
    raise(Errc::zero_gap, "minimum gap between score levels is not positive");
  }

  const double bound = config.truncation_factor * min_gap;
  const double sd = std::sqrt(config.variance);
  ScoreMatrix out = metric;
  out.rename("perturbed:" + metric.name());
  for (std::size_t seg = 0; seg < metric.n_segments(); ++seg) {
    for (std::size_t sys = 0; sys < metric.n_systems(); ++sys) {
      if (!metric.has(seg, sys)) continue;
      auto eng = make_engine(config.seed, {seg, sys});
      double noise;
      do {
        noise = sd * normal_sample(eng);
      } while (!(std::abs(noise) < bound));
      out.set(seg, sys, metric.at(seg, sys) + noise);
    }
  }
  return out;
}

ScoreMatrix discretize(const ScoreMatrix& metric, const DiscreteLevels& levels) {
  const std::span<const double> lv = levels.levels();
  ScoreMatrix out = metric;
  out.rename("discretized:" + metric.name());
  for (std::size_t seg = 0; seg < metric.n_segments(); ++seg) {
    for (std::size_t sys = 0; sys < metric.n_systems(); ++sys) {
      if (!metric.has(seg, sys)) continue;
      const double v = metric.at(seg, sys);
      auto it = std::lower_bound(lv.begin(), lv.end(), v);
      double snapped;
      if (it == lv.begin()) {
        snapped = lv.front();
      } else if (it == lv.end()) {
        snapped = lv.back();
      } else {
        const double hi = *it;
        const double lo = *(it - 1);
        snapped = (v - lo <= hi - v) ? lo : hi;  // equidistant -> lower
      }
      out.set(seg, sys, snapped);
    }
  }
  return out;
}

}  // namespace meval
