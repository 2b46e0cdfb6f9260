#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "meval/corpus.hpp"

namespace meval {

// Seeded Gaussian continuization of a discrete metric. Noise is truncated by
// resampling so scores from different discrete levels can never swap order.
struct PerturbConfig {
  double variance = 1e-4;          // noise variance (std dev = sqrt)
  std::uint64_t seed = 0;
  double truncation_factor = 0.4;  // |noise| < factor * min level gap; in (0, 0.5)
  std::size_t max_levels = 1000;   // more distinct values than this -> NotDiscrete
};

// Strictly increasing score levels for building controlled discrete metrics.
class DiscreteLevels {
 public:
  explicit DiscreteLevels(std::vector<double> levels);
  std::span<const double> levels() const { return levels_; }
  double min_gap() const { return min_gap_; }

 private:
  std::vector<double> levels_;
  double min_gap_ = 0.0;
};

enum class SegmentReducer { mean, median };

// Per-segment difficulty oracle: every system of a segment receives the
// reduced human score of that segment. Constant within each segment by
// construction, which makes it a probe for grouping strategies.
ScoreMatrix segment_constant_scores(const ScoreMatrix& human,
                                    SegmentReducer reducer);

// Adds truncated Gaussian noise to every present score of a discrete
// metric. Entries at different levels keep their exact order; entries at
// the same level become almost surely distinct.
ScoreMatrix perturb_discrete(const ScoreMatrix& metric,
                             const PerturbConfig& config);

// Maps every present score to the nearest level; midpoints resolve to the
// lower level.
ScoreMatrix discretize(const ScoreMatrix& metric, const DiscreteLevels& levels);

}  // namespace meval
