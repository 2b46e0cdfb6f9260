#pragma once

#include <optional>
#include <span>

#include "meval/corpus.hpp"

namespace meval {

// How scores are partitioned before correlating: pooled, by source segment,
// or by producing system. Grouped correlations are averaged with equal
// weight per group.
enum class Grouping { none, segment, system };

enum class Statistic {
  pearson,
  kendall_tau,
  acc_eq,
  sys_pairwise_acc,
  sys_pearson,
};

// A computed agreement statistic plus enough bookkeeping to audit how many
// groups were averaged, zero-filled, or dropped.
struct CorrelationValue {
  Statistic statistic = Statistic::pearson;
  double value = 0.0;
  std::size_t n_groups = 0;         // groups contributing to the average
  std::size_t n_points = 0;         // total points across those groups
  std::size_t n_zero_variance = 0;  // groups folded to 0 by the zero-variance rule
  std::size_t n_dropped = 0;        // groups dropped for having < 2 points
};

// Sample Pearson coefficient. nullopt means zero variance in either input
// (the correlation is undefined; callers decide how to map it).
std::optional<double> pearson(std::span<const double> x,
                              std::span<const double> y);

// Tie-aware rank correlation over all score pairs:
//   (concordant - discordant) /
//     sqrt((concordant + discordant + human-only ties) *
//          (concordant + discordant + metric-only ties))
// nullopt when either radicand factor is zero. Ties are exact equality on
// both sides (no epsilon).
std::optional<double> kendall_tau(std::span<const double> metric,
                                  std::span<const double> human);

// Correlation between a metric and human scores under a grouping strategy.
// Zero-variance groups contribute 0 to the average; groups with fewer than
// two aligned points are dropped (and counted in n_dropped).
CorrelationValue grouped_statistic(const ScoreMatrix& metric,
                                   const ScoreMatrix& human, Grouping grouping,
                                   Statistic statistic);

// Fraction of system pairs, among pairs not tied in the human scores,
// ranked in the same order by metric and human. Metric ties count as
// incorrect.
CorrelationValue sys_pairwise_accuracy(std::span<const double> metric_sys,
                                       std::span<const double> human_sys);

CorrelationValue system_level_pearson(std::span<const double> metric_sys,
                                      std::span<const double> human_sys);

}  // namespace meval
