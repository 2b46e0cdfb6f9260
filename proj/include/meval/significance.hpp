#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "meval/correlation.hpp"
#include "meval/ties.hpp"

namespace meval {

struct PermConfig {
  int n_resamples = 1000;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  int n_workers = 1;  // resamples use derived streams, so any count gives
                      // identical results
};

// Any scalar agreement statistic between a metric matrix and the human
// matrix. Must be pure; it is re-evaluated on permuted inputs.
using StatisticFn =
    std::function<double(const ScoreMatrix& metric, const ScoreMatrix& human)>;

StatisticFn grouped_statistic_fn(Statistic statistic, Grouping grouping);
// acc_eq with per-evaluation tie calibration, the full protocol.
StatisticFn calibrated_acc_eq_fn(PairScope scope);
StatisticFn sys_pairwise_accuracy_fn();
StatisticFn system_level_pearson_fn();

// Paired permutation test: per aligned key, both metrics' scores are swapped
// with probability one half, and the statistic delta is recomputed. Returns
// the one-sided add-one-smoothed p-value
//   (1 + #{resampled delta >= observed delta}) / (1 + n_resamples).
double perm_both_pvalue(const ScoreMatrix& metric_a, const ScoreMatrix& metric_b,
                        const ScoreMatrix& human, const StatisticFn& statistic,
                        const PermConfig& config);

// p-values keyed by (higher-valued metric, lower-valued metric).
using PairPValues = std::map<std::pair<std::string, std::string>, double>;

// Significance-cluster ranks: rank(m) = 1 + number of metrics with a
// strictly higher value that are significantly better than m.
std::map<std::string, int> cluster_ranks(
    const std::vector<std::pair<std::string, double>>& metrics_desc,
    const PairPValues& pairwise, double alpha);

// Whether a task's values live on the correlation scale [-1, 1] or the
// accuracy scale [0, 1]. Correlation values are mapped through (1 + v) / 2
// when averaged with accuracies, which is how the shared-task average is
// defined.
enum class ValueKind { correlation, accuracy };

// One evaluation task: per-metric values (sorted descending) plus the
// pairwise significance tests between them.
struct TaskResult {
  std::string id;
  ValueKind kind = ValueKind::correlation;
  std::vector<std::pair<std::string, double>> values;
  PairPValues pvalues;
};

TaskResult evaluate_task(std::string id, ValueKind kind, const Dataset& dataset,
                         const std::vector<std::string>& metric_names,
                         const StatisticFn& statistic, const PermConfig& config);

struct RankingRow {
  std::string metric;
  std::vector<double> task_values;  // raw per-task values, task_ids order
  double average = 0.0;             // mean of range-aligned values
  int rank = 0;
};

struct RankingTable {
  std::vector<std::string> task_ids;
  std::vector<RankingRow> rows;  // sorted by average descending

  std::string to_tsv() const;
  nlohmann::json to_json() const;
};

// Averages tasks into a final ranking. A pair (A, B) counts as significant
// when it is significant in a strict majority of the tasks where A's value
// exceeds B's.
RankingTable aggregate_ranking(const std::vector<TaskResult>& tasks,
                               const std::vector<double>* weights = nullptr,
                               double alpha = 0.05);

}  // namespace meval
