#include "meval/significance.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>
#include <thread>

#include "meval/format.hpp"
#include "meval/rng.hpp"

namespace meval {

StatisticFn grouped_statistic_fn(Statistic statistic, Grouping grouping) {
  return [statistic, grouping](const ScoreMatrix& metric,
                               const ScoreMatrix& human) {
    return grouped_statistic(metric, human, grouping, statistic).value;
  };
}

StatisticFn calibrated_acc_eq_fn(PairScope scope) {
  return [scope](const ScoreMatrix& metric, const ScoreMatrix& human) {
    return calibrate_epsilon(enumerate_pairs(metric, human, scope)).acc_eq;
  };
}

StatisticFn sys_pairwise_accuracy_fn() {
  return [](const ScoreMatrix& metric, const ScoreMatrix& human) {
    return sys_pairwise_accuracy(system_scores(metric), system_scores(human))
        .value;
  };
}

StatisticFn system_level_pearson_fn() {
  return [](const ScoreMatrix& metric, const ScoreMatrix& human) {
    return system_level_pearson(system_scores(metric), system_scores(human))
        .value;
  };
}

double perm_both_pvalue(const ScoreMatrix& metric_a, const ScoreMatrix& metric_b,
                        const ScoreMatrix& human, const StatisticFn& statistic,
                        const PermConfig& config) {
  if (metric_a.n_segments() != metric_b.n_segments() ||
      metric_a.n_systems() != metric_b.n_systems()) {
    raise(Errc::key_mismatch, "metric matrices have different key spaces");
  }
  // Swap units: keys where both metrics have a score.
  std::vector<Key> keys;
  for (std::size_t seg = 0; seg < metric_a.n_segments(); ++seg) {
    for (std::size_t sys = 0; sys < metric_a.n_systems(); ++sys) {
      if (metric_a.has(seg, sys) && metric_b.has(seg, sys)) {
        keys.push_back({seg, sys});
      }
    }
  }
  if (keys.empty()) {
    raise(Errc::empty_alignment, "metrics '" + metric_a.name() + "' and '" +
                                     metric_b.name() + "' share no keys");
  }

  const double observed = statistic(metric_a, human) - statistic(metric_b, human);
  const int n = config.n_resamples;
  std::atomic<std::int64_t> n_geq{0};

  auto run_stripe = [&](int worker, int stride) {
    std::int64_t local = 0;
    ScoreMatrix a = metric_a;
    ScoreMatrix b = metric_b;
    for (int r = worker; r < n; r += stride) {
      // fresh copies; the swap pattern differs per resample
      a = metric_a;
      b = metric_b;
      auto eng = make_engine(config.seed, {static_cast<std::uint64_t>(r)});
      for (const Key& k : keys) {
        if (eng() & 1u) {
          const double va = a.at(k);
          a.set(k.segment, k.system, b.at(k));
          b.set(k.segment, k.system, va);
        }
      }
      const double delta = statistic(a, human) - statistic(b, human);
      if (delta >= observed) ++local;
    }
    n_geq.fetch_add(local, std::memory_order_relaxed);
  };

  const int workers = std::max(1, config.n_workers);
  if (workers == 1) {
    run_stripe(0, 1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back(run_stripe, w, workers);
    }
    for (auto& t : pool) t.join();
  }

  return (1.0 + static_cast<double>(n_geq.load())) / (1.0 + n);
}

std::map<std::string, int> cluster_ranks(
    const std::vector<std::pair<std::string, double>>& metrics_desc,
    const PairPValues& pairwise, double alpha) {
  std::map<std::string, int> ranks;
  for (const auto& [name, value] : metrics_desc) {
    int better = 0;
    for (const auto& [other, other_value] : metrics_desc) {
      if (other_value <= value) continue;
      auto it = pairwise.find({other, name});
      if (it == pairwise.end()) {
        raise(Errc::missing_pvalue,
              "no p-value for pair (" + other + ", " + name + ")");
      }
      if (it->second < alpha) ++better;
    }
    ranks[name] = 1 + better;
  }
  return ranks;
}

TaskResult evaluate_task(std::string id, ValueKind kind, const Dataset& dataset,
                         const std::vector<std::string>& metric_names,
                         const StatisticFn& statistic, const PermConfig& config) {
  TaskResult task;
  task.id = std::move(id);
  task.kind = kind;
  for (const std::string& name : metric_names) {
    task.values.emplace_back(name,
                             statistic(dataset.scores(name), dataset.human()));
  }
  std::sort(task.values.begin(), task.values.end(),
            [](const auto& a, const auto& b) {
              return a.second != b.second ? a.second > b.second
                                          : a.first < b.first;
            });
  for (std::size_t i = 0; i < task.values.size(); ++i) {
    for (std::size_t j = i + 1; j < task.values.size(); ++j) {
      if (task.values[i].second <= task.values[j].second) continue;
      const auto& better = task.values[i].first;
      const auto& worse = task.values[j].first;
      task.pvalues[{better, worse}] =
          perm_both_pvalue(dataset.scores(better), dataset.scores(worse),
                           dataset.human(), statistic, config);
    }
  }
  return task;
}

namespace {

double range_aligned(double value, ValueKind kind) {
  return kind == ValueKind::correlation ? 0.5 * (1.0 + value) : value;
}

}  // namespace

RankingTable aggregate_ranking(const std::vector<TaskResult>& tasks,
                               const std::vector<double>* weights,
                               double alpha) {
  if (tasks.empty()) {
    raise(Errc::inconsistent_metric_sets, "no tasks to aggregate");
  }
  if (weights && weights->size() != tasks.size()) {
    raise(Errc::length_mismatch, "one weight per task required");
  }

  // All tasks must rank the same metric set.
  std::vector<std::string> names;
  for (const auto& [name, value] : tasks.front().values) names.push_back(name);
  std::vector<std::string> sorted_names = names;
  std::sort(sorted_names.begin(), sorted_names.end());
  for (const TaskResult& task : tasks) {
    std::vector<std::string> task_names;
    for (const auto& [name, value] : task.values) task_names.push_back(name);
    std::sort(task_names.begin(), task_names.end());
    if (task_names != sorted_names) {
      raise(Errc::inconsistent_metric_sets,
            "task '" + task.id + "' ranks a different metric set");
    }
  }

  RankingTable table;
  for (const TaskResult& task : tasks) table.task_ids.push_back(task.id);

  double weight_sum = 0.0;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    weight_sum += weights ? (*weights)[t] : 1.0;
  }

  for (const std::string& name : names) {
    RankingRow row;
    row.metric = name;
    double acc = 0.0;
    for (std::size_t t = 0; t < tasks.size(); ++t) {
      const TaskResult& task = tasks[t];
      const auto it =
          std::find_if(task.values.begin(), task.values.end(),
                       [&](const auto& kv) { return kv.first == name; });
      row.task_values.push_back(it->second);
      const double w = weights ? (*weights)[t] : 1.0;
      acc += w * range_aligned(it->second, task.kind);
    }
    row.average = acc / weight_sum;
    table.rows.push_back(std::move(row));
  }

  std::sort(table.rows.begin(), table.rows.end(),
            [](const RankingRow& a, const RankingRow& b) {
              return a.average != b.average ? a.average > b.average
                                            : a.metric < b.metric;
            });

  // Cross-task significance: (A, B) is significant iff significant in a
  // strict majority of the tasks where A's value exceeds B's.
  auto task_value = [&](const TaskResult& task, const std::string& name) {
    return std::find_if(task.values.begin(), task.values.end(),
                        [&](const auto& kv) { return kv.first == name; })
        ->second;
  };
  PairPValues majority;
  std::vector<std::pair<std::string, double>> averaged;
  for (const RankingRow& row : table.rows) {
    averaged.emplace_back(row.metric, row.average);
  }
  for (const auto& [a, va] : averaged) {
    for (const auto& [b, vb] : averaged) {
      if (a == b || va <= vb) continue;
      int considered = 0;
      int significant = 0;
      for (const TaskResult& task : tasks) {
        if (task_value(task, a) <= task_value(task, b)) continue;
        ++considered;
        auto it = task.pvalues.find({a, b});
        if (it == task.pvalues.end()) {
          raise(Errc::missing_pvalue, "task '" + task.id +
                                          "' lacks a p-value for (" + a +
                                          ", " + b + ")");
        }
        if (it->second < alpha) ++significant;
      }
      const bool is_significant = considered > 0 && 2 * significant > considered;
      majority[{a, b}] = is_significant ? 0.0 : 1.0;
    }
  }
  const auto ranks = cluster_ranks(averaged, majority, alpha);
  for (RankingRow& row : table.rows) row.rank = ranks.at(row.metric);
  return table;
}

std::string RankingTable::to_tsv() const {
  std::ostringstream out;
  out << "metric";
  for (const std::string& id : task_ids) out << '\t' << id;
  out << "\tavg\trank\n";
  for (const RankingRow& row : rows) {
    out << row.metric;
    for (double v : row.task_values) out << '\t' << format_number(v);
    out << '\t' << format_number(row.average) << '\t' << row.rank << '\n';
  }
  return out.str();
}

nlohmann::json RankingTable::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const RankingRow& row : rows) {
    nlohmann::json task_values = nlohmann::json::object();
    for (std::size_t t = 0; t < task_ids.size(); ++t) {
      task_values[task_ids[t]] = rounded_number(row.task_values[t]);
    }
    rows_json.push_back({{"metric", row.metric},
                         {"task_values", task_values},
                         {"avg", rounded_number(row.average)},
                         {"rank", row.rank}});
  }
  return {{"tasks", task_ids}, {"ranking", rows_json}};
}

}  // namespace meval
