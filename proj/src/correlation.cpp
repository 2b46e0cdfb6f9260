#include "meval/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace meval {

namespace {

void check_lengths(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    raise(Errc::length_mismatch,
          "sequences have lengths " + std::to_string(x.size()) + " and " +
              std::to_string(y.size()));
  }
  if (x.size() < 2) {
    raise(Errc::too_few_points,
          "need at least 2 points, got " + std::to_string(x.size()));
  }
}

double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

}  // namespace

std::optional<double> pearson(std::span<const double> x,
                              std::span<const double> y) {
  check_lengths(x, y);
  const std::size_t n = x.size();
  // Constancy is decided on the raw values; subtracting a rounded mean from
  // a constant vector can leave spurious nonzero deviations.
  auto is_constant = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(),
                       [&](double e) { return e == v.front(); });
  };
  if (is_constant(x) || is_constant(y)) return std::nullopt;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;  // underflow guard
  return clamp_unit(sxy / std::sqrt(sxx * syy));
}

std::optional<double> kendall_tau(std::span<const double> metric,
                                  std::span<const double> human) {
  check_lengths(metric, human);
  const std::size_t n = metric.size();
  std::uint64_t concordant = 0, discordant = 0;
  std::uint64_t human_only = 0, metric_only = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool m_tied = metric[i] == metric[j];
      const bool h_tied = human[i] == human[j];
      if (h_tied) {
        if (!m_tied) ++human_only;
        // tied in both: appears in neither radicand factor
      } else if (m_tied) {
        ++metric_only;
      } else if ((metric[i] < metric[j]) == (human[i] < human[j])) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const double f_human =
      static_cast<double>(concordant + discordant + human_only);
  const double f_metric =
      static_cast<double>(concordant + discordant + metric_only);
  if (f_human == 0.0 || f_metric == 0.0) return std::nullopt;
  const double num =
      static_cast<double>(concordant) - static_cast<double>(discordant);
  return clamp_unit(num / std::sqrt(f_human * f_metric));
}

CorrelationValue grouped_statistic(const ScoreMatrix& metric,
                                   const ScoreMatrix& human, Grouping grouping,
                                   Statistic statistic) {
  const AlignedPairVector aligned = align(metric, human);
  const std::size_t n = aligned.size();

  // Groups as index ranges into the aligned vectors, in canonical order.
  std::vector<std::vector<std::size_t>> groups;
  switch (grouping) {
    case Grouping::none:
      groups.emplace_back(n);
      for (std::size_t i = 0; i < n; ++i) groups.back()[i] = i;
      break;
    case Grouping::segment: {
      // aligned keys are segment-major, so segments form contiguous runs
      std::size_t start = 0;
      for (std::size_t i = 1; i <= n; ++i) {
        if (i == n || aligned.keys[i].segment != aligned.keys[start].segment) {
          auto& g = groups.emplace_back();
          for (std::size_t k = start; k < i; ++k) g.push_back(k);
          start = i;
        }
      }
      break;
    }
    case Grouping::system: {
      groups.resize(metric.n_systems());
      for (std::size_t i = 0; i < n; ++i) {
        groups[aligned.keys[i].system].push_back(i);
      }
      std::erase_if(groups, [](const auto& g) { return g.empty(); });
      break;
    }
  }

  CorrelationValue out;
  out.statistic = statistic;
  double sum = 0.0;
  std::vector<double> mx, hx;
  for (const auto& group : groups) {
    if (group.size() < 2) {
      ++out.n_dropped;
      continue;
    }
    mx.clear();
    hx.clear();
    for (std::size_t i : group) {
      mx.push_back(aligned.metric_scores[i]);
      hx.push_back(aligned.human_scores[i]);
    }
    const std::optional<double> r = statistic == Statistic::kendall_tau
                                        ? kendall_tau(mx, hx)
                                        : pearson(mx, hx);
    ++out.n_groups;
    out.n_points += group.size();
    if (r) {
      sum += *r;
    } else {
      ++out.n_zero_variance;  // contributes 0
    }
  }
  if (out.n_groups == 0) {
    raise(Errc::no_valid_groups,
          "every group of '" + metric.name() + "' has fewer than 2 points");
  }
  out.value = sum / static_cast<double>(out.n_groups);
  return out;
}

CorrelationValue sys_pairwise_accuracy(std::span<const double> metric_sys,
                                       std::span<const double> human_sys) {
  if (metric_sys.size() != human_sys.size()) {
    raise(Errc::length_mismatch, "system score vectors differ in length");
  }
  const std::size_t n = metric_sys.size();
  if (n < 2) {
    raise(Errc::too_few_systems,
          "need at least 2 systems, got " + std::to_string(n));
  }
  std::uint64_t considered = 0, correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dh = human_sys[i] - human_sys[j];
      if (dh == 0.0) continue;  // human-tied pairs are excluded
      ++considered;
      const double dm = metric_sys[i] - metric_sys[j];
      if (dm != 0.0 && (dm > 0.0) == (dh > 0.0)) ++correct;
    }
  }
  if (considered == 0) {
    raise(Errc::no_untied_pairs, "all system pairs are tied in human scores");
  }
  CorrelationValue out;
  out.statistic = Statistic::sys_pairwise_acc;
  out.value = static_cast<double>(correct) / static_cast<double>(considered);
  out.n_groups = 1;
  out.n_points = n;
  return out;
}

CorrelationValue system_level_pearson(std::span<const double> metric_sys,
                                      std::span<const double> human_sys) {
  const std::optional<double> r = pearson(metric_sys, human_sys);
  CorrelationValue out;
  out.statistic = Statistic::sys_pearson;
  out.n_groups = 1;
  out.n_points = metric_sys.size();
  if (r) {
    out.value = *r;
  } else {
    out.value = 0.0;
    out.n_zero_variance = 1;
  }
  return out;
}

}  // namespace meval
