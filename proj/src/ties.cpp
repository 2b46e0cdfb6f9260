#include "meval/ties.hpp"

#include <algorithm>
#include <numeric>

namespace meval {

PairSet enumerate_pairs(const ScoreMatrix& metric, const ScoreMatrix& human,
                        PairScope scope) {
  const AlignedPairVector aligned = align(metric, human);
  const std::size_t n = aligned.size();
  auto point = [&](std::size_t i) {
    return ScoredPoint{aligned.keys[i], aligned.metric_scores[i],
                       aligned.human_scores[i]};
  };
  PairSet pairs;
  if (scope == PairScope::all) {
    if (n >= 2) pairs.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        pairs.push_back({point(i), point(j)});
      }
    }
    return pairs;
  }
  // within_segment: aligned keys are segment-major, so segments are runs
  std::size_t start = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i == n || aligned.keys[i].segment != aligned.keys[start].segment) {
      for (std::size_t a = start; a < i; ++a) {
        for (std::size_t b = a + 1; b < i; ++b) {
          pairs.push_back({point(a), point(b)});
        }
      }
      start = i;
    }
  }
  return pairs;
}

TieCounts count_pairs(const PairSet& pairs, double epsilon) {
  TieCounts counts;
  for (const ScoredPair& p : pairs) {
    const bool m_tied = p.metric_gap() <= epsilon;
    const bool h_tied = p.human_tied();
    if (m_tied && h_tied) {
      ++counts.both_tied;
    } else if (m_tied) {
      ++counts.metric_only;
    } else if (h_tied) {
      ++counts.human_only;
    } else if ((p.first.metric < p.second.metric) ==
               (p.first.human < p.second.human)) {
      ++counts.concordant;
    } else {
      ++counts.discordant;
    }
  }
  return counts;
}

namespace {

void require_pairs(const PairSet& pairs) {
  if (pairs.empty()) raise(Errc::empty_pairs, "pair set is empty");
}

double accuracy(const TieCounts& c) {
  return static_cast<double>(c.concordant + c.both_tied) /
         static_cast<double>(c.total());
}

}  // namespace

double acc_eq_at(const PairSet& pairs, double epsilon) {
  require_pairs(pairs);
  return accuracy(count_pairs(pairs, epsilon));
}

CalibrationResult calibrate_epsilon(const PairSet& pairs) {
  require_pairs(pairs);
  const std::size_t n = pairs.size();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return pairs[a].metric_gap() < pairs[b].metric_gap();
  });

  // Counts at epsilon = 0: pairs with zero gap start out metric-tied.
  TieCounts counts;
  for (const ScoredPair& p : pairs) {
    const bool h_tied = p.human_tied();
    if (p.metric_gap() == 0.0) {
      if (h_tied) {
        ++counts.both_tied;
      } else {
        ++counts.metric_only;
      }
    } else if (h_tied) {
      ++counts.human_only;
    } else if ((p.first.metric < p.second.metric) ==
               (p.first.human < p.second.human)) {
      ++counts.concordant;
    } else {
      ++counts.discordant;
    }
  }

  CalibrationResult best;
  best.epsilon = 0.0;
  best.acc_eq = accuracy(counts);
  best.counts_at_epsilon = counts;
  best.candidates_evaluated = 1;

  // Sweep candidates upward; at candidate g every pair with gap == g flips
  // from its untied bucket into a tied one. acc_eq is constant between
  // consecutive observed gaps, so only these candidates matter.
  std::size_t i = 0;
  while (i < n && pairs[order[i]].metric_gap() == 0.0) ++i;
  while (i < n) {
    const double gap = pairs[order[i]].metric_gap();
    for (; i < n && pairs[order[i]].metric_gap() == gap; ++i) {
      const ScoredPair& p = pairs[order[i]];
      if (p.human_tied()) {
        --counts.human_only;
        ++counts.both_tied;
      } else {
        if ((p.first.metric < p.second.metric) ==
            (p.first.human < p.second.human)) {
          --counts.concordant;
        } else {
          --counts.discordant;
        }
        ++counts.metric_only;
      }
    }
    ++best.candidates_evaluated;
    const double acc = accuracy(counts);
    if (acc > best.acc_eq) {
      best.acc_eq = acc;
      best.epsilon = gap;
      best.counts_at_epsilon = counts;
    }
  }
  return best;
}

CalibrationResult calibrate_epsilon_bruteforce(const PairSet& pairs) {
  require_pairs(pairs);
  std::vector<double> candidates;
  candidates.reserve(pairs.size() + 1);
  candidates.push_back(0.0);
  for (const ScoredPair& p : pairs) candidates.push_back(p.metric_gap());
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());

  CalibrationResult best;
  bool first = true;
  for (double eps : candidates) {
    const TieCounts counts = count_pairs(pairs, eps);
    const double acc = accuracy(counts);
    if (first || acc > best.acc_eq) {
      best.epsilon = eps;
      best.acc_eq = acc;
      best.counts_at_epsilon = counts;
      first = false;
    }
  }
  best.candidates_evaluated = candidates.size();
  return best;
}

}  // namespace meval
