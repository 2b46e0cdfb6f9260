#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "meval/corpus.hpp"

namespace meval {

// Classification of every enumerated score pair. The five buckets always
// partition the pair set.
struct TieCounts {
  std::uint64_t concordant = 0;   // ranked the same way by metric and human
  std::uint64_t discordant = 0;   // ranked opposite ways
  std::uint64_t human_only = 0;   // tied only in the human scores
  std::uint64_t metric_only = 0;  // tied only in the metric scores
  std::uint64_t both_tied = 0;    // tied in both (a correctly predicted tie)

  std::uint64_t total() const {
    return concordant + discordant + human_only + metric_only + both_tied;
  }
  friend bool operator==(const TieCounts&, const TieCounts&) = default;
};

// Which translation pairs are comparable: only those sharing a source
// segment, or every pair of scored translations.
enum class PairScope { within_segment, all };

struct ScoredPoint {
  Key key;
  double metric = 0.0;
  double human = 0.0;
};

// Unordered pair of scored translations.
struct ScoredPair {
  ScoredPoint first;
  ScoredPoint second;
  double metric_gap() const { return std::abs(first.metric - second.metric); }
  bool human_tied() const { return first.human == second.human; }
};

using PairSet = std::vector<ScoredPair>;

struct CalibrationResult {
  double epsilon = 0.0;
  double acc_eq = 0.0;
  TieCounts counts_at_epsilon;
  std::size_t candidates_evaluated = 0;
};

// Materializes the pair universe over keys where both scores are present.
PairSet enumerate_pairs(const ScoreMatrix& metric, const ScoreMatrix& human,
                        PairScope scope);

// Classifies each pair: metric-tied iff |gap| <= epsilon, human-tied iff
// exactly equal. Epsilon is the only tolerance applied anywhere.
TieCounts count_pairs(const PairSet& pairs, double epsilon);

// (concordant + both_tied) / total pairs.
double acc_eq_at(const PairSet& pairs, double epsilon);

// Finds the epsilon maximizing acc_eq over the candidate set
// {0} + {every observed metric gap}; ties broken toward the smallest
// epsilon. Single sorted sweep, O(P log P).
CalibrationResult calibrate_epsilon(const PairSet& pairs);

// Same contract, implemented as a direct scan that fully recounts every
// candidate. Kept independent of the sweep as a correctness oracle.
CalibrationResult calibrate_epsilon_bruteforce(const PairSet& pairs);

}  // namespace meval
