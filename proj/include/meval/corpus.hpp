#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "meval/error.hpp"

namespace meval {

// Index of a (segment, system) cell. Ordering is segment-major then
// system-minor, which is the canonical iteration order everywhere.
struct Key {
  std::size_t segment = 0;
  std::size_t system = 0;
  friend bool operator==(const Key&, const Key&) = default;
  friend auto operator<=>(const Key&, const Key&) = default;
};

// Dense (segment x system) score table with explicit missing entries.
// Scores are finite doubles where present; downstream statistics use
// pairwise deletion, never imputation.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  ScoreMatrix(std::string name, std::size_t n_segments, std::size_t n_systems);

  const std::string& name() const { return name_; }
  void rename(std::string name) { name_ = std::move(name); }

  std::size_t n_segments() const { return n_segments_; }
  std::size_t n_systems() const { return n_systems_; }

  bool has(std::size_t segment, std::size_t system) const;
  bool has(const Key& k) const { return has(k.segment, k.system); }
  // Value of a present cell; call has() first.
  double at(std::size_t segment, std::size_t system) const;
  double at(const Key& k) const { return at(k.segment, k.system); }

  void set(std::size_t segment, std::size_t system, double value);
  void clear(std::size_t segment, std::size_t system);

  std::size_t n_present() const;

  friend bool operator==(const ScoreMatrix&, const ScoreMatrix&);

 private:
  std::size_t index(std::size_t segment, std::size_t system) const {
    return segment * n_systems_ + system;
  }

  std::string name_;
  std::size_t n_segments_ = 0;
  std::size_t n_systems_ = 0;
  std::vector<double> cells_;  // NaN marks a missing entry
};

struct MetricFlags {
  bool reference_free = false;
  bool baseline = false;
  bool sentinel = false;
  friend bool operator==(const MetricFlags&, const MetricFlags&) = default;
};

// One evaluation dataset: the human score matrix plus any number of metric
// matrices over the same (segment, system) key space. Immutable after
// construction; safe to share across threads.
class Dataset {
 public:
  Dataset(std::string language_pair, std::vector<std::string> segments,
          std::vector<std::string> systems, ScoreMatrix human,
          std::vector<ScoreMatrix> metrics,
          std::optional<std::vector<long long>> candidate_lengths = {},
          std::map<std::string, MetricFlags> metric_flags = {});

  const std::string& language_pair() const { return language_pair_; }
  std::size_t n_segments() const { return segments_.size(); }
  std::size_t n_systems() const { return systems_.size(); }
  std::span<const std::string> segments() const { return segments_; }
  std::span<const std::string> systems() const { return systems_; }

  const ScoreMatrix& human() const { return human_; }
  const std::vector<ScoreMatrix>& metrics() const { return metrics_; }
  std::vector<std::string> metric_names() const;

  const ScoreMatrix* find_metric(std::string_view name) const;
  // Matrix by name; "human" resolves to the human matrix.
  const ScoreMatrix& scores(std::string_view name) const;

  bool has_lengths() const { return candidate_lengths_.has_value(); }
  std::optional<long long> candidate_length(std::size_t segment,
                                            std::size_t system) const;

  const std::map<std::string, MetricFlags>& metric_flags() const {
    return metric_flags_;
  }

 private:
  std::string language_pair_;
  std::vector<std::string> segments_;
  std::vector<std::string> systems_;
  ScoreMatrix human_;
  std::vector<ScoreMatrix> metrics_;
  std::optional<std::vector<long long>> candidate_lengths_;  // -1 == missing
  std::map<std::string, MetricFlags> metric_flags_;
};

// Metric and human scores restricted to keys where both are present, in
// canonical key order.
struct AlignedPairVector {
  std::vector<Key> keys;
  std::vector<double> metric_scores;
  std::vector<double> human_scores;
  std::size_t size() const { return keys.size(); }
};

// Reads the canonical TSV layout: human.tsv, metrics/<name>.tsv, and the
// optional lengths.tsv / flags.tsv. The directory name doubles as the
// dataset's language-pair tag.
Dataset load_dataset(const std::filesystem::path& dir);

// Inverse of load_dataset; scores are written with their shortest
// round-trip decimal representation.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);

// One metric matrix in the metrics/<name>.tsv format.
void write_score_matrix_tsv(const ScoreMatrix& matrix,
                            std::span<const std::string> segment_names,
                            std::span<const std::string> system_names,
                            const std::filesystem::path& file);

AlignedPairVector align(const ScoreMatrix& metric, const ScoreMatrix& human,
                        const std::vector<Key>* subset = nullptr);

// Per-system mean over present entries; a system with no present score
// raises EmptySystem.
std::vector<double> system_scores(const ScoreMatrix& matrix);

}  // namespace meval
