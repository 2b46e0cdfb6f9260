#pragma once

#include <stdexcept>
#include <string>

namespace meval {

// Failure categories raised by the library. The CLI maps them onto process
// exit codes: data errors -> 2, degenerate computations -> 3.
enum class Errc {
  io_error,
  parse_error,
  duplicate_key,
  key_mismatch,
  unknown_metric,
  too_few_metrics,
  empty_alignment,
  empty_system,
  empty_segment,
  empty_pairs,
  missing_lengths,
  length_mismatch,
  too_few_points,
  too_few_systems,
  no_untied_pairs,
  no_valid_groups,
  missing_pvalue,
  inconsistent_metric_sets,
  not_discrete,
  zero_gap,
  all_pairs_removed,
  split_too_small,
  constant_x,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) {
  throw Error(code, what);
}

// Malformed or empty input, as opposed to a statistic degenerating on
// otherwise valid data.
inline bool is_data_error(Errc c) {
  switch (c) {
    case Errc::io_error:
    case Errc::parse_error:
    case Errc::duplicate_key:
    case Errc::key_mismatch:
    case Errc::unknown_metric:
    case Errc::too_few_metrics:
    case Errc::empty_alignment:
    case Errc::empty_system:
    case Errc::empty_segment:
    case Errc::empty_pairs:
    case Errc::missing_lengths:
      return true;
    default:
      return false;
  }
}

}  // namespace meval
