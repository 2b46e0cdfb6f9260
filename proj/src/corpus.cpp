#include "meval/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>

#include "meval/format.hpp"

namespace meval {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
constexpr std::string_view kMissingToken = "NA";

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

double parse_score(std::string_view token, const std::filesystem::path& file,
                   std::size_t line_no) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last || !std::isfinite(value)) {
    raise(Errc::parse_error, file.string() + ":" + std::to_string(line_no) +
                                 ": expected a finite decimal score or '" +
                                 std::string(kMissingToken) + "', got '" +
                                 std::string(token) + "'");
  }
  return value;
}

long long parse_count(std::string_view token, const std::filesystem::path& file,
                      std::size_t line_no) {
  long long value = 0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size() ||
      value < 0) {
    raise(Errc::parse_error, file.string() + ":" + std::to_string(line_no) +
                                 ": expected a non-negative integer, got '" +
                                 std::string(token) + "'");
  }
  return value;
}

struct TsvReader {
  explicit TsvReader(const std::filesystem::path& p) : path(p), in(p) {
    if (!in) raise(Errc::io_error, "cannot open " + p.string());
  }

  // Returns false at end of file. Tolerates a trailing newline and CRLF.
  bool next_row(std::vector<std::string_view>& fields) {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() && in.peek() == std::char_traits<char>::eof()) {
        return false;
      }
      fields = split_tabs(line);
      return true;
    }
    return false;
  }

  void expect_header(std::initializer_list<std::string_view> columns) {
    std::vector<std::string_view> fields;
    if (!next_row(fields)) {
      raise(Errc::parse_error, path.string() + ": missing header line");
    }
    bool ok = fields.size() == columns.size() &&
              std::equal(fields.begin(), fields.end(), columns.begin());
    if (!ok) {
      raise(Errc::parse_error,
            path.string() + ":1: unexpected header '" + line + "'");
    }
  }

  void expect_columns(const std::vector<std::string_view>& fields,
                      std::size_t n) const {
    if (fields.size() != n) {
      raise(Errc::parse_error, path.string() + ":" + std::to_string(line_no) +
                                   ": expected " + std::to_string(n) +
                                   " tab-separated columns, got " +
                                   std::to_string(fields.size()));
    }
  }

  std::filesystem::path path;
  std::ifstream in;
  std::string line;
  std::size_t line_no = 0;
};

class IdTable {
 public:
  // Returns the index of name, interning it on first appearance.
  std::size_t intern(std::string_view name) {
    auto it = index_.find(std::string(name));
    if (it != index_.end()) return it->second;
    names_.emplace_back(name);
    index_.emplace(names_.back(), names_.size() - 1);
    return names_.size() - 1;
  }

  std::optional<std::size_t> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::vector<std::string> take() { return std::move(names_); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace

ScoreMatrix::ScoreMatrix(std::string name, std::size_t n_segments,
                         std::size_t n_systems)
    : name_(std::move(name)),
      n_segments_(n_segments),
      n_systems_(n_systems),
      cells_(n_segments * n_systems, kMissing) {}

bool ScoreMatrix::has(std::size_t segment, std::size_t system) const {
  return !std::isnan(cells_[index(segment, system)]);
}

double ScoreMatrix::at(std::size_t segment, std::size_t system) const {
  return cells_[index(segment, system)];
}

void ScoreMatrix::set(std::size_t segment, std::size_t system, double value) {
  cells_[index(segment, system)] = value;
}

void ScoreMatrix::clear(std::size_t segment, std::size_t system) {
  cells_[index(segment, system)] = kMissing;
}

std::size_t ScoreMatrix::n_present() const {
  return static_cast<std::size_t>(
      std::count_if(cells_.begin(), cells_.end(),
                    [](double v) { return !std::isnan(v); }));
}

bool operator==(const ScoreMatrix& a, const ScoreMatrix& b) {
  if (a.name_ != b.name_ || a.n_segments_ != b.n_segments_ ||
      a.n_systems_ != b.n_systems_) {
    return false;
  }
  for (std::size_t i = 0; i < a.cells_.size(); ++i) {
    const bool pa = !std::isnan(a.cells_[i]);
    const bool pb = !std::isnan(b.cells_[i]);
    if (pa != pb) return false;
    if (pa && a.cells_[i] != b.cells_[i]) return false;
  }
  return true;
}

Dataset::Dataset(std::string language_pair, std::vector<std::string> segments,
                 std::vector<std::string> systems, ScoreMatrix human,
                 std::vector<ScoreMatrix> metrics,
                 std::optional<std::vector<long long>> candidate_lengths,
                 std::map<std::string, MetricFlags> metric_flags)
    : language_pair_(std::move(language_pair)),
      segments_(std::move(segments)),
      systems_(std::move(systems)),
      human_(std::move(human)),
      metrics_(std::move(metrics)),
      candidate_lengths_(std::move(candidate_lengths)),
      metric_flags_(std::move(metric_flags)) {
  auto check_dims = [&](const ScoreMatrix& m) {
    if (m.n_segments() != segments_.size() ||
        m.n_systems() != systems_.size()) {
      raise(Errc::key_mismatch,
            "matrix '" + m.name() + "' does not cover the dataset key space");
    }
  };
  check_dims(human_);
  std::set<std::string> seen;
  for (const auto& m : metrics_) {
    check_dims(m);
    if (m.name() == "human" || !seen.insert(m.name()).second) {
      raise(Errc::duplicate_key, "duplicate metric name '" + m.name() + "'");
    }
  }
  if (candidate_lengths_ &&
      candidate_lengths_->size() != segments_.size() * systems_.size()) {
    raise(Errc::key_mismatch, "candidate_lengths does not cover the key space");
  }
}

std::vector<std::string> Dataset::metric_names() const {
  std::vector<std::string> names;
  names.reserve(metrics_.size());
  for (const auto& m : metrics_) names.push_back(m.name());
  return names;
}

const ScoreMatrix* Dataset::find_metric(std::string_view name) const {
  for (const auto& m : metrics_) {
    if (m.name() == name) return &m;
  }
  return nullptr;
}

const ScoreMatrix& Dataset::scores(std::string_view name) const {
  if (name == "human") return human_;
  const ScoreMatrix* m = find_metric(name);
  if (!m) raise(Errc::unknown_metric, "unknown metric '" + std::string(name) + "'");
  return *m;
}

std::optional<long long> Dataset::candidate_length(std::size_t segment,
                                                   std::size_t system) const {
  if (!candidate_lengths_) return std::nullopt;
  long long v = (*candidate_lengths_)[segment * systems_.size() + system];
  if (v < 0) return std::nullopt;
  return v;
}

namespace {

// Reads a score file into (segment, system) -> value triples, interning ids
// through the supplied tables. When `grow` is false, unknown ids raise
// KeyMismatch instead of being added.
struct ScoreFile {
  std::vector<std::tuple<std::size_t, std::size_t, double>> entries;
};

ScoreFile read_score_file(const std::filesystem::path& file, IdTable& segments,
                          IdTable& systems, bool grow) {
  TsvReader reader(file);
  reader.expect_header({"segment_id", "system_id", "score"});
  ScoreFile out;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::vector<std::string_view> fields;
  while (reader.next_row(fields)) {
    reader.expect_columns(fields, 3);
    if (fields[0].empty() || fields[1].empty()) {
      raise(Errc::parse_error, file.string() + ":" +
                                   std::to_string(reader.line_no) +
                                   ": empty segment or system id");
    }
    std::size_t seg, sys;
    if (grow) {
      seg = segments.intern(fields[0]);
      sys = systems.intern(fields[1]);
    } else {
      auto s1 = segments.find(fields[0]);
      auto s2 = systems.find(fields[1]);
      if (!s1 || !s2) {
        raise(Errc::key_mismatch,
              file.string() + ":" + std::to_string(reader.line_no) +
                  ": unknown " + (!s1 ? "segment" : "system") + " id '" +
                  std::string(!s1 ? fields[0] : fields[1]) + "'");
      }
      seg = *s1;
      sys = *s2;
    }
    if (!seen.emplace(seg, sys).second) {
      raise(Errc::duplicate_key, file.string() + ":" +
                                     std::to_string(reader.line_no) +
                                     ": duplicate (segment, system) entry");
    }
    if (fields[2] == kMissingToken) continue;  // explicit MISSING
    out.entries.emplace_back(seg, sys,
                             parse_score(fields[2], file, reader.line_no));
  }
  return out;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    raise(Errc::io_error, dir.string() + " is not a directory");
  }

  IdTable segment_ids;
  IdTable system_ids;
  ScoreFile human_file =
      read_score_file(dir / "human.tsv", segment_ids, system_ids, /*grow=*/true);

  std::vector<std::pair<std::string, ScoreFile>> metric_files;
  const auto metrics_dir = dir / "metrics";
  if (std::filesystem::is_directory(metrics_dir)) {
    std::vector<std::filesystem::path> paths;
    for (const auto& entry : std::filesystem::directory_iterator(metrics_dir)) {
      if (entry.path().extension() == ".tsv") paths.push_back(entry.path());
    }
    std::sort(paths.begin(), paths.end());
    for (const auto& p : paths) {
      std::string name = p.stem().string();
      if (name == "human") {
        raise(Errc::parse_error,
              p.string() + ": metric name 'human' is reserved");
      }
      metric_files.emplace_back(
          name, read_score_file(p, segment_ids, system_ids, /*grow=*/false));
    }
  }

  std::vector<std::string> segments = segment_ids.take();
  std::vector<std::string> systems = system_ids.take();
  const std::size_t n_seg = segments.size();
  const std::size_t n_sys = systems.size();
  if (n_seg == 0 || n_sys == 0) {
    raise(Errc::parse_error, (dir / "human.tsv").string() + ": no entries");
  }

  ScoreMatrix human("human", n_seg, n_sys);
  for (const auto& [seg, sys, v] : human_file.entries) human.set(seg, sys, v);

  std::vector<ScoreMatrix> metrics;
  metrics.reserve(metric_files.size());
  for (auto& [name, file] : metric_files) {
    ScoreMatrix m(name, n_seg, n_sys);
    for (const auto& [seg, sys, v] : file.entries) m.set(seg, sys, v);
    metrics.push_back(std::move(m));
  }

  std::optional<std::vector<long long>> lengths;
  const auto lengths_path = dir / "lengths.tsv";
  if (std::filesystem::exists(lengths_path)) {
    TsvReader reader(lengths_path);
    reader.expect_header({"segment_id", "system_id", "chars"});
    lengths.emplace(n_seg * n_sys, -1);
    std::vector<std::string_view> fields;
    while (reader.next_row(fields)) {
      reader.expect_columns(fields, 3);
      auto seg = segment_ids.find(fields[0]);
      auto sys = system_ids.find(fields[1]);
      if (!seg || !sys) {
        raise(Errc::key_mismatch,
              lengths_path.string() + ":" + std::to_string(reader.line_no) +
                  ": unknown segment or system id");
      }
      long long& slot = (*lengths)[*seg * n_sys + *sys];
      if (slot >= 0) {
        raise(Errc::duplicate_key,
              lengths_path.string() + ":" + std::to_string(reader.line_no) +
                  ": duplicate (segment, system) entry");
      }
      slot = parse_count(fields[2], lengths_path, reader.line_no);
    }
  }

  std::map<std::string, MetricFlags> flags;
  const auto flags_path = dir / "flags.tsv";
  if (std::filesystem::exists(flags_path)) {
    TsvReader reader(flags_path);
    reader.expect_header({"metric_name", "reference_free", "baseline", "sentinel"});
    std::vector<std::string_view> fields;
    auto parse_bool = [&](std::string_view t) {
      if (t == "0") return false;
      if (t == "1") return true;
      raise(Errc::parse_error, flags_path.string() + ":" +
                                   std::to_string(reader.line_no) +
                                   ": flag values must be 0 or 1");
    };
    while (reader.next_row(fields)) {
      reader.expect_columns(fields, 4);
      std::string name(fields[0]);
      if (!flags.emplace(name, MetricFlags{parse_bool(fields[1]),
                                           parse_bool(fields[2]),
                                           parse_bool(fields[3])})
               .second) {
        raise(Errc::duplicate_key, flags_path.string() + ":" +
                                       std::to_string(reader.line_no) +
                                       ": duplicate metric name");
      }
    }
  }

  return Dataset(dir.filename().string(), std::move(segments),
                 std::move(systems), std::move(human), std::move(metrics),
                 std::move(lengths), std::move(flags));
}

void write_score_matrix_tsv(const ScoreMatrix& matrix,
                            std::span<const std::string> segment_names,
                            std::span<const std::string> system_names,
                            const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) raise(Errc::io_error, "cannot write " + file.string());
  out << "segment_id\tsystem_id\tscore\n";
  for (std::size_t seg = 0; seg < matrix.n_segments(); ++seg) {
    for (std::size_t sys = 0; sys < matrix.n_systems(); ++sys) {
      out << segment_names[seg] << '\t' << system_names[sys] << '\t';
      if (matrix.has(seg, sys)) {
        out << format_exact(matrix.at(seg, sys));
      } else {
        out << kMissingToken;
      }
      out << '\n';
    }
  }
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "metrics");
  write_score_matrix_tsv(dataset.human(), dataset.segments(),
                         dataset.systems(), dir / "human.tsv");
  for (const auto& m : dataset.metrics()) {
    write_score_matrix_tsv(m, dataset.segments(), dataset.systems(),
                           dir / "metrics" / (m.name() + ".tsv"));
  }
  if (dataset.has_lengths()) {
    std::ofstream out(dir / "lengths.tsv");
    if (!out) raise(Errc::io_error, "cannot write lengths.tsv");
    out << "segment_id\tsystem_id\tchars\n";
    for (std::size_t seg = 0; seg < dataset.n_segments(); ++seg) {
      for (std::size_t sys = 0; sys < dataset.n_systems(); ++sys) {
        if (auto len = dataset.candidate_length(seg, sys)) {
          out << dataset.segments()[seg] << '\t' << dataset.systems()[sys]
              << '\t' << *len << '\n';
        }
      }
    }
  }
  if (!dataset.metric_flags().empty()) {
    std::ofstream out(dir / "flags.tsv");
    if (!out) raise(Errc::io_error, "cannot write flags.tsv");
    out << "metric_name\treference_free\tbaseline\tsentinel\n";
    for (const auto& [name, f] : dataset.metric_flags()) {
      out << name << '\t' << int(f.reference_free) << '\t' << int(f.baseline)
          << '\t' << int(f.sentinel) << '\n';
    }
  }
}

AlignedPairVector align(const ScoreMatrix& metric, const ScoreMatrix& human,
                        const std::vector<Key>* subset) {
  if (metric.n_segments() != human.n_segments() ||
      metric.n_systems() != human.n_systems()) {
    raise(Errc::key_mismatch, "matrices '" + metric.name() + "' and '" +
                                  human.name() + "' have different key spaces");
  }
  std::vector<Key> sorted_subset;
  if (subset) {
    sorted_subset = *subset;
    std::sort(sorted_subset.begin(), sorted_subset.end());
  }
  AlignedPairVector out;
  for (std::size_t seg = 0; seg < metric.n_segments(); ++seg) {
    for (std::size_t sys = 0; sys < metric.n_systems(); ++sys) {
      if (!metric.has(seg, sys) || !human.has(seg, sys)) continue;
      Key k{seg, sys};
      if (subset && !std::binary_search(sorted_subset.begin(),
                                        sorted_subset.end(), k)) {
        continue;
      }
      out.keys.push_back(k);
      out.metric_scores.push_back(metric.at(seg, sys));
      out.human_scores.push_back(human.at(seg, sys));
    }
  }
  if (out.keys.empty()) {
    raise(Errc::empty_alignment, "no keys with both '" + metric.name() +
                                     "' and '" + human.name() +
                                     "' scores present");
  }
  return out;
}

std::vector<double> system_scores(const ScoreMatrix& matrix) {
  std::vector<double> sums(matrix.n_systems(), 0.0);
  std::vector<std::size_t> counts(matrix.n_systems(), 0);
  for (std::size_t seg = 0; seg < matrix.n_segments(); ++seg) {
    for (std::size_t sys = 0; sys < matrix.n_systems(); ++sys) {
      if (!matrix.has(seg, sys)) continue;
      sums[sys] += matrix.at(seg, sys);
      ++counts[sys];
    }
  }
  std::vector<double> means(matrix.n_systems(), 0.0);
  for (std::size_t sys = 0; sys < matrix.n_systems(); ++sys) {
    if (counts[sys] == 0) {
      raise(Errc::empty_system, "system " + std::to_string(sys) + " of '" +
                                    matrix.name() + "' has no present scores");
    }
    means[sys] = sums[sys] / static_cast<double>(counts[sys]);
  }
  return means;
}

}  // namespace meval
