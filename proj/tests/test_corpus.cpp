#include "meval/corpus.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "testutil.hpp"

using namespace meval;
using testutil::TempDir;
using testutil::write_file;

namespace {

void write_minimal(const std::filesystem::path& dir) {
  write_file(dir / "human.tsv",
             "segment_id\tsystem_id\tscore\n"
             "s1\tA\t5\n"
             "s1\tB\t3\n"
             "s2\tA\t4\n"
             "s2\tB\t4\n");
  write_file(dir / "metrics" / "m1.tsv",
             "segment_id\tsystem_id\tscore\n"
             "s1\tA\t0.9\n"
             "s1\tB\t0.1\n"
             "s2\tA\t0.5\n"
             "s2\tB\t0.4\n");
}

}  // namespace

TEST_CASE("load_dataset reads a minimal well-formed directory") {
  TempDir tmp("load_min");
  write_minimal(tmp.path);
  const Dataset ds = load_dataset(tmp.path);
  CHECK(ds.n_segments() == 2);
  CHECK(ds.n_systems() == 2);
  CHECK(ds.human().n_present() == 4);
  CHECK(ds.metrics().size() == 1);
  CHECK(ds.metrics()[0].name() == "m1");
  CHECK(ds.metrics()[0].n_present() == 4);
  // first-appearance order
  CHECK(ds.segments()[0] == "s1");
  CHECK(ds.systems()[1] == "B");
  CHECK(ds.human().at(0, 1) == 3.0);
  CHECK(ds.scores("m1").at(1, 0) == 0.5);
}

TEST_CASE("NA token marks a missing entry, the rest stay intact") {
  TempDir tmp("load_na");
  write_file(tmp.path / "human.tsv",
             "segment_id\tsystem_id\tscore\n"
             "s1\tA\t5\n"
             "s1\tB\tNA\n"
             "s2\tA\t4\n"
             "s2\tB\t2\n");
  const Dataset ds = load_dataset(tmp.path);
  CHECK(ds.human().n_present() == 3);
  CHECK_FALSE(ds.human().has(0, 1));
  CHECK(ds.human().at(1, 1) == 2.0);
}

TEST_CASE("metric file referencing an unknown id raises KeyMismatch") {
  TempDir tmp("load_mismatch");
  write_minimal(tmp.path);
  write_file(tmp.path / "metrics" / "bad.tsv",
             "segment_id\tsystem_id\tscore\n"
             "s9\tA\t0.5\n");
  try {
    load_dataset(tmp.path);
    FAIL("expected KeyMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::key_mismatch);
    CHECK(std::string(e.what()).find("unknown segment") != std::string::npos);
  }
}

TEST_CASE("duplicate (segment, system) rows raise DuplicateKey") {
  TempDir tmp("load_dup");
  write_file(tmp.path / "human.tsv",
             "segment_id\tsystem_id\tscore\n"
             "s1\tA\t5\n"
             "s1\tA\t4\n");
  try {
    load_dataset(tmp.path);
    FAIL("expected DuplicateKey");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::duplicate_key);
  }
}

TEST_CASE("malformed input raises ParseError") {
  SUBCASE("bad header") {
    TempDir tmp("load_hdr");
    write_file(tmp.path / "human.tsv", "segment\tsystem\tscore\ns1\tA\t5\n");
    try {
      load_dataset(tmp.path);
      FAIL("expected ParseError");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::parse_error);
    }
  }
  SUBCASE("non-numeric score") {
    TempDir tmp("load_badscore");
    write_file(tmp.path / "human.tsv",
               "segment_id\tsystem_id\tscore\ns1\tA\tgood\n");
    try {
      load_dataset(tmp.path);
      FAIL("expected ParseError");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::parse_error);
    }
  }
  SUBCASE("non-finite score") {
    TempDir tmp("load_inf");
    write_file(tmp.path / "human.tsv",
               "segment_id\tsystem_id\tscore\ns1\tA\tinf\n");
    CHECK_THROWS_AS(load_dataset(tmp.path), Error);
  }
  SUBCASE("wrong column count") {
    TempDir tmp("load_cols");
    write_file(tmp.path / "human.tsv",
               "segment_id\tsystem_id\tscore\ns1\tA\t5\textra\n");
    CHECK_THROWS_AS(load_dataset(tmp.path), Error);
  }
}

TEST_CASE("lengths and flags files are parsed and validated") {
  TempDir tmp("load_extra");
  write_minimal(tmp.path);
  write_file(tmp.path / "lengths.tsv",
             "segment_id\tsystem_id\tchars\n"
             "s1\tA\t120\n"
             "s2\tB\t80\n");
  write_file(tmp.path / "flags.tsv",
             "metric_name\treference_free\tbaseline\tsentinel\n"
             "m1\t1\t0\t0\n");
  const Dataset ds = load_dataset(tmp.path);
  CHECK(ds.has_lengths());
  CHECK(ds.candidate_length(0, 0) == 120);
  CHECK_FALSE(ds.candidate_length(0, 1).has_value());
  REQUIRE(ds.metric_flags().count("m1") == 1);
  CHECK(ds.metric_flags().at("m1").reference_free);
  CHECK_FALSE(ds.metric_flags().at("m1").sentinel);
}

TEST_CASE("negative length is rejected") {
  TempDir tmp("load_neglen");
  write_minimal(tmp.path);
  write_file(tmp.path / "lengths.tsv",
             "segment_id\tsystem_id\tchars\ns1\tA\t-3\n");
  try {
    load_dataset(tmp.path);
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::parse_error);
  }
}

TEST_CASE("load -> write -> load round-trips scores and MISSING bit-exactly") {
  std::mt19937_64 eng(20240811);
  for (int iter = 0; iter < 30; ++iter) {
    const std::size_t n_seg = 1 + eng() % 6;
    const std::size_t n_sys = 1 + eng() % 5;
    std::vector<double> human(n_seg * n_sys), metric(n_seg * n_sys);
    for (auto& v : human) {
      v = (eng() % 5 == 0) ? std::nan("")
                           : (double(eng() >> 11) * 0x1.0p-53) * 200.0 - 100.0;
    }
    for (auto& v : metric) {
      v = (eng() % 7 == 0) ? std::nan("") : double(eng() >> 11) * 0x1.0p-53;
    }
    const Dataset original =
        testutil::make_dataset(n_seg, n_sys, human, {{"m", metric}});
    TempDir tmp("roundtrip" + std::to_string(iter));
    write_dataset(original, tmp.path);
    const Dataset reloaded = load_dataset(tmp.path);
    REQUIRE(reloaded.n_segments() == n_seg);
    REQUIRE(reloaded.n_systems() == n_sys);
    CHECK(reloaded.human() == original.human());
    CHECK(reloaded.metrics()[0] == original.metrics()[0]);

    // a second write produces byte-identical files
    TempDir tmp2("roundtrip2_" + std::to_string(iter));
    write_dataset(reloaded, tmp2.path);
    std::ifstream a(tmp.path / "human.tsv"), b(tmp2.path / "human.tsv");
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
  }
}

TEST_CASE("align keeps exactly the keys where both scores are present") {
  const double miss = std::nan("");
  SUBCASE("intersection semantics") {
    const Dataset ds = testutil::make_dataset(
        2, 2, {1, 2, 3, miss}, {{"m", {0.1, 0.2, 0.3, 0.4}}});
    const auto aligned = align(ds.metrics()[0], ds.human());
    CHECK(aligned.size() == 3);
  }
  SUBCASE("full overlap, canonical order") {
    const Dataset ds =
        testutil::make_dataset(2, 2, {1, 2, 3, 4}, {{"m", {5, 6, 7, 8}}});
    const auto aligned = align(ds.metrics()[0], ds.human());
    REQUIRE(aligned.size() == 4);
    CHECK(aligned.keys[0] == Key{0, 0});
    CHECK(aligned.keys[1] == Key{0, 1});
    CHECK(aligned.keys[2] == Key{1, 0});
    CHECK(aligned.keys[3] == Key{1, 1});
    CHECK(aligned.metric_scores[2] == 7);
    CHECK(aligned.human_scores[2] == 3);
  }
  SUBCASE("disjoint presence raises EmptyAlignment") {
    const Dataset ds = testutil::make_dataset(1, 2, {1, miss},
                                              {{"m", {miss, 0.5}}});
    try {
      align(ds.metrics()[0], ds.human());
      FAIL("expected EmptyAlignment");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::empty_alignment);
    }
  }
  SUBCASE("key subset restricts the result") {
    const Dataset ds =
        testutil::make_dataset(2, 2, {1, 2, 3, 4}, {{"m", {5, 6, 7, 8}}});
    const std::vector<Key> subset{{1, 0}, {0, 0}};
    const auto aligned = align(ds.metrics()[0], ds.human(), &subset);
    REQUIRE(aligned.size() == 2);
    CHECK(aligned.keys[0] == Key{0, 0});  // canonical order, not subset order
    CHECK(aligned.keys[1] == Key{1, 0});
  }
}

TEST_CASE("system_scores averages present entries per system") {
  const double miss = std::nan("");
  SUBCASE("means") {
    const Dataset ds = testutil::make_dataset(2, 2, {1.0, 5.0, 3.0, miss}, {});
    const auto scores = system_scores(ds.human());
    CHECK(scores[0] == doctest::Approx(2.0));
    CHECK(scores[1] == doctest::Approx(5.0));
  }
  SUBCASE("all entries missing raises EmptySystem") {
    const Dataset ds = testutil::make_dataset(2, 2, {1.0, miss, 3.0, miss}, {});
    try {
      system_scores(ds.human());
      FAIL("expected EmptySystem");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::empty_system);
    }
  }
  SUBCASE("invariant under segment permutation") {
    std::mt19937_64 eng(7);
    for (int iter = 0; iter < 50; ++iter) {
      const std::size_t n_seg = 2 + eng() % 6, n_sys = 2 + eng() % 4;
      std::vector<double> cells(n_seg * n_sys);
      for (auto& v : cells) v = double(eng() >> 11) * 0x1.0p-53;
      ScoreMatrix a("a", n_seg, n_sys);
      for (std::size_t s = 0; s < n_seg; ++s)
        for (std::size_t y = 0; y < n_sys; ++y) a.set(s, y, cells[s * n_sys + y]);
      std::vector<std::size_t> perm(n_seg);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), eng);
      ScoreMatrix b("b", n_seg, n_sys);
      for (std::size_t s = 0; s < n_seg; ++s)
        for (std::size_t y = 0; y < n_sys; ++y)
          b.set(s, y, cells[perm[s] * n_sys + y]);
      const auto sa = system_scores(a);
      const auto sb = system_scores(b);
      for (std::size_t y = 0; y < n_sys; ++y) {
        CHECK(sa[y] == doctest::Approx(sb[y]).epsilon(1e-12));
      }
    }
  }
}
