#include "meval/experiments.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "meval/sentinels.hpp"
#include "testutil.hpp"

using namespace meval;

namespace {

// Synthetic pair set with an exact human-tie fraction: keys are distinct so
// per-pair removal decisions are independent.
PairSet synthetic_pairs(std::size_t n_pairs, double tie_fraction,
                        std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  PairSet pairs;
  const auto n_tied = static_cast<std::size_t>(
      std::llround(tie_fraction * static_cast<double>(n_pairs)));
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const double h = double(eng() >> 11) * 0x1.0p-53;
    const bool tied = i < n_tied;
    ScoredPoint a{{i, 0}, double(eng() >> 11) * 0x1.0p-53, h};
    ScoredPoint b{{i, 1}, double(eng() >> 11) * 0x1.0p-53, tied ? h : h + 0.5};
    pairs.push_back({a, b});
  }
  return pairs;
}

double tie_fraction_of(const PairSet& pairs) {
  std::size_t tied = 0;
  for (const auto& p : pairs) tied += p.human_tied();
  return double(tied) / double(pairs.size());
}

// Human scores with ties (quality snapped to a small grid), one continuous
// metric tracking quality, and its 3-level discretization.
Dataset tied_dataset(std::size_t n_seg, std::size_t n_sys, int human_levels,
                     std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  const std::size_t n = n_seg * n_sys;
  std::vector<double> human(n), cont(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double quality = double(eng() >> 11) * 0x1.0p-53;
    human[i] = human_levels > 0
                   ? std::floor(quality * human_levels) / human_levels
                   : quality;
    cont[i] = quality + 0.05 * (double(eng() >> 11) * 0x1.0p-53 - 0.5);
  }
  Dataset base = testutil::make_dataset(n_seg, n_sys, human, {{"cont", cont}});
  const ScoreMatrix disc = discretize(
      base.metrics()[0], DiscreteLevels(std::vector<double>{0.2, 0.5, 0.8}));
  ScoreMatrix human_m = base.human();
  ScoreMatrix cont_m = base.metrics()[0];
  return Dataset("tied", testutil::id_list("seg", n_seg),
                 testutil::id_list("sys", n_sys), std::move(human_m),
                 {std::move(cont_m), disc});
}

}  // namespace

TEST_CASE("subsample_pairs basics") {
  const PairSet pairs = synthetic_pairs(500, 0.3, 1);
  SUBCASE("removing every tied pair leaves none") {
    const PairSet out = subsample_pairs(pairs, {1.0, 0.0, 42});
    CHECK(tie_fraction_of(out) == 0.0);
    CHECK(out.size() == 350);
  }
  SUBCASE("zero probabilities are the identity") {
    const PairSet out = subsample_pairs(pairs, {0.0, 0.0, 42});
    CHECK(out.size() == pairs.size());
  }
  SUBCASE("deterministic for a fixed seed, subset of the input") {
    const PairSet a = subsample_pairs(pairs, {0.4, 0.2, 9});
    const PairSet b = subsample_pairs(pairs, {0.4, 0.2, 9});
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].first.key == b[i].first.key);
      CHECK(a[i].second.key == b[i].second.key);
    }
    CHECK(a.size() <= pairs.size());
  }
  SUBCASE("removing everything raises AllPairsRemoved") {
    try {
      subsample_pairs(pairs, {1.0, 1.0, 3});
      FAIL("expected AllPairsRemoved");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::all_pairs_removed);
    }
  }
}

TEST_CASE("subsampled tie fraction follows the expectation formula") {
  // t(1-p_t) / (t(1-p_t) + (1-t)(1-p_n)) with t = 0.24, p_t = 0, p_n = 0.5
  const PairSet pairs = synthetic_pairs(10000, 0.24, 77);
  REQUIRE(tie_fraction_of(pairs) == doctest::Approx(0.24));
  double mean = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    mean += tie_fraction_of(subsample_pairs(pairs, {0.0, 0.5, seed}));
  }
  mean /= 5.0;
  const double expected = 0.24 / (0.24 + 0.76 * 0.5);
  CHECK(std::abs(mean - expected) <= 0.02);
  CHECK(expected == doctest::Approx(0.387).epsilon(1e-2));
}

TEST_CASE("tie_sweep with the identity grid equals direct calibration") {
  const Dataset ds = tied_dataset(30, 6, 4, 11);
  const std::vector<SubsampleConfig> grid{{0.0, 0.0, 0}};
  // one seed: bit-exact; several seeds only average identical values
  const SweepResult sweep =
      tie_sweep(ds, {"cont", "discretized:cont"}, grid, 1, 123);
  const SweepResult averaged =
      tie_sweep(ds, {"cont", "discretized:cont"}, grid, 3, 123);
  REQUIRE(sweep.rows.size() == 1);
  for (std::size_t m = 0; m < sweep.metric_names.size(); ++m) {
    const PairSet pairs = enumerate_pairs(ds.scores(sweep.metric_names[m]),
                                          ds.human(), PairScope::within_segment);
    const CalibrationResult direct = calibrate_epsilon(pairs);
    CHECK(sweep.rows[0].per_metric[m].epsilon == direct.epsilon);
    CHECK(sweep.rows[0].per_metric[m].acc_eq == direct.acc_eq);
    CHECK(averaged.rows[0].per_metric[m].acc_eq ==
          doctest::Approx(direct.acc_eq).epsilon(1e-12));
  }
  CHECK(sweep.rows[0].retained_pairs ==
        double(enumerate_pairs(ds.human(), ds.human(), PairScope::within_segment)
                   .size()));
}

TEST_CASE("continuous metric calibrated on tie-free pairs picks epsilon 0") {
  // human continuous (no ties anywhere), metric continuous
  const Dataset ds = tied_dataset(40, 6, 0, 99);
  const PairSet pairs =
      enumerate_pairs(ds.scores("cont"), ds.human(), PairScope::within_segment);
  for (const auto& p : pairs) REQUIRE_FALSE(p.human_tied());
  const CalibrationResult cal = calibrate_epsilon(pairs);
  CHECK(cal.epsilon == 0.0);

  // and through the sweep driver with a tie-free grid point
  const Dataset tied = tied_dataset(40, 6, 3, 100);
  const SweepResult sweep =
      tie_sweep(tied, {"cont"}, {{1.0, 0.0, 0}}, 5, 321);
  CHECK(sweep.rows[0].tie_fraction == 0.0);
  CHECK(sweep.rows[0].per_metric[0].epsilon == 0.0);
}

TEST_CASE("at zero human ties a continuous metric beats its discretization") {
  const Dataset ds = tied_dataset(50, 8, 0, 5);
  const auto cont_pairs =
      enumerate_pairs(ds.scores("cont"), ds.human(), PairScope::within_segment);
  const auto disc_pairs = enumerate_pairs(ds.scores("discretized:cont"),
                                          ds.human(), PairScope::within_segment);
  const double acc_cont = calibrate_epsilon(cont_pairs).acc_eq;
  const double acc_disc = calibrate_epsilon(disc_pairs).acc_eq;
  CHECK(acc_cont >= acc_disc);
}

TEST_CASE("sweeping a tie grid: 0% point favors the continuous metric and "
          "epsilons are min-max scaled") {
  const Dataset ds = tied_dataset(60, 8, 4, 2024);
  // from all ties removed down to heavy untied removal (rising tie share)
  const std::vector<SubsampleConfig> grid{
      {1.0, 0.0, 0}, {0.5, 0.0, 0}, {0.0, 0.0, 0}, {0.0, 0.5, 0}, {0.0, 0.8, 0}};
  const SweepResult sweep =
      tie_sweep(ds, {"cont", "discretized:cont"}, grid, 5, 88);
  REQUIRE(sweep.rows.size() == grid.size());

  // tie share rises along this grid
  CHECK(sweep.rows.front().tie_fraction == 0.0);
  CHECK(sweep.rows.back().tie_fraction > sweep.rows[2].tie_fraction);

  // continuous metric wins where ties are absent
  CHECK(sweep.rows[0].per_metric[0].acc_eq >= sweep.rows[0].per_metric[1].acc_eq);

  for (std::size_t m = 0; m < sweep.metric_names.size(); ++m) {
    double lo = 1e300, hi = -1e300, lo_raw = 1e300, hi_raw = -1e300;
    for (const auto& row : sweep.rows) {
      lo = std::min(lo, row.per_metric[m].epsilon_scaled);
      hi = std::max(hi, row.per_metric[m].epsilon_scaled);
      lo_raw = std::min(lo_raw, row.per_metric[m].epsilon);
      hi_raw = std::max(hi_raw, row.per_metric[m].epsilon);
    }
    CHECK(lo >= 0.0);
    CHECK(hi <= 1.0);
    if (hi_raw > lo_raw) {
      CHECK(lo == 0.0);
      CHECK(hi == 1.0);
    }
  }
  // the continuous metric's epsilon grows with the tie share
  CHECK(sweep.rows[0].per_metric[0].epsilon <=
        sweep.rows.back().per_metric[0].epsilon);
}

TEST_CASE("held-out calibration") {
  SUBCASE("matching tie distributions give near same-set accuracy") {
    const Dataset ds = tied_dataset(120, 8, 4, 404);
    HeldOutConfig cfg;
    cfg.calibration_fraction = 0.2;
    cfg.seed = 17;
    const SweepResult held = held_out_calibration(ds, {"cont"}, cfg);
    // same-set reference on the full pair universe
    const double same_set =
        calibrate_epsilon(enumerate_pairs(ds.scores("cont"), ds.human(),
                                          PairScope::within_segment))
            .acc_eq;
    CHECK(std::abs(held.rows[0].per_metric[0].acc_eq - same_set) < 0.05);
  }
  SUBCASE("calibration subsampled to zero ties carries epsilon 0 to the test "
          "split") {
    const Dataset ds = tied_dataset(120, 8, 4, 405);
    HeldOutConfig cfg;
    cfg.calibration_fraction = 0.2;
    cfg.seed = 18;
    cfg.subsample = {1.0, 0.0, 55};  // remove all tied calibration pairs
    const SweepResult held = held_out_calibration(ds, {"cont"}, cfg);
    CHECK(held.rows[0].tie_fraction == 0.0);
    CHECK(held.rows[0].per_metric[0].epsilon == 0.0);

    // evaluating the test pairs with the same-set optimum can only be better
    HeldOutConfig plain = cfg;
    plain.subsample = {0.0, 0.0, 55};
    const SweepResult held_plain = held_out_calibration(ds, {"cont"}, plain);
    CHECK(held.rows[0].per_metric[0].acc_eq <=
          held_plain.rows[0].per_metric[0].acc_eq + 1e-12);
  }
  SUBCASE("discrete metrics react less to the calibration tie share") {
    const Dataset ds = tied_dataset(120, 8, 4, 406);
    const std::vector<SubsampleConfig> grid{
        {1.0, 0.0, 0}, {0.5, 0.0, 0}, {0.0, 0.0, 0}, {0.0, 0.5, 0}, {0.0, 0.8, 0}};
    HeldOutConfig base;
    base.calibration_fraction = 0.2;
    base.seed = 19;
    const SweepResult sweep =
        held_out_sweep(ds, {"cont", "discretized:cont"}, base, grid, 5);
    auto range_of = [&](std::size_t m) {
      double lo = sweep.rows[0].per_metric[m].acc_eq, hi = lo;
      for (const auto& row : sweep.rows) {
        lo = std::min(lo, row.per_metric[m].acc_eq);
        hi = std::max(hi, row.per_metric[m].acc_eq);
      }
      return hi - lo;
    };
    CHECK(range_of(0) > range_of(1));  // cont varies more than disc
  }
  SUBCASE("too few segments raise SplitTooSmall") {
    const Dataset ds = tied_dataset(1, 8, 3, 1);
    HeldOutConfig cfg;
    try {
      held_out_calibration(ds, {"cont"}, cfg);
      FAIL("expected SplitTooSmall");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::split_too_small);
    }
  }
}

TEST_CASE("ols_fit closed form") {
  SUBCASE("exact line") {
    const std::vector<double> x{0, 1, 2, 3};
    const std::vector<double> y{1, 3, 5, 7};  // 2x + 1
    const OlsFit fit = ols_fit(x, y);
    CHECK(fit.slope == doctest::Approx(2.0));
    CHECK(fit.intercept == doctest::Approx(1.0));
    CHECK(fit.n == 4);
  }
  SUBCASE("constant y") {
    const std::vector<double> x{0, 1, 2};
    const std::vector<double> y{4, 4, 4};
    const OlsFit fit = ols_fit(x, y);
    CHECK(fit.slope == doctest::Approx(0.0));
    CHECK(fit.intercept == doctest::Approx(4.0));
  }
  SUBCASE("hand-computed three points") {
    const std::vector<double> x{1, 2, 3};
    const std::vector<double> y{1, 3, 2};
    const OlsFit fit = ols_fit(x, y);
    CHECK(fit.slope == doctest::Approx(0.5));
    CHECK(fit.intercept == doctest::Approx(1.0));
  }
  SUBCASE("constant x raises") {
    try {
      ols_fit(std::vector<double>{2, 2, 2}, std::vector<double>{1, 2, 3});
      FAIL("expected ConstantX");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::constant_x);
    }
  }
  SUBCASE("residuals are orthogonal to x") {
    std::mt19937_64 eng(15);
    for (int iter = 0; iter < 100; ++iter) {
      const std::size_t n = 3 + eng() % 40;
      const auto x = testutil::random_scores(eng, n, 0);
      const auto y = testutil::random_scores(eng, n, 0);
      OlsFit fit;
      try {
        fit = ols_fit(x, y);
      } catch (const Error&) {
        continue;
      }
      double dot = 0.0, scale = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double resid = y[i] - fit.slope * x[i] - fit.intercept;
        dot += resid * x[i];
        scale += std::abs(x[i]);
      }
      CHECK(std::abs(dot) <= 1e-9 * std::max(1.0, scale));
    }
  }
}

TEST_CASE("length_bias_report") {
  std::mt19937_64 eng(71);
  const std::size_t n_seg = 100, n_sys = 10;
  const std::size_t n = n_seg * n_sys;
  std::vector<double> human(n), independent(n), biased(n);
  std::vector<long long> lengths(n);
  for (std::size_t i = 0; i < n; ++i) {
    lengths[i] = 20 + static_cast<long long>(eng() % 400);
    human[i] = double(eng() >> 11) * 0x1.0p-53;
    independent[i] = double(eng() >> 11) * 0x1.0p-53;  // no length relation
    biased[i] = -double(lengths[i]);                   // pure length bias
  }
  const Dataset ds = testutil::make_dataset(
      n_seg, n_sys, human, {{"indep", independent}, {"neglen", biased}},
      lengths);

  SUBCASE("independent scores fit a near-zero slope") {
    const LengthBiasReport report = length_bias_report(ds, "indep");
    CHECK(report.points.size() == n);
    CHECK(std::abs(report.fit.slope) < 5e-4);
  }
  SUBCASE("pure length bias: negative slope, correlation -1") {
    const LengthBiasReport report = length_bias_report(ds, "neglen");
    CHECK(report.fit.slope == doctest::Approx(-1.0));
    std::vector<double> xs, ys;
    for (const auto& [x, y] : report.points) {
      xs.push_back(x);
      ys.push_back(y);
    }
    CHECK(*pearson(xs, ys) == doctest::Approx(-1.0));
  }
  SUBCASE("human filter drops low-scored entries") {
    const LengthBiasReport all = length_bias_report(ds, "indep");
    const LengthBiasReport filtered = length_bias_report(ds, "indep", 0.5);
    CHECK(filtered.points.size() < all.points.size());
    CHECK(filtered.points.size() > 0);
  }
  SUBCASE("missing lengths raise") {
    const Dataset bare = testutil::make_dataset(2, 2, {1, 2, 3, 4},
                                                {{"m", {1, 2, 3, 4}}});
    try {
      length_bias_report(bare, "m");
      FAIL("expected MissingLengths");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::missing_lengths);
    }
  }
}

TEST_CASE("metric_correlation_matrix") {
  std::mt19937_64 eng(88);
  const std::size_t n_seg = 10, n_sys = 6;
  const std::size_t n = n_seg * n_sys;
  std::vector<double> human(n), a(n), b(n), affine(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double difficulty = double(i / n_sys) * 0.3;
    human[i] = difficulty + double(eng() >> 11) * 0x1.0p-53;
    a[i] = human[i] + 0.1 * (double(eng() >> 11) * 0x1.0p-53);
    b[i] = double(eng() >> 11) * 0x1.0p-53;
    affine[i] = 2.0 * a[i] + 1.0;
  }
  Dataset ds = testutil::make_dataset(
      n_seg, n_sys, human, {{"a", a}, {"affine", affine}, {"b", b}});

  SUBCASE("symmetric with unit diagonal, affine pairs at 1") {
    const auto matrix =
        metric_correlation_matrix(ds, {"a", "affine", "b"}, Grouping::none);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(matrix[i][i] == 1.0);
      for (std::size_t j = 0; j < 3; ++j) CHECK(matrix[i][j] == matrix[j][i]);
    }
    CHECK(matrix[0][1] == doctest::Approx(1.0));
  }
  SUBCASE("difficulty-tracking metric correlates with the segment-constant "
          "sentinel") {
    const ScoreMatrix sentinel =
        segment_constant_scores(ds.human(), SegmentReducer::mean);
    ScoreMatrix human_m = ds.human();
    ScoreMatrix a_m = ds.metrics()[0];
    const Dataset with_sentinel(
        "s", testutil::id_list("seg", n_seg), testutil::id_list("sys", n_sys),
        std::move(human_m), {std::move(a_m), sentinel});
    const auto matrix = metric_correlation_matrix(
        with_sentinel, {"a", "sentinel_seg_const"}, Grouping::none);
    CHECK(matrix[0][1] > 0.3);
  }
  SUBCASE("fewer than two metrics is rejected") {
    CHECK_THROWS_AS(metric_correlation_matrix(ds, {"a"}, Grouping::none), Error);
  }
}

TEST_CASE("default sweep grid matches the documented 13-point design") {
  const auto grid = default_sweep_grid();
  REQUIRE(grid.size() == 13);
  CHECK(grid[0].tied_removal_prob == 1.0);
  CHECK(grid[3].tied_removal_prob == 0.0);
  CHECK(grid[3].untied_removal_prob == 0.0);
  CHECK(grid[12].untied_removal_prob == 0.85);
}
