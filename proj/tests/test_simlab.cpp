#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "trf/rng.hpp"
#include "trf/simlab.hpp"

using namespace trf;
using namespace trf::sim;

namespace {

// Root-node CART criterion for every observed threshold, by direct SSE sums.
double naive_decrease(const data::Dataset& ds, std::size_t f, double tau) {
  double sl = 0, sr = 0, ql = 0, qr = 0;
  std::size_t nl = 0, nr = 0;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const double y = ds.response[i];
    if (ds.features(i, f) <= tau) {
      sl += y, ql += y * y, ++nl;
    } else {
      sr += y, qr += y * y, ++nr;
    }
  }
  if (nl == 0 || nr == 0) return -1.0;
  const double n = static_cast<double>(ds.n());
  const double total = (ql + qr) - (sl + sr) * (sl + sr) / n;
  const double left = ql - sl * sl / static_cast<double>(nl);
  const double right = qr - sr * sr / static_cast<double>(nr);
  return (total - left - right) / n;
}

bool naive_strong_wins(const data::Dataset& ds) {
  double best = -1.0;
  std::size_t arg = 0;
  for (std::size_t f = 0; f < ds.p(); ++f)
    for (std::size_t i = 0; i < ds.n(); ++i) {
      const double v = naive_decrease(ds, f, ds.features(i, f));
      if (v > best + 1e-12) best = v, arg = f;
    }
  return arg == 0;
}

}  // namespace

TEST(Sample, NoiselessLinear) {
  Dgp d;
  d.kind = DgpKind::linear;
  d.p = 3;
  d.snr = 1.0;
  const auto ds = sample(d, 50, 7);
  const double c = ds.response[0] - std::sqrt(12.0) * ds.features(0, 0);
  for (std::size_t i = 0; i < ds.n(); ++i) EXPECT_NEAR(ds.response[i] - std::sqrt(12.0) * ds.features(i, 0), c, 1e-12);
}

TEST(Sample, SignalHasUnitVariance) {
  for (const char* label : {"linear", "quadratic", "piecewise15", "sine:4pi", "sine:16pi"}) {
    const auto d = dgp_from_label(label, 1, 1.0);
    const auto ds = sample(d, 1000000, 3);
    double s = 0, s2 = 0;
    for (std::size_t i = 0; i < ds.n(); ++i) {
      const double v = ds.response[i];
      s += v, s2 += v * v;
    }
    const double n = static_cast<double>(ds.n());
    EXPECT_NEAR(s2 / n - (s / n) * (s / n), 1.0, 0.01) << label;
  }
}

TEST(Sample, NoiseVarianceFollowsSnr) {
  const auto d = dgp_from_label("linear", 2, 0.2);
  const auto ds = sample(d, 200000, 4);
  double s = 0, s2 = 0;
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const double e = ds.response[i] - d.f(ds.features.row(i));
    s += e, s2 += e * e;
  }
  const double n = static_cast<double>(ds.n());
  EXPECT_NEAR(s2 / n - (s / n) * (s / n), 4.0, 0.05);
}

TEST(Sample, Deterministic) {
  const auto d = dgp_from_label("sine:8pi", 4, 0.5);
  const auto a = sample(d, 100, 11);
  const auto b = sample(d, 100, 11);
  const auto c = sample(d, 100, 12);
  EXPECT_EQ(a.response, b.response);
  EXPECT_NE(a.response, c.response);
  for (std::size_t i = 0; i < 100; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(a.features(i, j), b.features(i, j));
}

TEST(Dgp, LabelsAndValidation) {
  EXPECT_EQ(dgp_from_label("sine:16pi", 8, 0.5).kind, DgpKind::sine);
  EXPECT_NEAR(dgp_from_label("sine:16pi", 8, 0.5).alpha, 16 * std::numbers::pi, 1e-12);
  EXPECT_THROW(dgp_from_label("cubic", 8, 0.5), std::invalid_argument);
  EXPECT_THROW(dgp_from_label("linear", 8, 0.0), std::invalid_argument);
  EXPECT_THROW(dgp_from_label("quadratic", 8, 0.5, 2), std::invalid_argument);
  const auto lin = dgp_from_label("linear", 6, 0.5, 3);
  std::vector<double> x = {1, 1, 1, 0.3, 0.3, 0.3};
  std::vector<double> z = {1, 1, 1, 0.9, 0.1, 0.5};
  EXPECT_EQ(lin.f(x), lin.f(z));
}

TEST(SplitProb, MatchesNaiveReplication) {
  for (const char* label : {"linear", "sine:4pi", "quadratic"}) {
    const auto d = dgp_from_label(label, 4, 0.3);
    const std::size_t reps = 120, n = 40;
    const auto est = estimate_split_prob(d, n, reps, 99, 1);
    std::size_t hits = 0;
    for (std::size_t r = 0; r < reps; ++r) hits += naive_strong_wins(sample(d, n, derive_seed(99, r)));
    EXPECT_EQ(est.estimate, static_cast<double>(hits) / reps) << label;
    EXPECT_NEAR(est.standard_error, std::sqrt(est.estimate * (1 - est.estimate) / reps), 1e-15);
  }
}

TEST(SplitProb, ThreadCountDoesNotMatter) {
  const auto d = dgp_from_label("linear", 8, 0.2);
  const auto a = estimate_split_prob(d, 60, 300, 5, 1);
  const auto b = estimate_split_prob(d, 60, 300, 5, 4);
  EXPECT_EQ(a.estimate, b.estimate);
  EXPECT_EQ(a.ties, b.ties);
}

TEST(SplitProb, LargeSampleLinear) {
  const auto d = dgp_from_label("linear", 2, 0.9);
  EXPECT_GT(estimate_split_prob(d, 400, 1000, 1).estimate, 0.95);
}

TEST(SplitProb, FewerWeakPredictorsHelp) {
  const auto small = estimate_split_prob(dgp_from_label("linear", 2, 0.1), 100, 1000, 2);
  const auto large = estimate_split_prob(dgp_from_label("linear", 16, 0.1), 100, 1000, 2);
  EXPECT_GE(small.estimate + 2 * std::hypot(small.standard_error, large.standard_error), large.estimate);
}

TEST(Delta, MatchesNaiveSupremum) {
  const auto d = dgp_from_label("linear", 3, 0.5);
  const auto ds = sample(d, 60, 8);
  double want = 0.0;
  for (std::size_t f = 0; f < 3; ++f)
    for (std::size_t i = 0; i < ds.n(); ++i) {
      const double tau = ds.features(i, f);
      const double v = naive_decrease(ds, f, tau);
      if (v < 0) continue;
      const double target = f == 0 ? 3.0 * tau * (1 - tau) : 0.0;
      want = std::max(want, std::abs(v - target));
    }
  const std::vector<std::size_t> all = {0, 1, 2};
  EXPECT_NEAR(estimate_delta(d, ds, all), want, 1e-10);
}

TEST(Delta, SubsetMonotone) {
  const auto d = dgp_from_label("quadratic", 5, 0.4);
  const auto ds = sample(d, 80, 9);
  const std::vector<std::size_t> a = {0, 2}, b = {0, 1, 2, 4};
  EXPECT_LE(estimate_delta(d, ds, a), estimate_delta(d, ds, b));
  const std::vector<std::size_t> bad = {7};
  EXPECT_THROW(estimate_delta(d, ds, bad), std::out_of_range);
}

TEST(Delta, VanishesWithoutNoise) {
  const auto d = dgp_from_label("linear", 2, 1.0);
  const std::vector<std::size_t> all = {0, 1};
  EXPECT_LT(estimate_delta(d, 100000, all, 10), 0.01);
}

TEST(Sandwich, BoundsAreConsistent) {
  const auto d = dgp_from_label("linear", 8, 0.5);
  const auto s = estimate_sandwich(d, 100, 200, 3, 1);
  EXPECT_EQ(s.upper, 1.0);
  EXPECT_NEAR(s.cstar, 0.75, 1e-4);
  EXPECT_EQ(s.rho.estimate, estimate_split_prob(d, 100, 200, 3, 1).estimate);
  EXPECT_LE(s.lower, s.rho.estimate);
}

TEST(Sweep, SingleCellEqualsDirectEstimate) {
  const std::vector<GridCell> grid = {{"linear", 4, 50, 0.3}};
  const auto rows = sweep(grid, 200, 17, 1);
  ASSERT_EQ(rows.size(), 1u);
  const auto direct = estimate_split_prob(dgp_from_label("linear", 4, 0.3), 50, 200, derive_seed(17, 0), 1);
  EXPECT_EQ(rows[0].estimate, direct.estimate);
}

TEST(Sweep, GridFileAndCsv) {
  const auto path = std::filesystem::temp_directory_path() / "trf_grid_test.csv";
  {
    std::ofstream out(path);
    out << "kind,p,n,snr\nlinear,2,30,0.5\nsine:4pi,8,30,0.2\n";
  }
  const auto grid = read_grid(path);
  ASSERT_EQ(grid.size(), 2u);
  EXPECT_EQ(grid[1].kind, "sine:4pi");
  EXPECT_EQ(grid[1].p, 8u);
  const auto rows = sweep(grid, 100, 1, 1);
  std::ostringstream csv;
  write_sweep_csv(csv, rows);
  std::istringstream in(csv.str());
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "kind,p,n,snr,reps,rho_hat,se,tie_rate,seed");
  {
    std::ofstream out(path);
    out << "kind,n\nlinear,3\n";
  }
  EXPECT_THROW(read_grid(path), std::runtime_error);
  std::filesystem::remove(path);
}
