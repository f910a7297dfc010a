#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <gtest/gtest.h>

#include "trf/evallab.hpp"
#include "trf/rng.hpp"

using namespace trf;
using namespace trf::eval;

namespace {

ForecastReport hand_report(const std::vector<double>& ea, const std::vector<double>& eb) {
  ForecastReport r;
  r.methods = {"a", "b"};
  for (std::size_t w = 0; w < ea.size(); ++w) {
    ForecastRecord x;
    x.window = w;
    x.target_time = w + 10;
    x.time_label = "t" + std::to_string(w);
    x.method = "a";
    x.squared_error = ea[w];
    r.records.push_back(x);
    x.method = "b";
    x.squared_error = eb[w];
    r.records.push_back(x);
  }
  return r;
}

data::Dataset sparse(std::size_t n, std::size_t p, std::uint64_t seed) {
  Rng rng(seed);
  data::Dataset ds;
  ds.features = Matrix(n, p);
  for (std::size_t j = 0; j < p; ++j) ds.feature_names.push_back("x" + std::to_string(j + 1));
  ds.response.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double f = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      ds.features(i, j) = rng.uniform();
      if (j < 3) f += 2.0 * ds.features(i, j);
    }
    ds.response[i] = f + 0.5 * rng.normal();
  }
  return ds;
}

}  // namespace

TEST(Methods, Parse) {
  EXPECT_EQ(method_from_string("rf").tag(), "rf");
  EXPECT_EQ(method_from_string("trf:10").s_prime, 10u);
  EXPECT_EQ(method_from_string("trf:5:powers_23").expansion, targeting::Expansion::powers_23);
  EXPECT_EQ(Method::trf(5, targeting::Expansion::powers_23).tag(), "trf:5:powers_23");
  EXPECT_EQ(methods_from_string("rf,trf:3").size(), 2u);
  EXPECT_THROW(method_from_string("trf"), std::invalid_argument);
  EXPECT_THROW(method_from_string("svm"), std::invalid_argument);
}

TEST(MseRatio, HandValues) {
  const auto r = hand_report({1, 1}, {2, 2});
  EXPECT_EQ(mse_ratio(r, "a", "b"), 0.5);
  EXPECT_EQ(mse_ratio(r, "a", "a"), 1.0);
  const auto r2 = hand_report({1, 3, 0.5}, {2, 5, 7});
  EXPECT_EQ(mse_ratio(r2, "a", "b", std::vector<bool>{false, true, false}), 3.0 / 5.0);
  EXPECT_EQ(mse_ratio(r2, "b", "b", std::vector<bool>{true, false, true}), 1.0);
  EXPECT_DOUBLE_EQ(mse_ratio(r2, "a", "b"), 4.5 / 14.0);
}

TEST(MseRatio, Errors) {
  const auto r = hand_report({1, 1}, {0, 0});
  EXPECT_THROW(mse_ratio(r, "a", "b"), std::domain_error);
  EXPECT_THROW(mse_ratio(r, "a", "c"), std::invalid_argument);
  EXPECT_THROW(mse_ratio(r, "b", "a", std::vector<bool>{true}), std::invalid_argument);
  EXPECT_THROW(mse_ratio(r, "b", "a", std::vector<bool>{false, false}), std::invalid_argument);
}

TEST(Regimes, MaskFromFile) {
  const auto r = hand_report({1, 2, 3}, {1, 1, 1});
  const auto path = std::filesystem::temp_directory_path() / "trf_regimes_test.csv";
  {
    std::ofstream out(path);
    out << "time_index,label\nt0,recession\nt1,expansion\nt2,recession\n";
  }
  const auto regimes = load_regimes(path);
  const auto mask = regime_mask(r, regimes, "recession");
  EXPECT_EQ(mask, (std::vector<bool>{true, false, true}));
  EXPECT_EQ(mse_ratio(r, "a", "b", mask), 2.0);
  std::filesystem::remove(path);
}

TEST(Dm, HandOracleNoLags) {
  // Loss differential d = loss_b - loss_a = (1, -1, 2, -2, 4).
  const std::vector<double> a = {0, 1, 0, 2, 0};
  const std::vector<double> b = {1, 0, 2, 0, 4};
  const double mean = 4.0 / 5.0;
  double g0 = 0.0;
  for (double d : {1.0, -1.0, 2.0, -2.0, 4.0}) g0 += (d - mean) * (d - mean);
  g0 /= 5.0;
  const double stat = mean / std::sqrt(g0 / 5.0);
  const auto r = dm_test(a, b, 1);
  EXPECT_NEAR(r.statistic, stat, 1e-14);
  EXPECT_NEAR(r.mean_differential, mean, 1e-15);
  EXPECT_NEAR(r.hac_variance, g0, 1e-14);
  EXPECT_NEAR(r.p_value, 0.5 * std::erfc(stat / std::sqrt(2.0)), 1e-14);
}

TEST(Dm, BartlettLags) {
  Rng rng(3);
  std::vector<double> a(40), b(40);
  for (std::size_t t = 0; t < 40; ++t) a[t] = rng.uniform(), b[t] = rng.uniform() + 0.1;
  const std::size_t h = 4;
  std::vector<double> d(40);
  for (std::size_t t = 0; t < 40; ++t) d[t] = b[t] - a[t];
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / 40.0;
  auto gamma = [&](std::size_t j) {
    double s = 0.0;
    for (std::size_t t = j; t < 40; ++t) s += (d[t] - mean) * (d[t - j] - mean);
    return s / 40.0;
  };
  double v = gamma(0);
  for (std::size_t j = 1; j < h; ++j) v += 2.0 * (1.0 - static_cast<double>(j) / h) * gamma(j);
  const auto r = dm_test(a, b, h);
  EXPECT_NEAR(r.hac_variance, v, 1e-14);
  EXPECT_NEAR(r.statistic, mean / std::sqrt(v / 40.0), 1e-12);
}

TEST(Dm, DegenerateAndAntisymmetric) {
  const std::vector<double> e = {1, 2, 3, 4, 5};
  const auto same = dm_test(e, e, 1);
  EXPECT_EQ(same.statistic, 0.0);
  EXPECT_EQ(same.p_value, 0.5);
  const std::vector<double> shifted = {2, 3, 4, 5, 6};
  const auto constant = dm_test(e, shifted, 1);
  EXPECT_EQ(constant.statistic, 0.0);
  EXPECT_EQ(constant.p_value, 0.5);

  Rng rng(5);
  std::vector<double> a(60), b(60);
  for (std::size_t t = 0; t < 60; ++t) a[t] = rng.uniform(), b[t] = rng.uniform();
  for (std::size_t h : {1u, 3u}) {
    const auto ab = dm_test(a, b, h);
    const auto ba = dm_test(b, a, h);
    EXPECT_EQ(ab.statistic, -ba.statistic);
    EXPECT_NEAR(ab.p_value, 1.0 - ba.p_value, 1e-15);
  }
}

TEST(Dm, Errors) {
  const std::vector<double> a = {1, 2, 3}, b = {1, 2};
  EXPECT_THROW(dm_test(a, b, 1), std::invalid_argument);
  EXPECT_THROW(dm_test(a, a, 2), std::invalid_argument);
}

TEST(Diagnostics, PairIdentityMatchesLoop) {
  Rng rng(7);
  const std::size_t T = 25, B = 9;
  Matrix pred(T, B);
  std::vector<double> y(T);
  for (std::size_t t = 0; t < T; ++t) {
    y[t] = rng.normal();
    for (std::size_t b = 0; b < B; ++b) pred(t, b) = y[t] + 0.3 * rng.normal() + 0.1 * static_cast<double>(b);
  }
  // Direct O(B^2 T) estimators.
  std::vector<std::vector<double>> kappa(B, std::vector<double>(B, 0.0));
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < B; ++c) {
      for (std::size_t t = 0; t < T; ++t) kappa[b][c] += (y[t] - pred(t, b)) * (y[t] - pred(t, c));
      kappa[b][c] /= T;
    }
  double mse = 0.0, root = 0.0, off = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    mse += kappa[b][b] / B;
    root += std::sqrt(kappa[b][b]) / B;
    for (std::size_t c = 0; c < B; ++c)
      if (c != b) off += kappa[b][c] / (B * (B - 1.0));
  }
  double fmse = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    double m = 0.0;
    for (std::size_t b = 0; b < B; ++b) m += pred(t, b) / B;
    fmse += (y[t] - m) * (y[t] - m) / T;
  }
  const auto d = error_diagnostics(pred, y);
  EXPECT_NEAR(d.tree_mse, mse, 1e-12);
  EXPECT_NEAR(d.tree_correlation, off / (root * root), 1e-12);
  EXPECT_NEAR(d.forest_mse, fmse, 1e-12);
}

TEST(Diagnostics, IdenticalTreesCorrelateFully) {
  const auto ds = sparse(120, 6, 1);
  std::vector<std::size_t> train(60), test(60);
  std::iota(train.begin(), train.end(), std::size_t{0});
  std::iota(test.begin(), test.end(), std::size_t{60});
  forest::ForestConfig cfg;
  cfg.n_trees = 10;
  cfg.bootstrap = false;
  cfg.tree.mtry = cart::Mtry::all();
  cfg.tree.max_depth = 3;
  const std::size_t grid[] = {6};
  const auto curve = tree_diagnostics(ds, train, test, grid, cfg);
  ASSERT_EQ(curve.records.size(), 1u);
  EXPECT_NEAR(curve.records[0].tree_correlation, 1.0, 1e-12);
  EXPECT_NEAR(curve.records[0].tree_mse, curve.records[0].forest_mse, 1e-12);
}

TEST(Diagnostics, FullSetRowEqualsForest) {
  const auto ds = sparse(100, 5, 2);
  std::vector<std::size_t> train(50), test(50);
  std::iota(train.begin(), train.end(), std::size_t{0});
  std::iota(test.begin(), test.end(), std::size_t{50});
  forest::ForestConfig cfg;
  cfg.n_trees = 20;
  cfg.seed = 4;
  const std::size_t grid[] = {2, 5};
  const auto curve = tree_diagnostics(ds, train, test, grid, cfg);
  ASSERT_EQ(curve.records.size(), 2u);
  const auto rf = forest::fit_forest(ds.select_rows(train), cfg);
  const auto held = ds.select_rows(test);
  const auto d = error_diagnostics(forest::tree_predictions(rf, held.features), held.response);
  EXPECT_EQ(curve.records[1].s_prime, 5u);
  EXPECT_EQ(curve.records[1].tree_mse, d.tree_mse);
  EXPECT_EQ(curve.records[1].tree_correlation, d.tree_correlation);
}

TEST(Diagnostics, Errors) {
  const auto ds = sparse(40, 4, 3);
  const std::vector<std::size_t> train = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}, overlap = {9, 10}, empty;
  const std::size_t grid[] = {2};
  forest::ForestConfig cfg;
  cfg.n_trees = 2;
  EXPECT_THROW(tree_diagnostics(ds, train, overlap, grid, cfg), std::invalid_argument);
  EXPECT_THROW(tree_diagnostics(ds, train, empty, grid, cfg), std::invalid_argument);
  const std::vector<std::size_t> test = {20, 21};
  EXPECT_THROW(tree_diagnostics(ds, train, test, std::span<const std::size_t>{}, cfg), std::invalid_argument);
}

TEST(Forecast, FullTargetingEqualsRf) {
  const auto ds = sparse(60, 4, 5);
  const auto plan = data::expanding_windows(ds.n(), 40, 1);
  forest::ForestConfig cfg;
  cfg.n_trees = 10;
  cfg.seed = 9;
  const auto r = run_forecast_experiment(ds, plan, {Method::rf(), Method::trf(4)}, cfg);
  EXPECT_EQ(r.window_count(), plan.windows.size());
  EXPECT_EQ(r.squared_errors("rf"), r.squared_errors("trf:4"));
  EXPECT_EQ(mse_ratio(r, "trf:4", "rf"), 1.0);
}

TEST(Forecast, DeterministicAcrossThreadCounts) {
  const auto ds = sparse(50, 6, 6);
  const auto plan = data::expanding_windows(ds.n(), 35, 2);
  forest::ForestConfig cfg;
  cfg.n_trees = 8;
  cfg.seed = 1;
  cfg.threads = 1;
  const auto a = run_forecast_experiment(ds, plan, {Method::rf(), Method::trf(2)}, cfg);
  cfg.threads = 3;
  const auto b = run_forecast_experiment(ds, plan, {Method::rf(), Method::trf(2)}, cfg);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) EXPECT_EQ(a.records[i].forecast, b.records[i].forecast);
  std::ostringstream sa, sb;
  write_report_csv(sa, a);
  write_report_csv(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(Forecast, SingleWindow) {
  const auto ds = sparse(30, 3, 7);
  data::WindowPlan plan;
  plan.initial_length = 29;
  plan.horizon = 1;
  plan.windows = {{29, 30}};
  forest::ForestConfig cfg;
  cfg.n_trees = 5;
  const auto r = run_forecast_experiment(ds, plan, {Method::rf(), Method::trf(1), Method::trf(2)}, cfg);
  ASSERT_EQ(r.records.size(), 3u);
  for (const auto& rec : r.records) {
    EXPECT_EQ(rec.target_time, 30u);
    EXPECT_EQ(rec.actual, ds.response[29]);
    EXPECT_NEAR(rec.squared_error, std::pow(rec.actual - rec.forecast, 2), 1e-15);
  }
  EXPECT_EQ(r.records[1].s_prime, 1u);
}

TEST(Forecast, InfeasibleWindowThrows) {
  const auto ds = sparse(30, 3, 8);
  data::WindowPlan plan;
  plan.horizon = 1;
  plan.windows = {{30, 31}};
  EXPECT_THROW(run_forecast_experiment(ds, plan, {Method::rf()}, forest::ForestConfig{}), std::invalid_argument);
}

TEST(Holdout, RfAndFullTrfAgree) {
  const auto train = sparse(80, 5, 9);
  const auto test = sparse(40, 5, 10);
  forest::ForestConfig cfg;
  cfg.n_trees = 12;
  cfg.seed = 2;
  const auto res = evaluate_holdout(train, test, {Method::rf(), Method::trf(5), Method::trf(3)}, cfg);
  ASSERT_EQ(res.size(), 3u);
  EXPECT_EQ(res[0].predictions, res[1].predictions);
  EXPECT_EQ(res[0].mse, res[1].mse);
  double mse = 0.0;
  for (std::size_t i = 0; i < 40; ++i) mse += std::pow(test.response[i] - res[2].predictions[i], 2) / 40.0;
  EXPECT_NEAR(res[2].mse, mse, 1e-12);
}

TEST(Spearman, Ranks) {
  const std::vector<double> x = {1, 2, 3, 4, 5};
  EXPECT_NEAR(spearman(x, std::vector<double>{10, 20, 30, 40, 50}), 1.0, 1e-15);
  EXPECT_NEAR(spearman(x, std::vector<double>{5, 4, 3, 2, 1}), -1.0, 1e-15);
  // Average ranks for ties: y ranks (1.5, 1.5, 3, 4, 5).
  const std::vector<double> y = {7, 7, 8, 9, 10};
  const std::vector<double> ry = {1.5, 1.5, 3, 4, 5};
  double mx = 3, my = 3, sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < 5; ++i) sxy += (x[i] - mx) * (ry[i] - my), sxx += (x[i] - mx) * (x[i] - mx), syy += (ry[i] - my) * (ry[i] - my);
  EXPECT_NEAR(spearman(x, y), sxy / std::sqrt(sxx * syy), 1e-14);
}

TEST(DmJson, Keys) {
  const auto j = to_json(DmResult{1.5, 0.07, 2, 0.3, 0.8});
  for (const char* k : {"statistic", "p_value", "horizon", "mean_differential", "hac_variance"})
    EXPECT_NE(j.find(k), std::string::npos);
}
