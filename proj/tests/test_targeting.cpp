#include <algorithm>
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "trf/rng.hpp"
#include "trf/targeting.hpp"

using namespace trf;
using namespace trf::targeting;

namespace {

data::Dataset linear_dgp(std::size_t n, std::size_t p, std::size_t s, double snr, std::uint64_t seed) {
  Rng rng(seed);
  data::Dataset ds;
  ds.features = Matrix(n, p);
  for (std::size_t j = 0; j < p; ++j) ds.feature_names.push_back("x" + std::to_string(j + 1));
  ds.response.resize(n);
  const double beta = std::sqrt(12.0 / static_cast<double>(s));
  const double sigma = std::sqrt(1.0 / snr);
  for (std::size_t i = 0; i < n; ++i) {
    double f = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      ds.features(i, j) = rng.uniform();
      if (j < s) f += beta * ds.features(i, j);
    }
    ds.response[i] = f + sigma * rng.normal();
  }
  return ds;
}

}  // namespace

TEST(Expansion, NamesParse) {
  EXPECT_EQ(expansion_from_string("none"), Expansion::none);
  EXPECT_EQ(expansion_from_string("powers_23"), Expansion::powers_23);
  EXPECT_EQ(expansion_from_string("powers_23_plus_interactions"), Expansion::powers_23_interactions);
  EXPECT_THROW(expansion_from_string("cubic"), std::invalid_argument);
  for (auto e : {Expansion::none, Expansion::powers_23, Expansion::powers_23_interactions})
    EXPECT_EQ(expansion_from_string(to_string(e)), e);
}

TEST(Expansion, ColumnsAndOrigins) {
  const Matrix X = Matrix::from_rows({{2, 3, 5}, {1, -1, 0.5}});
  const std::vector<std::string> names = {"a", "b", "c"};
  const auto none = expand_features(X, names, Expansion::none);
  EXPECT_EQ(none.features.cols(), 3u);

  const auto pw = expand_features(X, names, Expansion::powers_23);
  ASSERT_EQ(pw.features.cols(), 9u);
  for (std::size_t c = 0; c < 9; ++c) ASSERT_EQ(pw.map.origins[c].size(), 1u);
  // x1^2 and x1^3 of the first predictor appear after the originals.
  const auto find = [&](const std::string& nm) {
    return static_cast<std::size_t>(std::find(pw.map.names.begin(), pw.map.names.end(), nm) - pw.map.names.begin());
  };
  const auto sq = find("a^2"), cu = find("a^3");
  ASSERT_LT(sq, 9u);
  ASSERT_LT(cu, 9u);
  EXPECT_EQ(pw.features(0, sq), 4.0);
  EXPECT_EQ(pw.features(0, cu), 8.0);
  EXPECT_EQ(pw.features(1, find("b^3")), -1.0);

  const auto full = expand_features(X, names, Expansion::powers_23_interactions);
  ASSERT_EQ(full.features.cols(), 12u);
  std::set<std::vector<std::size_t>> pairs;
  for (std::size_t c = 9; c < 12; ++c) {
    ASSERT_EQ(full.map.origins[c].size(), 2u);
    pairs.insert(full.map.origins[c]);
    const auto& o = full.map.origins[c];
    EXPECT_EQ(full.features(0, c), X(0, o[0]) * X(0, o[1]));
  }
  EXPECT_EQ(pairs.size(), 3u);
}

TEST(Expansion, InteractionsDisabledForLargeP) {
  const Matrix X(5, 6);
  std::vector<std::string> names;
  for (int j = 0; j < 6; ++j) names.push_back("v" + std::to_string(j));
  const auto e = expand_features(X, names, Expansion::powers_23_interactions, 5);
  EXPECT_EQ(e.features.cols(), 18u);
  EXPECT_FALSE(e.warnings.empty());
}

TEST(SelectTargets, AllPredictorsShortCircuit) {
  const auto ds = linear_dgp(100, 6, 2, 0.5, 1);
  const auto r = select_targets(ds, 6, Expansion::none);
  EXPECT_EQ(r.selection.indices, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));
  EXPECT_EQ(r.selection.lambda, 0.0);
  EXPECT_EQ(r.selection.names, ds.feature_names);
}

TEST(SelectTargets, RejectsOutOfRange) {
  const auto ds = linear_dgp(50, 4, 1, 0.5, 2);
  EXPECT_THROW(select_targets(ds, 0, Expansion::none), std::invalid_argument);
  EXPECT_THROW(select_targets(ds, 5, Expansion::none), std::invalid_argument);
}

TEST(SelectTargets, ExactSizeAndStrongRecovery) {
  int recovered = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto ds = linear_dgp(1000, 20, 3, 0.9, seed);
    const auto r = select_targets(ds, 3, Expansion::none);
    ASSERT_EQ(r.selection.indices.size(), 3u);
    EXPECT_TRUE(std::is_sorted(r.selection.indices.begin(), r.selection.indices.end()));
    if (r.selection.indices == std::vector<std::size_t>{0, 1, 2}) ++recovered;
  }
  EXPECT_GE(recovered, 19);
}

TEST(SelectTargets, SelectionMatchesLassoAtReportedLambda) {
  const auto ds = linear_dgp(300, 15, 4, 0.3, 7);
  for (std::size_t s : {1u, 2u, 5u, 9u}) {
    const auto r = select_targets(ds, s, Expansion::none);
    ASSERT_EQ(r.selection.indices.size(), s);
    const auto fit = lasso_fit(ds, r.selection.lambda);
    EXPECT_GE(fit.support_size(), s);
    EXPECT_EQ(fit.support_size(), r.selection.lasso_support);
    // Every selected index carries a |coefficient| at least as large as any dropped one.
    double min_kept = INFINITY, max_dropped = 0.0;
    for (std::size_t j = 0; j < 15; ++j) {
      const double a = std::abs(fit.standardized[j]);
      const bool kept = std::count(r.selection.indices.begin(), r.selection.indices.end(), j) > 0;
      if (kept) min_kept = std::min(min_kept, a);
      else max_dropped = std::max(max_dropped, a);
    }
    EXPECT_GE(min_kept, max_dropped);
    EXPECT_GT(min_kept, 0.0);
  }
}

TEST(SelectTargets, RescalingDoesNotChangeSelection) {
  auto ds = linear_dgp(400, 10, 3, 0.5, 3);
  const auto a = select_targets(ds, 4, Expansion::none);
  for (std::size_t i = 0; i < ds.n(); ++i)
    for (std::size_t j = 0; j < ds.p(); ++j) ds.features(i, j) *= static_cast<double>(j + 1) * 3.0;
  const auto b = select_targets(ds, 4, Expansion::none);
  EXPECT_EQ(a.selection.indices, b.selection.indices);
}

TEST(SelectTargets, SquaredTermMapsToOriginal) {
  Rng rng(4);
  data::Dataset ds;
  const std::size_t n = 500, p = 6;
  ds.features = Matrix(n, p);
  for (std::size_t j = 0; j < p; ++j) ds.feature_names.push_back("x" + std::to_string(j + 1));
  ds.response.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) ds.features(i, j) = rng.uniform();
    ds.response[i] = 10.0 * std::pow(ds.features(i, 0) - 0.5, 2) + 0.1 * rng.normal();
  }
  const auto r = select_targets(ds, 1, Expansion::powers_23);
  EXPECT_EQ(r.selection.indices, std::vector<std::size_t>{0});
  EXPECT_EQ(r.map.mode, Expansion::powers_23);
  EXPECT_EQ(r.map.size(), 18u);
}

TEST(SelectTargets, UnreachableSupportWarns) {
  // Two identical columns and one constant: support can reach at most 2.
  data::Dataset ds;
  ds.features = Matrix::from_rows({{1, 1, 3}, {2, 2, 3}, {3, 3, 3}, {4, 4, 3}, {5, 5, 3}});
  ds.feature_names = {"a", "b", "c"};
  ds.response = {1.1, 1.9, 3.2, 3.9, 5.1};
  const auto r = select_targets(ds, 3, Expansion::none);
  EXPECT_EQ(r.selection.indices.size(), 3u);  // s' = p short-circuits
  const auto r2 = select_targets(ds, 2, Expansion::none);
  EXPECT_LE(r2.selection.indices.size(), 2u);
  if (r2.selection.indices.size() < 2) EXPECT_FALSE(r2.selection.warnings.empty());
}

TEST(SelectTargets, JsonHasDocumentedKeys) {
  const auto ds = linear_dgp(200, 5, 2, 0.5, 5);
  const auto r = select_targets(ds, 2, Expansion::none);
  const auto text = to_json(r.selection);
  for (const char* key : {"\"indices\"", "\"names\"", "\"coefficients\"", "\"lambda\"", "\"warnings\""})
    EXPECT_NE(text.find(key), std::string::npos) << key;
}

TEST(FitTrf, SinglePredictorSplitsOnlyOnIt) {
  const auto ds = linear_dgp(300, 8, 1, 1.0, 6);
  forest::ForestConfig cfg;
  cfg.n_trees = 20;
  cfg.seed = 3;
  const auto model = fit_trf(ds, 1, Expansion::none, cfg);
  ASSERT_EQ(model.selection.indices, std::vector<std::size_t>{0});
  EXPECT_EQ(model.forest.n_features(), 1u);
  for (const auto& t : model.forest.trees())
    for (const auto& n : t.nodes())
      if (n.split) EXPECT_EQ(n.split->feature, 0u);
  // Predictions use column 0 of the full vector and ignore the rest.
  std::vector<double> x(8, 0.9), y(8, 0.1);
  x[0] = y[0] = 0.4;
  EXPECT_EQ(model.predict(x), model.predict(y));
}

TEST(FitTrf, FullSetEqualsForest) {
  const auto ds = linear_dgp(150, 5, 2, 0.5, 8);
  forest::ForestConfig cfg;
  cfg.n_trees = 15;
  cfg.seed = 12;
  const auto model = fit_trf(ds, 5, Expansion::none, cfg);
  const auto rf = forest::fit_forest(ds, cfg);
  ASSERT_EQ(model.forest.trees().size(), rf.trees().size());
  for (std::size_t b = 0; b < rf.trees().size(); ++b) EXPECT_EQ(model.forest.trees()[b], rf.trees()[b]);
  const auto a = model.predict(ds.features);
  const auto c = rf.predict(ds.features);
  EXPECT_EQ(a, c);
}
