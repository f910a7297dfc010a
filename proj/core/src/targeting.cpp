#include "trf/targeting.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

namespace trf::targeting {

Expansion expansion_from_string(const std::string& name) {
  if (name == "none") return Expansion::none;
  if (name == "powers_23" || name == "powers") return Expansion::powers_23;
  if (name == "powers_23_plus_interactions" || name == "powers_23_interactions" || name == "interactions")
    return Expansion::powers_23_interactions;
  throw std::invalid_argument("unknown expansion mode: " + name);
}

std::string to_string(Expansion mode) {
  switch (mode) {
    case Expansion::none: return "none";
    case Expansion::powers_23: return "powers_23";
    case Expansion::powers_23_interactions: return "powers_23_plus_interactions";
  }
  return "none";
}

ExpandedDesign expand_features(const Matrix& X, std::span<const std::string> names, Expansion mode,
                               std::size_t max_interaction_p) {
  const std::size_t p = X.cols();
  if (names.size() != p) throw std::invalid_argument("expand_features: names do not match columns");

  ExpandedDesign out;
  if (mode == Expansion::powers_23_interactions && p > max_interaction_p) {
    out.warnings.push_back("interactions disabled for p=" + std::to_string(p) + " > " +
                           std::to_string(max_interaction_p) + "; using powers_23");
    mode = Expansion::powers_23;
  }
  out.map.mode = mode;

  Matrix& Z = out.features;
  auto add = [&](std::span<const double> values, std::vector<std::size_t> origins, std::string name) {
    Z.append_col(values);
    out.map.origins.push_back(std::move(origins));
    out.map.names.push_back(std::move(name));
  };

  for (std::size_t j = 0; j < p; ++j) add(X.col(j), {j}, names[j]);
  if (mode == Expansion::none) return out;

  std::vector<double> buf(X.rows());
  for (std::size_t j = 0; j < p; ++j) {
    const auto x = X.col(j);
    for (std::size_t i = 0; i < x.size(); ++i) buf[i] = x[i] * x[i];
    add(buf, {j}, names[j] + "^2");
    for (std::size_t i = 0; i < x.size(); ++i) buf[i] = x[i] * x[i] * x[i];
    add(buf, {j}, names[j] + "^3");
  }
  if (mode == Expansion::powers_23_interactions) {
    for (std::size_t a = 0; a < p; ++a) {
      for (std::size_t b = a + 1; b < p; ++b) {
        const auto xa = X.col(a);
        const auto xb = X.col(b);
        for (std::size_t i = 0; i < xa.size(); ++i) buf[i] = xa[i] * xb[i];
        add(buf, {a, b}, names[a] + "*" + names[b]);
      }
    }
  }
  return out;
}

namespace {

/// Per original predictor, the largest |standardized coefficient| over the
/// expanded columns it enters; zero when none is active.
std::vector<double> original_scores(const LassoFit& fit, const ExpansionMap& map, std::size_t p) {
  std::vector<double> score(p, 0.0);
  for (std::size_t c = 0; c < map.size(); ++c) {
    const double b = std::abs(fit.standardized[c]);
    if (b == 0.0) continue;
    for (auto j : map.origins[c]) score[j] = std::max(score[j], b);
  }
  return score;
}

std::size_t support_of(const std::vector<double>& score) {
  return static_cast<std::size_t>(std::ranges::count_if(score, [](double s) { return s > 0.0; }));
}

}  // namespace

SelectionResult select_targets(const data::Dataset& dataset, std::size_t s_prime, Expansion mode,
                               const SelectOptions& options) {
  const std::size_t p = dataset.p();
  if (s_prime < 1 || s_prime > p)
    throw std::invalid_argument("select_targets: s' must lie in [1, p], got " + std::to_string(s_prime));
  if (dataset.n() < 2) throw std::invalid_argument("select_targets: need at least two observations");
  if (options.grid_size < 2) throw std::invalid_argument("select_targets: grid needs at least two points");

  auto expanded = expand_features(dataset.features, dataset.feature_names, mode, options.max_interaction_p);
  SelectionResult result;
  result.map = expanded.map;
  TargetSelection& sel = result.selection;
  sel.requested = s_prime;
  sel.expansion = expanded.map.mode;
  sel.warnings = expanded.warnings;

  if (s_prime == p) {
    sel.indices.resize(p);
    std::iota(sel.indices.begin(), sel.indices.end(), std::size_t{0});
    sel.scores.assign(p, 0.0);
    sel.lasso_support = p;
    sel.lambda = 0.0;
    for (auto j : sel.indices) sel.names.push_back(dataset.feature_names[j]);
    return result;
  }

  const auto design = StandardizedDesign::make(expanded.features, dataset.response);
  const double lmax = lambda_max(design);
  const std::size_t G = options.grid_size;
  auto grid_lambda = [&](std::size_t k) {
    return lmax * std::pow(options.grid_ratio, static_cast<double>(k) / static_cast<double>(G - 1));
  };

  std::map<std::size_t, LassoFit> fits;
  std::map<std::size_t, std::vector<double>> scores;
  auto evaluate = [&](std::size_t k) -> std::size_t {
    if (auto it = scores.find(k); it != scores.end()) return support_of(it->second);
    // Warm start from the nearest already-fitted grid point.
    std::span<const double> warm;
    std::size_t best_gap = G;
    for (const auto& [j, f] : fits) {
      const std::size_t gap = j > k ? j - k : k - j;
      if (gap < best_gap) {
        best_gap = gap;
        warm = f.standardized;
      }
    }
    auto fit = lasso_fit(design, grid_lambda(k), options.lasso, warm);
    auto sc = original_scores(fit, expanded.map, p);
    const std::size_t s = support_of(sc);
    fits.emplace(k, std::move(fit));
    scores.emplace(k, std::move(sc));
    return s;
  };

  std::size_t chosen = G - 1;
  if (lmax == 0.0) {
    sel.warnings.push_back("response is constant or all predictors are constant; nothing to select");
    evaluate(chosen);
  } else if (evaluate(G - 1) < s_prime) {
    // The smallest penalty does not reach s'; keep the grid point with the
    // largest support seen on a full scan.
    std::size_t best = 0;
    for (std::size_t k = 0; k < G; ++k) {
      if (evaluate(k) > evaluate(best)) best = k;
    }
    chosen = best;
    sel.warnings.push_back("support never reaches s'=" + std::to_string(s_prime) + " on the lambda grid; largest is " +
                           std::to_string(evaluate(best)));
  } else {
    std::size_t lo = 0;
    std::size_t hi = G - 1;
    evaluate(lo);
    while (hi - lo > 1) {
      const std::size_t mid = lo + (hi - lo) / 2;
      if (evaluate(mid) < s_prime) lo = mid;
      else hi = mid;
    }
    chosen = hi;
    if (evaluate(hi) != s_prime) {
      // A non-monotone path may hit s' exactly elsewhere on the grid.
      for (std::size_t k = 0; k < G; ++k) {
        if (evaluate(k) == s_prime) {
          chosen = k;
          break;
        }
      }
    }
  }

  const auto& score = scores.at(chosen);
  sel.lambda = fits.at(chosen).lambda;
  sel.lasso_support = support_of(score);

  std::vector<std::size_t> order;
  for (std::size_t j = 0; j < p; ++j) {
    if (score[j] > 0.0) order.push_back(j);
  }
  std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  if (order.size() > s_prime) order.resize(s_prime);
  std::ranges::sort(order);
  if (order.empty()) {
    sel.warnings.push_back("LASSO selected no predictor; falling back to predictor 0");
    order.push_back(0);
  }

  sel.indices = order;
  for (auto j : order) {
    sel.names.push_back(dataset.feature_names[j]);
    sel.scores.push_back(score[j]);
  }
  return result;
}

double TrfModel::predict(std::span<const double> x) const {
  std::vector<double> sub;
  sub.reserve(selection.indices.size());
  for (auto j : selection.indices) {
    if (j >= x.size()) throw std::invalid_argument("TrfModel::predict: feature vector too short");
    sub.push_back(x[j]);
  }
  return forest.predict(sub);
}

std::vector<double> TrfModel::predict(const Matrix& X) const {
  return forest.predict(X.select_cols(selection.indices));
}

TrfModel fit_trf(const data::Dataset& dataset, std::size_t s_prime, Expansion mode,
                 const forest::ForestConfig& forest_config, const SelectOptions& options) {
  TrfModel model;
  model.selection = select_targets(dataset, s_prime, mode, options).selection;
  model.forest = forest::fit_forest(dataset.select_cols(model.selection.indices), forest_config);
  return model;
}

}  // namespace trf::targeting
