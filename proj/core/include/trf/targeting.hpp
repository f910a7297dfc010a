#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "trf/datacore.hpp"
#include "trf/forest.hpp"
#include "trf/lasso.hpp"
#include "trf/matrix.hpp"

namespace trf::targeting {

enum class Expansion { none, powers_23, powers_23_interactions };

Expansion expansion_from_string(const std::string& name);
std::string to_string(Expansion mode);

/// Records which original predictors each expanded column was built from.
struct ExpansionMap {
  Expansion mode = Expansion::none;
  std::vector<std::vector<std::size_t>> origins;
  std::vector<std::string> names;

  std::size_t size() const noexcept { return origins.size(); }
};

struct ExpandedDesign {
  Matrix features;
  ExpansionMap map;
  std::vector<std::string> warnings;
};

/// Originals first, then squares and cubes per predictor, then pairwise
/// products x_i * x_j (i < j) when interactions are requested. Interactions
/// fall back to powers only (with a warning) when p exceeds
/// `max_interaction_p`.
ExpandedDesign expand_features(const Matrix& X, std::span<const std::string> names, Expansion mode,
                               std::size_t max_interaction_p = 50);

struct SelectOptions {
  LassoOptions lasso;
  std::size_t grid_size = 100;
  double grid_ratio = 1e-4;  // smallest lambda relative to lambda_max
  std::size_t max_interaction_p = 50;
};

struct TargetSelection {
  std::vector<std::size_t> indices;  // ascending original predictor indices
  std::vector<std::string> names;
  std::vector<double> scores;  // aligned with indices
  std::size_t requested = 0;
  std::size_t lasso_support = 0;  // distinct originals before truncation
  double lambda = 0.0;
  Expansion expansion = Expansion::none;
  std::vector<std::string> warnings;
};

struct SelectionResult {
  TargetSelection selection;
  ExpansionMap map;
};

/// Chooses s_prime original predictors with the LASSO. Lambda is taken from
/// a log grid between lambda_max and lambda_max * grid_ratio: the largest
/// grid lambda whose support (in distinct original predictors) reaches
/// s_prime, found by bisection with a linear-scan fallback for non-monotone
/// paths. A larger support is truncated to the s_prime originals with the
/// largest standardized |coefficient|.
SelectionResult select_targets(const data::Dataset& dataset, std::size_t s_prime, Expansion mode,
                               const SelectOptions& options = {});

/// A forest fitted on the selected original columns only.
struct TrfModel {
  TargetSelection selection;
  forest::ForestModel forest;

  /// `x` holds all p original predictors.
  double predict(std::span<const double> x) const;
  std::vector<double> predict(const Matrix& X) const;
};

TrfModel fit_trf(const data::Dataset& dataset, std::size_t s_prime, Expansion mode,
                 const forest::ForestConfig& forest_config, const SelectOptions& options = {});

std::string to_json(const TargetSelection& selection, int indent = -1);

}  // namespace trf::targeting
