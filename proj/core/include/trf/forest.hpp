#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "trf/cart.hpp"
#include "trf/matrix.hpp"

namespace trf::forest {

struct ForestConfig {
  std::size_t n_trees = 500;
  bool bootstrap = true;  // n draws with replacement per tree
  cart::TreeConfig tree;
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0: hardware concurrency; does not affect results
};

/// Seed of tree b's stream. Only (master seed, b) enter, so trees can be
/// grown in any order or in parallel with identical results.
std::uint64_t tree_seed(std::uint64_t master, std::size_t b) noexcept;

class ForestModel {
 public:
  ForestModel() = default;
  ForestModel(std::vector<cart::TreeModel> trees, ForestConfig config, std::vector<std::string> feature_names);

  /// Mean of the tree predictions.
  double predict(std::span<const double> x) const;
  std::vector<double> predict(const Matrix& X) const;

  const std::vector<cart::TreeModel>& trees() const noexcept { return trees_; }
  const ForestConfig& config() const noexcept { return config_; }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  std::size_t n_features() const noexcept { return feature_names_.size(); }

 private:
  std::vector<cart::TreeModel> trees_;
  ForestConfig config_;
  std::vector<std::string> feature_names_;
};

ForestModel fit_forest(const data::Dataset& dataset, const ForestConfig& config);

/// Same as fit_forest but with caller-chosen per-tree seeds; the tree count
/// is seeds.size().
ForestModel fit_forest_with_seeds(const data::Dataset& dataset, const ForestConfig& config,
                                  std::span<const std::uint64_t> seeds);

double predict_forest(const ForestModel& forest, std::span<const double> x);

/// Rows are observations, column b holds tree b's predictions.
Matrix tree_predictions(const ForestModel& forest, const Matrix& X);

std::string to_json(const ForestModel& forest, int indent = -1);
ForestModel forest_from_json(const std::string& text);

}  // namespace trf::forest
