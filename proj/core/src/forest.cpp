#include "trf/forest.hpp"

#include <numeric>
#include <stdexcept>

#include "trf/parallel.hpp"
#include "trf/rng.hpp"

namespace trf::forest {

std::uint64_t tree_seed(std::uint64_t master, std::size_t b) noexcept { return derive_seed(master, b); }

ForestModel::ForestModel(std::vector<cart::TreeModel> trees, ForestConfig config,
                         std::vector<std::string> feature_names)
    : trees_(std::move(trees)), config_(std::move(config)), feature_names_(std::move(feature_names)) {
  if (trees_.empty()) throw std::invalid_argument("ForestModel: no trees");
  for (const auto& t : trees_) {
    if (t.n_features() != feature_names_.size()) {
      throw std::invalid_argument("ForestModel: trees disagree on feature dimension");
    }
  }
}

double ForestModel::predict(std::span<const double> x) const {
  if (x.size() != n_features()) throw std::invalid_argument("ForestModel: feature dimension mismatch");
  double sum = 0.0;
  for (const auto& t : trees_) sum += t.predict(x);
  return sum / static_cast<double>(trees_.size());
}

std::vector<double> ForestModel::predict(const Matrix& X) const {
  std::vector<double> out(X.rows());
  for (std::size_t r = 0; r < X.rows(); ++r) out[r] = predict(X.row(r));
  return out;
}

ForestModel fit_forest_with_seeds(const data::Dataset& dataset, const ForestConfig& config,
                                  std::span<const std::uint64_t> seeds) {
  if (dataset.n() == 0) throw std::invalid_argument("fit_forest: empty dataset");
  if (seeds.empty()) throw std::invalid_argument("fit_forest: need at least one tree");
  const std::size_t n = dataset.n();
  std::vector<cart::TreeModel> trees(seeds.size());
  parallel_for(seeds.size(), config.threads, [&](std::size_t b) {
    Rng rng(derive_seed(seeds[b], 0));
    std::vector<std::size_t> rows(n);
    if (config.bootstrap) {
      for (auto& r : rows) r = static_cast<std::size_t>(rng.below(n));
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    trees[b] = cart::grow_tree(dataset, rows, config.tree, derive_seed(seeds[b], 1));
  });
  ForestConfig stored = config;
  stored.n_trees = seeds.size();
  return ForestModel(std::move(trees), stored, dataset.feature_names);
}

ForestModel fit_forest(const data::Dataset& dataset, const ForestConfig& config) {
  if (config.n_trees < 1) throw std::invalid_argument("fit_forest: n_trees must be >= 1");
  std::vector<std::uint64_t> seeds(config.n_trees);
  for (std::size_t b = 0; b < seeds.size(); ++b) seeds[b] = tree_seed(config.seed, b);
  return fit_forest_with_seeds(dataset, config, seeds);
}

double predict_forest(const ForestModel& forest, std::span<const double> x) { return forest.predict(x); }

Matrix tree_predictions(const ForestModel& forest, const Matrix& X) {
  if (X.cols() != forest.n_features()) throw std::invalid_argument("tree_predictions: feature dimension mismatch");
  Matrix out(X.rows(), forest.trees().size());
  for (std::size_t r = 0; r < X.rows(); ++r) {
    const auto x = X.row(r);
    for (std::size_t b = 0; b < forest.trees().size(); ++b) out(r, b) = forest.trees()[b].predict(x);
  }
  return out;
}

}  // namespace trf::forest
