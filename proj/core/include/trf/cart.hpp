#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "trf/datacore.hpp"

namespace trf::cart {

/// Size of the per-node candidate direction set M_try, either fixed or as a
/// fraction of the available predictors (rounded up, at least 1).
class Mtry {
 public:
  static Mtry count(std::size_t m) { return Mtry(m, 0.0); }
  static Mtry fraction(double f) { return Mtry(0, f); }
  /// ceil(a / 3), the randomForest default.
  static Mtry third() { return Mtry(0, 1.0 / 3.0); }
  static Mtry all() { return Mtry(0, 1.0); }

  std::size_t resolve(std::size_t available) const;
  bool is_fraction() const noexcept { return count_ == 0; }
  std::size_t fixed_count() const noexcept { return count_; }
  double fraction_value() const noexcept { return fraction_; }

 private:
  Mtry(std::size_t c, double f) : count_(c), fraction_(f) {}
  std::size_t count_;
  double fraction_;
};

enum class Growth { depth_first, best_first };

struct TreeConfig {
  Mtry mtry = Mtry::third();
  std::optional<std::size_t> max_depth;       // nullopt: unlimited
  std::optional<std::size_t> max_leaf_nodes;  // nullopt: unlimited
  std::size_t min_samples_leaf = 1;
  Growth growth = Growth::depth_first;
};

struct SplitSpec {
  std::size_t feature = 0;
  double threshold = 0.0;  // x <= threshold goes left
  double impurity_decrease = 0.0;

  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

struct Node {
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  std::optional<SplitSpec> split;  // empty for leaves
  std::size_t left = npos;
  std::size_t right = npos;
  std::size_t parent = npos;
  std::size_t depth = 0;
  std::size_t count = 0;  // training rows routed here (with bootstrap multiplicity)
  double mean = 0.0;      // mean training response of those rows

  bool is_leaf() const noexcept { return !split.has_value(); }
  friend bool operator==(const Node&, const Node&) = default;
};

/// Immutable regression tree. Node 0 is the root.
class TreeModel {
 public:
  TreeModel() = default;
  TreeModel(std::vector<Node> nodes, std::size_t n_features);

  double predict(std::span<const double> x) const;
  /// Index of the leaf that x is routed to.
  std::size_t leaf_index(std::span<const double> x) const;

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  std::size_t n_features() const noexcept { return n_features_; }
  std::size_t depth() const noexcept { return depth_; }
  std::size_t leaf_count() const noexcept { return leaf_count_; }

  friend bool operator==(const TreeModel& a, const TreeModel& b) {
    return a.n_features_ == b.n_features_ && a.nodes_ == b.nodes_;
  }

 private:
  std::vector<Node> nodes_;
  std::size_t n_features_ = 0;
  std::size_t depth_ = 0;
  std::size_t leaf_count_ = 0;
};

/// CART impurity decrease of splitting `rows` on feature `feature` at `tau`:
///   (SSE(node) - SSE(left) - SSE(right)) / n_total
/// with left = {x <= tau}. Returns nullopt when either side would hold fewer
/// than `min_samples_leaf` rows. Throws if `rows` is empty.
std::optional<double> impurity_decrease(const data::Dataset& dataset, std::span<const std::size_t> rows,
                                        std::size_t feature, double tau, std::size_t n_total,
                                        std::size_t min_samples_leaf = 1);

/// Best split over `features` and thresholds at observed in-node values.
/// Ties go to the lower feature index, then the smaller threshold. Returns
/// nullopt if nothing is feasible or the best decrease is zero.
std::optional<SplitSpec> best_split(const data::Dataset& dataset, std::span<const std::size_t> rows,
                                    std::span<const std::size_t> features, std::size_t n_total,
                                    std::size_t min_samples_leaf = 1);

/// Grows one tree on `rows` (duplicates allowed, e.g. a bootstrap sample).
/// A fresh M_try is drawn for every node that is considered for splitting.
TreeModel grow_tree(const data::Dataset& dataset, std::span<const std::size_t> rows,
                    const TreeConfig& config, std::uint64_t seed);

double predict_tree(const TreeModel& tree, std::span<const double> x);

std::string to_json(const TreeModel& tree, int indent = -1);
TreeModel tree_from_json(const std::string& text);

}  // namespace trf::cart
