#include "trf/cart.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

#include "trf/rng.hpp"

namespace trf::cart {
namespace {

struct Candidate {
  double x;
  double y;
  std::size_t row;
};

double node_mean(const data::Dataset& ds, std::span<const std::size_t> rows) {
  double s = 0.0;
  for (auto r : rows) s += ds.response[r];
  return s / static_cast<double>(rows.size());
}

bool is_pure(const data::Dataset& ds, std::span<const std::size_t> rows) {
  const double first = ds.response[rows.front()];
  return std::ranges::all_of(rows, [&](std::size_t r) { return ds.response[r] == first; });
}

double sse(std::span<const double> ys) {
  if (ys.empty()) return 0.0;
  double mean = 0.0;
  for (double y : ys) mean += y;
  mean /= static_cast<double>(ys.size());
  double s = 0.0;
  for (double y : ys) s += (y - mean) * (y - mean);
  return s;
}

// Scans one feature; updates `best` only on a strictly larger decrease, which
// together with ascending feature order and ascending thresholds realizes the
// (lower index, smaller threshold) tie-break.
void scan_feature(const data::Dataset& ds, std::span<const std::size_t> rows, std::size_t feature,
                  double mean, std::size_t n_total, std::size_t min_leaf, std::vector<Candidate>& buf,
                  std::optional<SplitSpec>& best) {
  const auto col = ds.features.col(feature);
  buf.clear();
  for (auto r : rows) buf.push_back({col[r], ds.response[r] - mean, r});
  std::ranges::sort(buf, [](const Candidate& a, const Candidate& b) {
    return a.x < b.x || (a.x == b.x && a.row < b.row);
  });

  const std::size_t n = buf.size();
  double total = 0.0;
  for (const auto& c : buf) total += c.y;
  const double base = total * total / static_cast<double>(n);

  double left_sum = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    left_sum += buf[k].y;
    if (buf[k].x == buf[k + 1].x) continue;
    const std::size_t n_left = k + 1;
    const std::size_t n_right = n - n_left;
    if (n_left < min_leaf) continue;
    if (n_right < min_leaf) break;
    const double right_sum = total - left_sum;
    double dec = left_sum * left_sum / static_cast<double>(n_left) +
                 right_sum * right_sum / static_cast<double>(n_right) - base;
    dec = std::max(0.0, dec) / static_cast<double>(n_total);
    if (!best || dec > best->impurity_decrease) best = SplitSpec{feature, buf[k].x, dec};
  }
}

class Grower {
 public:
  Grower(const data::Dataset& ds, const TreeConfig& cfg, std::uint64_t seed, std::size_t n_total)
      : ds_(ds), cfg_(cfg), rng_(seed), n_total_(n_total), mtry_(cfg.mtry.resolve(ds.p())) {}

  std::size_t make_node(std::span<const std::size_t> rows, std::size_t parent, std::size_t depth) {
    Node node;
    node.parent = parent;
    node.depth = depth;
    node.count = rows.size();
    node.mean = node_mean(ds_, rows);
    nodes_.push_back(node);
    return nodes_.size() - 1;
  }

  std::optional<SplitSpec> evaluate(std::size_t node, std::span<const std::size_t> rows) {
    if (cfg_.max_depth && nodes_[node].depth >= *cfg_.max_depth) return std::nullopt;
    if (rows.size() < 2 * cfg_.min_samples_leaf) return std::nullopt;
    if (is_pure(ds_, rows)) return std::nullopt;
    auto features = rng_.sample_without_replacement(ds_.p(), mtry_);
    std::ranges::sort(features);
    std::optional<SplitSpec> best;
    const double mean = nodes_[node].mean;
    for (auto f : features) scan_feature(ds_, rows, f, mean, n_total_, cfg_.min_samples_leaf, buf_, best);
    if (best && best->impurity_decrease <= 0.0) best.reset();
    return best;
  }

  std::pair<std::vector<std::size_t>, std::vector<std::size_t>> partition(
      std::span<const std::size_t> rows, const SplitSpec& split) const {
    std::vector<std::size_t> left, right;
    const auto col = ds_.features.col(split.feature);
    for (auto r : rows) (col[r] <= split.threshold ? left : right).push_back(r);
    return {std::move(left), std::move(right)};
  }

  TreeModel grow_depth_first(std::vector<std::size_t> root_rows) {
    struct Pending {
      std::size_t node;
      std::vector<std::size_t> rows;
    };
    std::vector<Pending> stack;
    stack.push_back({make_node(root_rows, Node::npos, 0), std::move(root_rows)});
    std::size_t leaves = 1;
    while (!stack.empty()) {
      Pending cur = std::move(stack.back());
      stack.pop_back();
      if (cfg_.max_leaf_nodes && leaves + 1 > *cfg_.max_leaf_nodes) continue;
      auto split = evaluate(cur.node, cur.rows);
      if (!split) continue;
      auto [l, r] = partition(cur.rows, *split);
      const std::size_t depth = nodes_[cur.node].depth + 1;
      const std::size_t li = make_node(l, cur.node, depth);
      const std::size_t ri = make_node(r, cur.node, depth);
      nodes_[cur.node].split = split;
      nodes_[cur.node].left = li;
      nodes_[cur.node].right = ri;
      ++leaves;
      stack.push_back({ri, std::move(r)});
      stack.push_back({li, std::move(l)});
    }
    return TreeModel(std::move(nodes_), ds_.p());
  }

  TreeModel grow_best_first(std::vector<std::size_t> root_rows) {
    struct Frontier {
      double decrease;
      std::size_t node;
      SplitSpec split;
      std::vector<std::size_t> rows;
    };
    // Max-heap on decrease; among equal decreases the earliest-created node wins.
    auto worse = [](const Frontier& a, const Frontier& b) {
      return a.decrease < b.decrease || (a.decrease == b.decrease && a.node > b.node);
    };
    std::priority_queue<Frontier, std::vector<Frontier>, decltype(worse)> frontier(worse);

    auto consider = [&](std::size_t node, std::vector<std::size_t> rows) {
      if (auto split = evaluate(node, rows)) frontier.push({split->impurity_decrease, node, *split, std::move(rows)});
    };
    const std::size_t root = make_node(root_rows, Node::npos, 0);
    consider(root, std::move(root_rows));

    std::size_t leaves = 1;
    while (!frontier.empty()) {
      if (cfg_.max_leaf_nodes && leaves >= *cfg_.max_leaf_nodes) break;
      Frontier cur = frontier.top();
      frontier.pop();
      auto [l, r] = partition(cur.rows, cur.split);
      const std::size_t depth = nodes_[cur.node].depth + 1;
      const std::size_t li = make_node(l, cur.node, depth);
      const std::size_t ri = make_node(r, cur.node, depth);
      nodes_[cur.node].split = cur.split;
      nodes_[cur.node].left = li;
      nodes_[cur.node].right = ri;
      ++leaves;
      consider(li, std::move(l));
      consider(ri, std::move(r));
    }
    return TreeModel(std::move(nodes_), ds_.p());
  }

 private:
  const data::Dataset& ds_;
  const TreeConfig& cfg_;
  Rng rng_;
  std::size_t n_total_;
  std::size_t mtry_;
  std::vector<Node> nodes_;
  std::vector<Candidate> buf_;
};

}  // namespace

std::size_t Mtry::resolve(std::size_t available) const {
  if (available == 0) throw std::invalid_argument("Mtry: no predictors available");
  if (count_ > 0) return std::min(count_, available);
  if (!(fraction_ > 0.0 && fraction_ <= 1.0)) throw std::invalid_argument("Mtry: fraction must be in (0, 1]");
  const auto m = static_cast<std::size_t>(std::ceil(fraction_ * static_cast<double>(available) - 1e-9));
  return std::clamp<std::size_t>(m, 1, available);
}

TreeModel::TreeModel(std::vector<Node> nodes, std::size_t n_features)
    : nodes_(std::move(nodes)), n_features_(n_features) {
  for (const auto& node : nodes_) {
    if (node.is_leaf()) {
      ++leaf_count_;
      depth_ = std::max(depth_, node.depth);
    }
  }
}

std::size_t TreeModel::leaf_index(std::span<const double> x) const {
  if (x.size() != n_features_) throw std::invalid_argument("TreeModel: feature dimension mismatch");
  if (nodes_.empty()) throw std::logic_error("TreeModel: empty tree");
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& s = *nodes_[i].split;
    i = x[s.feature] <= s.threshold ? nodes_[i].left : nodes_[i].right;
  }
  return i;
}

double TreeModel::predict(std::span<const double> x) const { return nodes_[leaf_index(x)].mean; }

double predict_tree(const TreeModel& tree, std::span<const double> x) { return tree.predict(x); }

std::optional<double> impurity_decrease(const data::Dataset& dataset, std::span<const std::size_t> rows,
                                        std::size_t feature, double tau, std::size_t n_total,
                                        std::size_t min_samples_leaf) {
  if (rows.empty()) throw std::invalid_argument("impurity_decrease: empty node");
  if (feature >= dataset.p()) throw std::out_of_range("impurity_decrease: feature index");
  std::vector<double> all, left, right;
  const auto col = dataset.features.col(feature);
  for (auto r : rows) {
    all.push_back(dataset.response[r]);
    (col[r] <= tau ? left : right).push_back(dataset.response[r]);
  }
  const std::size_t min_leaf = std::max<std::size_t>(1, min_samples_leaf);
  if (left.size() < min_leaf || right.size() < min_leaf) return std::nullopt;
  const double dec = sse(all) - sse(left) - sse(right);
  return std::max(0.0, dec) / static_cast<double>(n_total);
}

std::optional<SplitSpec> best_split(const data::Dataset& dataset, std::span<const std::size_t> rows,
                                    std::span<const std::size_t> features, std::size_t n_total,
                                    std::size_t min_samples_leaf) {
  if (rows.empty()) throw std::invalid_argument("best_split: empty node");
  if (features.empty()) throw std::invalid_argument("best_split: no feasible directions");
  if (is_pure(dataset, rows)) return std::nullopt;
  std::vector<std::size_t> sorted(features.begin(), features.end());
  std::ranges::sort(sorted);
  const double mean = node_mean(dataset, rows);
  std::vector<Candidate> buf;
  std::optional<SplitSpec> best;
  for (auto f : sorted) {
    if (f >= dataset.p()) throw std::out_of_range("best_split: feature index");
    scan_feature(dataset, rows, f, mean, n_total, std::max<std::size_t>(1, min_samples_leaf), buf, best);
  }
  if (best && best->impurity_decrease <= 0.0) best.reset();
  return best;
}

TreeModel grow_tree(const data::Dataset& dataset, std::span<const std::size_t> rows,
                    const TreeConfig& config, std::uint64_t seed) {
  if (rows.empty()) throw std::invalid_argument("grow_tree: empty rows");
  if (config.min_samples_leaf < 1) throw std::invalid_argument("grow_tree: min_samples_leaf must be >= 1");
  if (config.max_leaf_nodes && *config.max_leaf_nodes < 1) {
    throw std::invalid_argument("grow_tree: max_leaf_nodes must be >= 1");
  }
  Grower grower(dataset, config, seed, rows.size());
  std::vector<std::size_t> root(rows.begin(), rows.end());
  return config.growth == Growth::best_first ? grower.grow_best_first(std::move(root))
                                             : grower.grow_depth_first(std::move(root));
}

}  // namespace trf::cart
