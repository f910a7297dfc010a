#include <stdexcept>

#include "json.hpp"

#include "trf/cart.hpp"
#include "trf/evallab.hpp"
#include "trf/forest.hpp"
#include "trf/targeting.hpp"

using nlohmann::json;

namespace trf {
namespace {

constexpr int kFormatVersion = 1;

json node_to_json(const cart::Node& n) {
  json j{{"depth", n.depth}, {"count", n.count}, {"mean", n.mean}};
  j["parent"] = n.parent == cart::Node::npos ? json(nullptr) : json(n.parent);
  if (n.split) {
    j["feature"] = n.split->feature;
    j["threshold"] = n.split->threshold;
    j["impurity_decrease"] = n.split->impurity_decrease;
    j["left"] = n.left;
    j["right"] = n.right;
  }
  return j;
}

cart::Node node_from_json(const json& j) {
  cart::Node n;
  n.depth = j.at("depth").get<std::size_t>();
  n.count = j.at("count").get<std::size_t>();
  n.mean = j.at("mean").get<double>();
  if (!j.at("parent").is_null()) n.parent = j.at("parent").get<std::size_t>();
  if (j.contains("feature")) {
    n.split = cart::SplitSpec{j.at("feature").get<std::size_t>(), j.at("threshold").get<double>(),
                              j.at("impurity_decrease").get<double>()};
    n.left = j.at("left").get<std::size_t>();
    n.right = j.at("right").get<std::size_t>();
  }
  return n;
}

json tree_to_json(const cart::TreeModel& tree) {
  json nodes = json::array();
  for (const auto& n : tree.nodes()) nodes.push_back(node_to_json(n));
  return {{"n_features", tree.n_features()}, {"nodes", std::move(nodes)}};
}

cart::TreeModel tree_from(const json& j) {
  std::vector<cart::Node> nodes;
  for (const auto& n : j.at("nodes")) nodes.push_back(node_from_json(n));
  return cart::TreeModel(std::move(nodes), j.at("n_features").get<std::size_t>());
}

json mtry_to_json(const cart::Mtry& m) {
  if (m.is_fraction()) return {{"fraction", m.fraction_value()}};
  return {{"count", m.fixed_count()}};
}

cart::Mtry mtry_from_json(const json& j) {
  if (j.contains("count")) return cart::Mtry::count(j.at("count").get<std::size_t>());
  return cart::Mtry::fraction(j.at("fraction").get<double>());
}

json optional_count(const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); }

std::optional<std::size_t> optional_count(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<std::size_t>();
}

}  // namespace

namespace cart {

std::string to_json(const TreeModel& tree, int indent) {
  json j = tree_to_json(tree);
  j["format_version"] = kFormatVersion;
  return j.dump(indent);
}

TreeModel tree_from_json(const std::string& text) {
  try {
    return tree_from(json::parse(text));
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("invalid tree JSON: ") + e.what());
  }
}

}  // namespace cart

namespace forest {

std::string to_json(const ForestModel& forest, int indent) {
  const auto& c = forest.config();
  json config{{"n_trees", c.n_trees},
              {"bootstrap", c.bootstrap},
              {"seed", c.seed},
              {"mtry", mtry_to_json(c.tree.mtry)},
              {"max_depth", optional_count(c.tree.max_depth)},
              {"max_leaf_nodes", optional_count(c.tree.max_leaf_nodes)},
              {"min_samples_leaf", c.tree.min_samples_leaf},
              {"growth", c.tree.growth == cart::Growth::best_first ? "best_first" : "depth_first"}};
  json trees = json::array();
  for (const auto& t : forest.trees()) trees.push_back(tree_to_json(t));
  json j{{"format_version", kFormatVersion},
         {"config", std::move(config)},
         {"feature_names", forest.feature_names()},
         {"trees", std::move(trees)}};
  return j.dump(indent);
}

ForestModel forest_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    const auto& jc = j.at("config");
    ForestConfig c;
    c.n_trees = jc.at("n_trees").get<std::size_t>();
    c.bootstrap = jc.at("bootstrap").get<bool>();
    c.seed = jc.at("seed").get<std::uint64_t>();
    c.tree.mtry = mtry_from_json(jc.at("mtry"));
    c.tree.max_depth = optional_count(jc.at("max_depth"));
    c.tree.max_leaf_nodes = optional_count(jc.at("max_leaf_nodes"));
    c.tree.min_samples_leaf = jc.at("min_samples_leaf").get<std::size_t>();
    c.tree.growth = jc.at("growth").get<std::string>() == "best_first" ? cart::Growth::best_first
                                                                       : cart::Growth::depth_first;
    std::vector<cart::TreeModel> trees;
    for (const auto& t : j.at("trees")) trees.push_back(tree_from(t));
    return ForestModel(std::move(trees), c, j.at("feature_names").get<std::vector<std::string>>());
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("invalid forest JSON: ") + e.what());
  }
}

}  // namespace forest

namespace targeting {

std::string to_json(const TargetSelection& s, int indent) {
  json j{{"indices", s.indices},
         {"names", s.names},
         {"coefficients", s.scores},
         {"requested", s.requested},
         {"lasso_support", s.lasso_support},
         {"lambda", s.lambda},
         {"expansion", to_string(s.expansion)},
         {"warnings", s.warnings}};
  return j.dump(indent);
}

}  // namespace targeting

namespace eval {

std::string to_json(const DmResult& r, int indent) {
  json j{{"statistic", r.statistic},
         {"p_value", r.p_value},
         {"horizon", r.horizon},
         {"mean_differential", r.mean_differential},
         {"hac_variance", r.hac_variance}};
  return j.dump(indent);
}

}  // namespace eval
}  // namespace trf
