#pragma once

#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "wrapids/dtree.hpp"
#include "wrapids/parallel.hpp"
#include "wrapids/rng.hpp"

namespace wrapids {

struct ForestParams {
  std::size_t n_trees = 100;
  std::optional<std::size_t> features_per_split;  // nullopt = floor(sqrt(attribute count))
  bool bootstrap = true;
  std::uint64_t seed = 0;
  SplitCriterion criterion = SplitCriterion::gini;
  std::size_t min_leaf = 1;
  std::optional<std::size_t> max_depth;
  bool prune = false;
  double pruning_confidence = 0.25;
  unsigned threads = 1;
};

class Forest {
 public:
  Forest() = default;
  explicit Forest(std::vector<DecisionTree> trees) : trees_(std::move(trees)) {}

  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }

  // Fraction of trees voting attack.
  std::vector<double> scores(const Dataset& d) const {
    std::vector<double> votes(d.rows(), 0.0);
    for (const auto& t : trees_) {
      BoundTree b(t, d, true);
      for (std::size_t r = 0; r < d.rows(); ++r) votes[r] += b.predict(r);
    }
    for (double& v : votes) v /= static_cast<double>(trees_.size());
    return votes;
  }

  // Majority vote; ties go to attack.
  std::vector<Label> predict(const Dataset& d) const {
    auto s = scores(d);
    std::vector<Label> out(s.size());
    for (std::size_t r = 0; r < s.size(); ++r) out[r] = s[r] >= 0.5 ? kAttack : kNormal;
    return out;
  }

  friend bool operator==(const Forest&, const Forest&) = default;

 private:
  std::vector<DecisionTree> trees_;
};

inline std::size_t resolve_features_per_split(const ForestParams& p, std::size_t attributes) {
  if (p.features_per_split) {
    if (*p.features_per_split < 1 || *p.features_per_split > attributes) {
      throw ConfigError("features_per_split must lie in [1, attribute count]");
    }
    return *p.features_per_split;
  }
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(attributes))));
}

// Each tree draws its bootstrap sample and feature candidates from a seed
// derived from (params.seed, tree index), so the result does not depend on
// the thread count.
inline Forest fit_forest(const Dataset& train, const ForestParams& params) {
  if (train.rows() == 0) throw DataError("cannot fit a forest on an empty dataset");
  if (params.n_trees < 1) throw ConfigError("n_trees must be >= 1");
  const auto& attrs = train.schema().attributes();
  // Without attributes every tree is a single leaf.
  std::size_t mtry = attrs.empty() ? 0 : resolve_features_per_split(params, attrs.size());

  std::vector<DecisionTree> trees(params.n_trees);
  parallel_for(params.n_trees, resolve_threads(params.threads), [&](std::size_t i) {
    std::uint64_t tree_seed = derive_seed(params.seed, i);
    std::vector<std::size_t> rows(train.rows());
    if (params.bootstrap) {
      Rng rng(derive_seed(tree_seed, 1));
      for (auto& r : rows) r = uniform_index(rng, train.rows());
    } else {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    GrowOptions opt;
    opt.criterion = params.criterion;
    opt.min_leaf = params.min_leaf;
    opt.max_depth = params.max_depth;
    opt.features_per_split = mtry == attrs.size() ? 0 : mtry;
    opt.seed = derive_seed(tree_seed, 2);
    opt.prune = params.prune;
    opt.pruning_confidence = params.pruning_confidence;
    trees[i] = grow_tree(train, rows, attrs, opt);
  });
  return Forest(std::move(trees));
}

inline std::vector<Label> predict_forest(const Forest& f, const Dataset& d) { return f.predict(d); }

inline nlohmann::json to_json(const Forest& f) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : f.trees()) trees.push_back(to_json(t));
  return {{"trees", trees}};
}

inline Forest forest_from_json(const nlohmann::json& j) {
  std::vector<DecisionTree> trees;
  for (const auto& t : j.at("trees")) trees.push_back(tree_from_json(t));
  if (trees.empty()) throw ArtifactError("forest has no trees");
  return Forest(std::move(trees));
}

}  // namespace wrapids
