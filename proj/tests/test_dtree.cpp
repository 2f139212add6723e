#include <gtest/gtest.h>

#include <random>

#include "oracles/oracles.hpp"
#include "support.hpp"
#include "wrapids/dtree.hpp"
#include "wrapids/forest.hpp"
#include "wrapids/synthetic.hpp"

using namespace wrapids;

namespace {

std::vector<Label> L(std::initializer_list<int> v) { return {v.begin(), v.end()}; }

double train_accuracy(const DecisionTree& t, const Dataset& d) {
  auto p = t.predict(d);
  std::size_t ok = 0;
  for (std::size_t r = 0; r < d.rows(); ++r) ok += p[r] == d.labels()[r];
  return static_cast<double>(ok) / static_cast<double>(d.rows());
}

Dataset nominal_dataset(const std::vector<std::string>& a, const std::vector<int>& y) {
  return Dataset(Schema::from_columns({{"A", ColumnKind::nominal}, {"label", ColumnKind::label}}),
                 {NominalColumn::from_strings(a), NumericColumn{}}, testing_support::to_labels(y));
}

}  // namespace

TEST(Entropy, Examples) {
  auto a = L({1, 1, 0, 0}), b = L({1, 1, 1, 1}), c = L({1, 1, 1, 0});
  EXPECT_DOUBLE_EQ(entropy(std::span<const Label>(a)), 1.0);
  EXPECT_DOUBLE_EQ(entropy(std::span<const Label>(b)), 0.0);
  EXPECT_NEAR(entropy(std::span<const Label>(c)), 0.811278, 1e-6);
  EXPECT_DOUBLE_EQ(entropy(std::span<const Label>()), 0.0);
}

TEST(Entropy, MatchesOracleOnRandomLabels) {
  std::mt19937_64 gen(1);
  for (int t = 0; t < 200; ++t) {
    std::vector<int> y(1 + gen() % 60);
    for (auto& v : y) v = static_cast<int>(gen() % 2);
    auto l = testing_support::to_labels(y);
    EXPECT_NEAR(entropy(std::span<const Label>(l)), oracle::entropy(y), 1e-12);
  }
}

TEST(GainRatio, HandExample) {
  Dataset d = nominal_dataset({"a", "a", "a", "b", "b"}, {1, 1, 1, 0, 0});
  EXPECT_NEAR(gain_ratio(d, 0, NominalSplit{}), 1.0, 1e-12);
  std::array<ClassCounts, 2> parts{ClassCounts{0, 3}, ClassCounts{2, 0}};
  SplitScore s = score_partition(parts);
  EXPECT_NEAR(s.gain, 0.970951, 1e-6);
  EXPECT_NEAR(s.split_info, 0.970951, 1e-6);
}

TEST(GainRatio, ConstantAttributeScoresZero) {
  Dataset d = nominal_dataset({"a", "a", "a", "a"}, {1, 0, 1, 0});
  EXPECT_EQ(gain_ratio(d, 0, NominalSplit{}), 0.0);
}

TEST(GainRatio, IndependentAttributeNearZero) {
  std::mt19937_64 gen(3);
  std::vector<std::string> a(20000);
  std::vector<int> y(20000);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = std::string(1, static_cast<char>('a' + gen() % 4));
    y[i] = static_cast<int>(gen() % 2);
  }
  EXPECT_LT(gain_ratio(nominal_dataset(a, y), 0, NominalSplit{}), 0.05);
}

// Random partitions: library scores agree with the oracle; ratio in [0,1]; gain <= H.
TEST(GainRatio, PropertyAgainstOracle) {
  std::mt19937_64 gen(5);
  for (int t = 0; t < 300; ++t) {
    std::size_t n = 2 + gen() % 40, k = 1 + gen() % 5;
    std::vector<int> g(n), y(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = static_cast<int>(gen() % k), y[i] = static_cast<int>(gen() % 2);
    std::vector<ClassCounts> parts(k, ClassCounts{});
    for (std::size_t i = 0; i < n; ++i) ++parts[g[i]][y[i]];
    std::erase_if(parts, [](const ClassCounts& c) { return c[0] + c[1] == 0; });
    SplitScore s = score_partition(parts);
    auto o = oracle::gain_ratio(g, y);
    EXPECT_NEAR(s.gain, o.gain, 1e-12);
    EXPECT_NEAR(s.split_info, o.split_info, 1e-12);
    EXPECT_NEAR(s.ratio, o.ratio, 1e-9);
    EXPECT_GE(s.ratio, 0.0);
    EXPECT_LE(s.ratio, 1.0 + 1e-12);
    EXPECT_LE(s.gain, oracle::entropy(y) + 1e-12);
  }
}

TEST(Threshold, Examples) {
  std::vector<double> v{1, 2, 3, 4};
  auto y = L({0, 0, 1, 1});
  auto t = best_numeric_threshold(v, y);
  EXPECT_DOUBLE_EQ(t.threshold, 2.5);
  EXPECT_DOUBLE_EQ(t.gain, 1.0);
  std::vector<double> v2{1, 2};
  auto y2 = L({0, 0});
  EXPECT_EQ(best_numeric_threshold(v2, y2).gain, 0.0);
  std::vector<double> same{3, 3, 3};
  auto y3 = L({0, 1, 0});
  EXPECT_THROW(best_numeric_threshold(same, y3), DataError);
}

TEST(Threshold, PropertyOracleAndPermutationInvariance) {
  std::mt19937_64 gen(7);
  for (int t = 0; t < 300; ++t) {
    std::size_t n = 2 + gen() % 30;
    std::vector<double> v(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>(gen() % 12), y[i] = static_cast<int>(gen() % 2);
    if (std::ranges::all_of(v, [&](double x) { return x == v[0]; })) continue;
    auto l = testing_support::to_labels(y);
    auto got = best_numeric_threshold(v, l);
    auto want = oracle::best_threshold(v, y);
    EXPECT_DOUBLE_EQ(got.threshold, want.threshold);
    EXPECT_NEAR(got.gain_ratio, want.ratio, 1e-9);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    std::vector<double> pv(n);
    std::vector<Label> pl(n);
    for (std::size_t i = 0; i < n; ++i) pv[i] = v[perm[i]], pl[i] = l[perm[i]];
    auto again = best_numeric_threshold(pv, pl);
    EXPECT_EQ(again.threshold, got.threshold);
    EXPECT_EQ(again.gain_ratio, got.gain_ratio);
  }
}

TEST(Pruning, PessimisticErrorsMatchClosedForm) {
  EXPECT_NEAR(pessimistic_extra_errors(6, 0, 0.25), 6 * (1 - std::pow(0.25, 1.0 / 6)), 1e-12);
  // Upper bound of the binomial confidence interval at z = Phi^-1(0.75).
  const double z = 0.6744897501960817, n = 20, e = 4;
  double f = (e + 0.5) / n;
  double r = (f + z * z / (2 * n) + z * std::sqrt(f / n - f * f / n + z * z / (4 * n * n))) / (1 + z * z / n);
  EXPECT_NEAR(pessimistic_extra_errors(n, e, 0.25), r * n - e, 1e-9);
  EXPECT_GT(pessimistic_extra_errors(n, e, 0.1), pessimistic_extra_errors(n, e, 0.25));
}

TEST(FitTree, SingleClassIsOneLeaf) {
  Dataset d = testing_support::numeric_dataset({{"x", {1, 2, 3}}}, {1, 1, 1});
  DecisionTree t = fit_tree(d);
  EXPECT_EQ(t.node_count(), 1u);
  EXPECT_EQ(t.root().prediction(), kAttack);
  EXPECT_THROW(fit_tree(testing_support::numeric_dataset({{"x", {}}}, {})), DataError);
}

TEST(FitTree, PerfectSeparatorGivesDepthOne) {
  Dataset d = testing_support::numeric_dataset({{"f0", {5, 1, 5, 1}}, {"f1", {1, 2, 3, 4}}}, {0, 0, 1, 1});
  DecisionTree t = fit_tree(d);
  EXPECT_EQ(t.depth(), 1u);
  EXPECT_EQ(t.features()[t.root().feature].name, "f1");
  EXPECT_DOUBLE_EQ(t.root().threshold, 2.5);
  EXPECT_DOUBLE_EQ(train_accuracy(t, d), 1.0);
}

TEST(FitTree, LeafTieFavoursAttack) {
  Dataset d = testing_support::numeric_dataset({{"x", {1, 1}}}, {0, 1});
  EXPECT_EQ(fit_tree(d).predict(d), (std::vector<Label>{kAttack, kAttack}));
}

TEST(FitTree, RootSplitIsInformative) {
  Dataset d = generate_synthetic({.rows = 5000, .informative_numeric = 4, .noise_numeric = 12}, 17);
  DecisionTree t = fit_tree(d);
  ASSERT_FALSE(t.root().is_leaf());
  EXPECT_TRUE(t.features()[t.root().feature].name.starts_with("inf_"));
}

TEST(FitTree, PruningShrinksAndNeverLowersTrainError) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Dataset d = generate_synthetic({.rows = 600, .informative_numeric = 2, .noise_numeric = 6, .nominal_features = 2,
                                    .separation = 0.8},
                                   seed);
    TreeParams on, off;
    off.prune = false;
    DecisionTree pruned = fit_tree(d, on), full = fit_tree(d, off);
    EXPECT_LE(pruned.node_count(), full.node_count());
    EXPECT_LE(train_accuracy(pruned, d), train_accuracy(full, d));
  }
}

TEST(FitTree, RowPermutationInvariance) {
  Dataset d = generate_synthetic({.rows = 800, .informative_numeric = 3, .noise_numeric = 3}, 9);
  std::vector<std::size_t> perm(d.rows());
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(4));
  EXPECT_TRUE(fit_tree(d) == fit_tree(d.take_rows(perm)));
}

TEST(FitTree, NominalSplitRoutesUnseenCategoryToDefault) {
  Dataset tr = nominal_dataset({"tcp", "tcp", "tcp", "udp", "udp", "arp", "arp"}, {0, 0, 0, 1, 1, 1, 1});
  TreeParams p;
  p.min_leaf = 1;
  DecisionTree t = fit_tree(tr, p);
  ASSERT_EQ(t.root().kind, TreeNode::Kind::nominal);
  EXPECT_EQ(t.root().children.size(), 3u);
  Dataset te = nominal_dataset({"icmp", "udp"}, {0, 1});
  auto pred = t.predict(te);
  EXPECT_EQ(pred[0], kNormal);  // default child = tcp branch, the largest
  EXPECT_EQ(pred[1], kAttack);
}

TEST(FitTree, MaxDepthAndMinLeafRespected) {
  Dataset d = generate_synthetic({.rows = 1000, .informative_numeric = 3, .noise_numeric = 3, .separation = 1.0}, 2);
  TreeParams p;
  p.max_depth = 2;
  p.prune = false;
  EXPECT_LE(fit_tree(d, p).depth(), 2u);
  p.max_depth.reset();
  p.min_leaf = 50;
  DecisionTree t = fit_tree(d, p);
  for (const auto& n : t.nodes()) {
    if (n.is_leaf()) EXPECT_GE(n.counts[0] + n.counts[1], 50u);
  }
}

TEST(FitTree, JsonRoundTrip) {
  Dataset d = generate_synthetic({.rows = 300, .informative_numeric = 2, .noise_numeric = 2, .nominal_features = 2}, 2);
  DecisionTree t = fit_tree(d);
  DecisionTree back = tree_from_json(nlohmann::json::parse(to_json(t).dump()));
  EXPECT_TRUE(back == t);
  EXPECT_EQ(back.predict(d), t.predict(d));
}

TEST(FitTree, StrictBindingRejectsMissingFeature) {
  Dataset d = generate_synthetic({.rows = 300, .informative_numeric = 2}, 2);
  DecisionTree t = fit_tree(d);
  Dataset other = testing_support::numeric_dataset({{"zzz", {1.0}}}, {0});
  EXPECT_THROW(predict_tree(t, other, 0), SchemaMismatch);
}

TEST(Forest, ReducesToSingleTree) {
  Dataset d = generate_synthetic({.rows = 700, .informative_numeric = 3, .noise_numeric = 3, .nominal_features = 2,
                                  .separation = 1.2},
                                 6);
  ForestParams fp;
  fp.n_trees = 1;
  fp.bootstrap = false;
  fp.features_per_split = d.attribute_count();
  fp.criterion = SplitCriterion::gain_ratio;
  fp.min_leaf = 2;
  fp.prune = true;
  Forest f = fit_forest(d, fp);
  DecisionTree t = fit_tree(d);
  EXPECT_TRUE(f.trees().front() == t);
  EXPECT_EQ(f.predict(d), t.predict(d));
}

TEST(Forest, DeterministicAcrossRunsAndThreads) {
  Dataset d = generate_synthetic({.rows = 500, .informative_numeric = 3, .noise_numeric = 5, .nominal_features = 1}, 8);
  ForestParams fp;
  fp.n_trees = 24;
  fp.seed = 77;
  Forest a = fit_forest(d, fp);
  fp.threads = 4;
  Forest b = fit_forest(d, fp);
  EXPECT_TRUE(a == b);
  fp.seed = 78;
  EXPECT_FALSE(fit_forest(d, fp) == a);
}

TEST(Forest, AtLeastAsAccurateAsOneTreeOnSeparableData) {
  Dataset d = generate_synthetic({.rows = 1500, .informative_numeric = 4, .noise_numeric = 4, .separation = 4.0}, 12);
  ForestParams fp;
  fp.seed = 1;
  Forest f = fit_forest(d, fp);
  auto pf = f.predict(d);
  std::size_t ok = 0;
  for (std::size_t r = 0; r < d.rows(); ++r) ok += pf[r] == d.labels()[r];
  double forest_acc = static_cast<double>(ok) / d.rows();
  EXPECT_GE(forest_acc, train_accuracy(fit_tree(d), d) - 0.01);
}

TEST(Forest, NoAttributesPredictsMajority) {
  Dataset d = testing_support::numeric_dataset({{"x", {1, 2, 3, 4, 5}}}, {1, 1, 1, 0, 0});
  Dataset empty = d.select_attributes({});
  ForestParams fp;
  fp.n_trees = 9;
  auto p = fit_forest(empty, fp).predict(empty);
  std::size_t attacks = std::ranges::count(p, kAttack);
  EXPECT_GE(attacks, 3u);
}

TEST(Forest, ParameterErrors) {
  Dataset d = generate_synthetic({.rows = 50}, 1);
  ForestParams fp;
  fp.features_per_split = 99;
  EXPECT_THROW(fit_forest(d, fp), ConfigError);
  fp.features_per_split.reset();
  fp.n_trees = 0;
  EXPECT_THROW(fit_forest(d, fp), ConfigError);
}
