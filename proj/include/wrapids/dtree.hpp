#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <nlohmann/json.hpp>

#include "wrapids/dataset.hpp"
#include "wrapids/error.hpp"
#include "wrapids/rng.hpp"

namespace wrapids {

using ClassCounts = std::array<std::size_t, 2>;  // [normal, attack]

inline double entropy(const ClassCounts& c) {
  double n = static_cast<double>(c[0] + c[1]);
  if (n == 0.0) return 0.0;
  double h = 0.0;
  for (std::size_t k : c) {
    if (k == 0) continue;
    double p = static_cast<double>(k) / n;
    h -= p * std::log2(p);
  }
  return h;
}

// Shannon entropy in bits; 0 for an empty array.
inline double entropy(std::span<const Label> labels) {
  ClassCounts c{};
  for (Label l : labels) ++c[l];
  return entropy(c);
}

inline double gini(const ClassCounts& c) {
  double n = static_cast<double>(c[0] + c[1]);
  if (n == 0.0) return 0.0;
  double p = static_cast<double>(c[1]) / n;
  return 2.0 * p * (1.0 - p);
}

struct SplitScore {
  double gain = 0.0;        // information gain, bits
  double split_info = 0.0;  // entropy of the branch sizes, bits
  double ratio = 0.0;       // gain / split_info, 0 when split_info is 0
};

// Scores a partition given the class counts of every branch.
inline SplitScore score_partition(std::span<const ClassCounts> branches) {
  ClassCounts parent{};
  for (const auto& b : branches) {
    parent[0] += b[0];
    parent[1] += b[1];
  }
  double n = static_cast<double>(parent[0] + parent[1]);
  SplitScore s;
  if (n == 0.0) return s;
  double remainder = 0.0;
  for (const auto& b : branches) {
    double nb = static_cast<double>(b[0] + b[1]);
    if (nb == 0.0) continue;
    double w = nb / n;
    remainder += w * entropy(b);
    s.split_info -= w * std::log2(w);
  }
  s.gain = std::max(0.0, entropy(parent) - remainder);
  s.ratio = s.split_info > 0.0 ? s.gain / s.split_info : 0.0;
  return s;
}

struct NominalSplit {};
struct NumericSplit {
  double threshold = 0.0;  // rows with x <= threshold go left
};
using SplitSpec = std::variant<NominalSplit, NumericSplit>;

// Gain ratio of splitting `d` on the attribute at `position`: multi-way by
// category for nominal attributes, binary at the threshold for numeric ones.
inline double gain_ratio(const Dataset& d, std::size_t position, const SplitSpec& split) {
  auto labels = d.labels();
  std::vector<ClassCounts> branches;
  if (const auto* num = std::get_if<NumericSplit>(&split)) {
    auto values = d.numeric(position);
    branches.assign(2, ClassCounts{});
    for (std::size_t r = 0; r < d.rows(); ++r) ++branches[values[r] <= num->threshold ? 0 : 1][labels[r]];
  } else {
    const auto& col = d.nominal(position);
    branches.assign(col.categories.size(), ClassCounts{});
    for (std::size_t r = 0; r < d.rows(); ++r) ++branches[col.codes[r]][labels[r]];
  }
  return score_partition(branches).ratio;
}

struct ThresholdChoice {
  double threshold = 0.0;
  double gain = 0.0;
  double gain_ratio = 0.0;
};

namespace detail {

inline double midpoint(double lo, double hi) {
  double mid = lo + (hi - lo) / 2.0;
  // Adjacent doubles: keep the invariant lo <= t < hi.
  return mid < hi ? mid : lo;
}

// Sweeps sorted (value, label) pairs and returns the gain-ratio-maximizing
// midpoint with at least `min_leaf` rows on each side. Ties keep the smaller
// threshold.
inline std::optional<ThresholdChoice> sweep_gain_ratio(std::span<const std::pair<double, Label>> sorted,
                                                       std::size_t min_leaf) {
  ClassCounts total{};
  for (const auto& [v, l] : sorted) ++total[l];
  const std::size_t n = sorted.size();
  ClassCounts left{};
  std::optional<ThresholdChoice> best;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    ++left[sorted[i].second];
    if (!(sorted[i].first < sorted[i + 1].first)) continue;
    std::size_t nl = i + 1;
    if (nl < min_leaf || n - nl < min_leaf) continue;
    ClassCounts right{total[0] - left[0], total[1] - left[1]};
    std::array<ClassCounts, 2> parts{left, right};
    SplitScore s = score_partition(parts);
    if (!best || s.ratio > best->gain_ratio + 1e-12) {
      best = ThresholdChoice{midpoint(sorted[i].first, sorted[i + 1].first), s.gain, s.ratio};
    }
  }
  return best;
}

}  // namespace detail

// Best binary threshold by gain ratio over midpoints of consecutive distinct
// values. Requires at least two distinct values.
inline ThresholdChoice best_numeric_threshold(std::span<const double> values, std::span<const Label> labels) {
  if (values.size() != labels.size()) throw DataError("values and labels differ in length");
  std::vector<std::pair<double, Label>> pairs(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) pairs[i] = {values[i], labels[i]};
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  auto best = detail::sweep_gain_ratio(pairs, 1);
  if (!best) throw DataError("cannot choose a threshold: all values are identical");
  return *best;
}

// Upper confidence bound on the number of errors among N cases with e
// observed errors, as used by C4.5's pessimistic pruning. Returns the extra
// errors to add to e.
inline double pessimistic_extra_errors(double n, double e, double confidence) {
  if (e < 1.0) {
    double base = n * (1.0 - std::pow(confidence, 1.0 / n));
    if (e == 0.0) return base;
    return base + e * (pessimistic_extra_errors(n, 1.0, confidence) - base);
  }
  if (e + 0.5 >= n) return std::max(n - e, 0.0);
  static const boost::math::normal standard;
  double z = boost::math::quantile(standard, 1.0 - confidence);
  double f = (e + 0.5) / n;
  double r = (f + z * z / (2 * n) + z * std::sqrt(f / n - f * f / n + z * z / (4 * n * n))) / (1 + z * z / n);
  return r * n - e;
}

struct TreeParams {
  std::size_t min_leaf = 2;
  double pruning_confidence = 0.25;
  std::optional<std::size_t> max_depth;
  bool prune = true;
};

inline void validate(const TreeParams& p) {
  if (p.min_leaf < 1) throw ConfigError("min_leaf must be >= 1");
  if (!(p.pruning_confidence > 0.0 && p.pruning_confidence < 1.0)) {
    throw ConfigError("pruning_confidence must lie in (0, 1)");
  }
}

enum class SplitCriterion { gain_ratio, gini };

struct TreeFeature {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  std::vector<std::string> categories;  // nominal only: training vocabulary

  friend bool operator==(const TreeFeature&, const TreeFeature&) = default;
};

struct TreeNode {
  enum class Kind : std::uint8_t { leaf, numeric, nominal };

  Kind kind = Kind::leaf;
  ClassCounts counts{};            // training rows reaching this node
  std::size_t feature = 0;         // index into DecisionTree::features()
  double threshold = 0.0;          // numeric: x <= threshold -> children[0]
  std::vector<std::size_t> children;
  std::vector<std::int32_t> branch;  // nominal: vocabulary code -> child slot, -1 routes to default
  std::size_t default_child = 0;     // nominal: slot of the child with the most training rows

  bool is_leaf() const noexcept { return kind == Kind::leaf; }
  // Majority label; ties go to attack.
  Label prediction() const noexcept { return counts[1] >= counts[0] ? kAttack : kNormal; }
  double attack_fraction() const noexcept {
    double n = static_cast<double>(counts[0] + counts[1]);
    return n == 0.0 ? 0.5 : static_cast<double>(counts[1]) / n;
  }

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class DecisionTree;

// A tree resolved against the columns of one dataset. Nominal categories are
// translated through their strings, so the dataset may use different codes.
class BoundTree {
 public:
  BoundTree(const DecisionTree& tree, const Dataset& d, bool strict);

  Label predict(std::size_t row) const { return leaf(row).prediction(); }
  double score(std::size_t row) const { return leaf(row).attack_fraction(); }
  const TreeNode& leaf(std::size_t row) const;

 private:
  const DecisionTree* tree_;
  std::vector<const double*> numeric_;
  std::vector<const std::uint32_t*> codes_;
  std::vector<std::vector<std::int32_t>> translate_;  // dataset code -> tree code, -1 unknown
};

class DecisionTree {
 public:
  DecisionTree() = default;
  DecisionTree(std::vector<TreeFeature> features, std::vector<TreeNode> nodes)
      : features_(std::move(features)), nodes_(std::move(nodes)) {}

  const std::vector<TreeFeature>& features() const noexcept { return features_; }
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  const TreeNode& root() const { return nodes_.at(0); }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const auto& n) { return n.is_leaf(); }));
  }
  std::size_t depth() const { return nodes_.empty() ? 0 : depth_of(0); }

  // Attribute names of `d` must equal the training attributes, in order.
  std::vector<Label> predict(const Dataset& d) const {
    BoundTree b(*this, d, true);
    std::vector<Label> out(d.rows());
    for (std::size_t r = 0; r < d.rows(); ++r) out[r] = b.predict(r);
    return out;
  }

  // Attack fraction of the training rows at the reached leaf.
  std::vector<double> scores(const Dataset& d) const {
    BoundTree b(*this, d, true);
    std::vector<double> out(d.rows());
    for (std::size_t r = 0; r < d.rows(); ++r) out[r] = b.score(r);
    return out;
  }

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

 private:
  std::size_t depth_of(std::size_t i) const {
    std::size_t d = 0;
    for (std::size_t c : nodes_[i].children) d = std::max(d, 1 + depth_of(c));
    return d;
  }

  std::vector<TreeFeature> features_;
  std::vector<TreeNode> nodes_;
};

inline BoundTree::BoundTree(const DecisionTree& tree, const Dataset& d, bool strict) : tree_(&tree) {
  const auto& schema = d.schema();
  const auto& feats = tree.features();
  if (strict) {
    const auto& attrs = schema.attributes();
    bool ok = attrs.size() == feats.size();
    for (std::size_t i = 0; ok && i < feats.size(); ++i) {
      ok = schema[attrs[i]].name == feats[i].name && schema[attrs[i]].kind == feats[i].kind;
    }
    if (!ok) throw SchemaMismatch("dataset attributes do not match the attributes the tree was trained on");
  }
  numeric_.assign(feats.size(), nullptr);
  codes_.assign(feats.size(), nullptr);
  translate_.resize(feats.size());
  for (std::size_t f = 0; f < feats.size(); ++f) {
    auto p = schema.find(feats[f].name);
    if (!p || schema[*p].kind != feats[f].kind) {
      throw SchemaMismatch("dataset lacks tree attribute '" + feats[f].name + "' of the right kind");
    }
    if (feats[f].kind == ColumnKind::numeric) {
      numeric_[f] = d.numeric(*p).data();
    } else {
      const auto& col = d.nominal(*p);
      codes_[f] = col.codes.data();
      std::unordered_map<std::string_view, std::int32_t> vocab;
      for (std::size_t c = 0; c < feats[f].categories.size(); ++c) vocab.emplace(feats[f].categories[c], static_cast<std::int32_t>(c));
      auto& t = translate_[f];
      t.assign(col.categories.size(), -1);
      for (std::size_t c = 0; c < col.categories.size(); ++c) {
        auto it = vocab.find(col.categories[c]);
        if (it != vocab.end()) t[c] = it->second;
      }
    }
  }
}

inline const TreeNode& BoundTree::leaf(std::size_t row) const {
  const auto& nodes = tree_->nodes();
  const TreeNode* n = &nodes[0];
  while (!n->is_leaf()) {
    std::size_t slot;
    if (n->kind == TreeNode::Kind::numeric) {
      slot = numeric_[n->feature][row] <= n->threshold ? 0 : 1;
    } else {
      std::int32_t code = translate_[n->feature][codes_[n->feature][row]];
      std::int32_t b = code >= 0 && static_cast<std::size_t>(code) < n->branch.size() ? n->branch[code] : -1;
      slot = b >= 0 ? static_cast<std::size_t>(b) : n->default_child;
    }
    n = &nodes[n->children[slot]];
  }
  return *n;
}

// Knobs for tree growth shared by the evaluator tree and forest members.
struct GrowOptions {
  SplitCriterion criterion = SplitCriterion::gain_ratio;
  std::size_t min_leaf = 2;
  std::optional<std::size_t> max_depth;
  std::size_t features_per_split = 0;  // 0 = consider every feature at every node
  std::uint64_t seed = 0;              // feature sampling; unused when features_per_split == 0
  bool prune = true;
  double pruning_confidence = 0.25;
};

namespace detail {

class TreeGrower {
 public:
  TreeGrower(const Dataset& d, std::span<const std::size_t> positions, const GrowOptions& opt)
      : opt_(opt), labels_(d.labels()), rng_(opt.seed) {
    const auto& schema = d.schema();
    for (std::size_t p : positions) {
      const auto& cs = schema[p];
      if (cs.kind == ColumnKind::label) throw DataError("the label cannot be used as a tree attribute");
      TreeFeature f{cs.name, cs.kind, {}};
      if (cs.kind == ColumnKind::numeric) {
        numeric_.push_back(d.numeric(p).data());
        codes_.push_back(nullptr);
      } else {
        const auto& col = d.nominal(p);
        f.categories = col.categories;
        numeric_.push_back(nullptr);
        codes_.push_back(col.codes.data());
      }
      features_.push_back(std::move(f));
    }
    order_.resize(features_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
  }

  DecisionTree grow(std::span<const std::size_t> rows) {
    if (rows.empty()) throw DataError("cannot fit a tree on an empty dataset");
    rows_.assign(rows.begin(), rows.end());
    nodes_.clear();
    build(0, rows_.size(), 0);
    if (opt_.prune) {
      prune(0);
      compact();
    }
    return DecisionTree(std::move(features_), std::move(nodes_));
  }

 private:
  struct Candidate {
    std::size_t feature = 0;
    double gain = 0.0;
    double score = 0.0;  // gain ratio or impurity decrease
    double threshold = 0.0;
    bool valid = false;
  };

  ClassCounts count(std::size_t begin, std::size_t end) const {
    ClassCounts c{};
    for (std::size_t i = begin; i < end; ++i) ++c[labels_[rows_[i]]];
    return c;
  }

  // Returns the node index of the subtree grown over rows_[begin, end).
  std::size_t build(std::size_t begin, std::size_t end, std::size_t depth) {
    std::size_t id = nodes_.size();
    nodes_.emplace_back();
    nodes_[id].counts = count(begin, end);
    const ClassCounts counts = nodes_[id].counts;
    const std::size_t n = end - begin;
    if (counts[0] == 0 || counts[1] == 0) return id;
    if (n < 2 * opt_.min_leaf) return id;
    if (opt_.max_depth && depth >= *opt_.max_depth) return id;

    Candidate best = choose_split(begin, end, counts);
    if (!best.valid) return id;

    TreeNode node = nodes_[id];
    node.feature = best.feature;
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    if (features_[best.feature].kind == ColumnKind::numeric) {
      node.kind = TreeNode::Kind::numeric;
      node.threshold = best.threshold;
      const double* x = numeric_[best.feature];
      double t = best.threshold;
      auto mid = std::partition(rows_.begin() + static_cast<std::ptrdiff_t>(begin),
                                rows_.begin() + static_cast<std::ptrdiff_t>(end),
                                [&](std::size_t r) { return x[r] <= t; });
      std::size_t m = static_cast<std::size_t>(mid - rows_.begin());
      ranges = {{begin, m}, {m, end}};
    } else {
      node.kind = TreeNode::Kind::nominal;
      const std::uint32_t* codes = codes_[best.feature];
      const std::size_t ncat = features_[best.feature].categories.size();
      std::vector<std::size_t> freq(ncat, 0);
      for (std::size_t i = begin; i < end; ++i) ++freq[codes[rows_[i]]];
      node.branch.assign(ncat, -1);
      std::vector<std::size_t> offset(ncat, 0);
      std::size_t pos = begin;
      std::size_t largest = 0;
      for (std::size_t c = 0; c < ncat; ++c) {
        if (freq[c] == 0) continue;
        std::size_t slot = ranges.size();
        node.branch[c] = static_cast<std::int32_t>(slot);
        offset[c] = pos;
        ranges.emplace_back(pos, pos + freq[c]);
        if (freq[c] > freq[largest] || node.branch[largest] < 0) largest = c;
        pos += freq[c];
      }
      node.default_child = static_cast<std::size_t>(node.branch[largest]);
      std::vector<std::size_t> sorted(n);
      for (std::size_t i = begin; i < end; ++i) sorted[offset[codes[rows_[i]]]++ - begin] = rows_[i];
      std::copy(sorted.begin(), sorted.end(), rows_.begin() + static_cast<std::ptrdiff_t>(begin));
    }
    for (const auto& [b, e] : ranges) node.children.push_back(build(b, e, depth + 1));
    nodes_[id] = std::move(node);
    return id;
  }

  Candidate evaluate_numeric(std::size_t f, std::size_t begin, std::size_t end, const ClassCounts& counts) {
    const double* x = numeric_[f];
    scratch_.clear();
    for (std::size_t i = begin; i < end; ++i) scratch_.emplace_back(x[rows_[i]], labels_[rows_[i]]);
    std::sort(scratch_.begin(), scratch_.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    Candidate c;
    c.feature = f;
    if (!(scratch_.front().first < scratch_.back().first)) return c;  // constant here
    constant_ = false;
    if (opt_.criterion == SplitCriterion::gain_ratio) {
      auto t = sweep_gain_ratio(scratch_, opt_.min_leaf);
      if (!t) return c;
      c.valid = true;
      c.gain = t->gain;
      c.score = t->gain_ratio;
      c.threshold = t->threshold;
      return c;
    }
    const double n = static_cast<double>(end - begin);
    const double parent = gini(counts);
    ClassCounts left{};
    for (std::size_t i = 0; i + 1 < scratch_.size(); ++i) {
      ++left[scratch_[i].second];
      if (!(scratch_[i].first < scratch_[i + 1].first)) continue;
      std::size_t nl = i + 1;
      if (nl < opt_.min_leaf || scratch_.size() - nl < opt_.min_leaf) continue;
      ClassCounts right{counts[0] - left[0], counts[1] - left[1]};
      double dec = parent - (static_cast<double>(nl) / n) * gini(left) -
                   (static_cast<double>(scratch_.size() - nl) / n) * gini(right);
      if (!c.valid || dec > c.score + 1e-12) {
        c.valid = true;
        c.score = dec;
        c.gain = dec;
        c.threshold = midpoint(scratch_[i].first, scratch_[i + 1].first);
      }
    }
    return c;
  }

  Candidate evaluate_nominal(std::size_t f, std::size_t begin, std::size_t end, const ClassCounts& counts) {
    const std::uint32_t* codes = codes_[f];
    branch_counts_.assign(features_[f].categories.size(), ClassCounts{});
    for (std::size_t i = begin; i < end; ++i) ++branch_counts_[codes[rows_[i]]][labels_[rows_[i]]];
    std::erase_if(branch_counts_, [](const ClassCounts& c) { return c[0] + c[1] == 0; });
    Candidate c;
    c.feature = f;
    if (branch_counts_.size() < 2) return c;
    constant_ = false;
    std::size_t big = 0;
    for (const auto& b : branch_counts_) big += (b[0] + b[1]) >= opt_.min_leaf;
    if (big < 2) return c;
    c.valid = true;
    if (opt_.criterion == SplitCriterion::gain_ratio) {
      SplitScore s = score_partition(branch_counts_);
      c.gain = s.gain;
      c.score = s.ratio;
    } else {
      const double n = static_cast<double>(end - begin);
      double dec = gini(counts);
      for (const auto& b : branch_counts_) dec -= static_cast<double>(b[0] + b[1]) / n * gini(b);
      c.gain = c.score = dec;
    }
    return c;
  }

  Candidate choose_split(std::size_t begin, std::size_t end, const ClassCounts& counts) {
    std::vector<Candidate> cands;
    const std::size_t nf = features_.size();
    const std::size_t want = opt_.features_per_split == 0 ? nf : std::min(opt_.features_per_split, nf);
    std::size_t informative_seen = 0;
    for (std::size_t k = 0; k < nf && informative_seen < want; ++k) {
      if (want < nf) {
        std::size_t j = k + uniform_index(rng_, nf - k);
        std::swap(order_[k], order_[j]);
      }
      std::size_t f = want < nf ? order_[k] : k;
      constant_ = true;
      Candidate c = features_[f].kind == ColumnKind::numeric ? evaluate_numeric(f, begin, end, counts)
                                                               : evaluate_nominal(f, begin, end, counts);
      if (!constant_) ++informative_seen;
      if (c.valid) cands.push_back(c);
    }
    Candidate best;
    if (cands.empty()) return best;
    double min_gain = 0.0;
    if (opt_.criterion == SplitCriterion::gain_ratio) {
      double sum = 0.0;
      for (const auto& c : cands) sum += c.gain;
      min_gain = sum / static_cast<double>(cands.size()) - 1e-3;
    }
    for (const auto& c : cands) {
      if (!(c.gain > 1e-10) || c.gain < min_gain) continue;
      bool better = !best.valid || c.score > best.score + 1e-12 ||
                    (std::abs(c.score - best.score) <= 1e-12 && c.feature < best.feature);
      if (better) best = c;
    }
    if (best.valid && !(best.score > 0.0)) best.valid = false;
    return best;
  }

  double leaf_errors(const ClassCounts& c) const {
    double n = static_cast<double>(c[0] + c[1]);
    if (n == 0.0) return 0.0;
    double e = static_cast<double>(std::min(c[0], c[1]));
    // Ties predict attack, so the minority count is the error count either way.
    return e + pessimistic_extra_errors(n, e, opt_.pruning_confidence);
  }

  // Subtree replacement, bottom-up. Returns the estimated errors of the
  // (possibly pruned) subtree at `id`.
  double prune(std::size_t id) {
    if (nodes_[id].is_leaf()) return leaf_errors(nodes_[id].counts);
    double subtree = 0.0;
    for (std::size_t c : nodes_[id].children) subtree += prune(c);
    double as_leaf = leaf_errors(nodes_[id].counts);
    if (as_leaf <= subtree + 0.1) {
      TreeNode leaf;
      leaf.counts = nodes_[id].counts;
      nodes_[id] = std::move(leaf);
      return as_leaf;
    }
    return subtree;
  }

  // Drops nodes orphaned by pruning; renumbers in pre-order.
  void compact() {
    std::vector<TreeNode> out;
    out.reserve(nodes_.size());
    auto visit = [&](auto&& self, std::size_t id) -> std::size_t {
      std::size_t mine = out.size();
      out.push_back(nodes_[id]);
      std::vector<std::size_t> kids;
      for (std::size_t c : nodes_[id].children) kids.push_back(self(self, c));
      out[mine].children = std::move(kids);
      return mine;
    };
    visit(visit, 0);
    nodes_ = std::move(out);
  }

  GrowOptions opt_;
  std::span<const Label> labels_;
  Rng rng_;
  std::vector<TreeFeature> features_;
  std::vector<const double*> numeric_;
  std::vector<const std::uint32_t*> codes_;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> rows_;
  std::vector<TreeNode> nodes_;
  std::vector<std::pair<double, Label>> scratch_;
  std::vector<ClassCounts> branch_counts_;
  bool constant_ = true;
};

}  // namespace detail

// Grows a tree on the given rows (repeats allowed) using the attributes at
// `positions`, which must be listed in ascending schema order for the
// lowest-position tie-break to hold.
inline DecisionTree grow_tree(const Dataset& d, std::span<const std::size_t> rows,
                              std::span<const std::size_t> positions, const GrowOptions& opt) {
  if (opt.min_leaf < 1) throw ConfigError("min_leaf must be >= 1");
  detail::TreeGrower g(d, positions, opt);
  return g.grow(rows);
}

inline GrowOptions c45_options(const TreeParams& p) {
  validate(p);
  GrowOptions o;
  o.criterion = SplitCriterion::gain_ratio;
  o.min_leaf = p.min_leaf;
  o.max_depth = p.max_depth;
  o.prune = p.prune;
  o.pruning_confidence = p.pruning_confidence;
  return o;
}

// C4.5-style induction over every attribute of `train`: multi-way nominal
// splits, binary numeric splits, gain-ratio selection restricted to
// attributes with at least average gain, then pessimistic pruning.
inline DecisionTree fit_tree(const Dataset& train, const TreeParams& params = {}) {
  if (train.rows() == 0) throw DataError("cannot fit a tree on an empty dataset");
  std::vector<std::size_t> rows(train.rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return grow_tree(train, rows, train.schema().attributes(), c45_options(params));
}

inline Label predict_tree(const DecisionTree& tree, const Dataset& d, std::size_t row) {
  return BoundTree(tree, d, true).predict(row);
}

inline nlohmann::json to_json(const DecisionTree& t) {
  nlohmann::json feats = nlohmann::json::array();
  for (const auto& f : t.features()) {
    nlohmann::json jf = {{"name", f.name}, {"kind", to_string(f.kind)}};
    if (f.kind == ColumnKind::nominal) jf["categories"] = f.categories;
    feats.push_back(std::move(jf));
  }
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : t.nodes()) {
    nlohmann::json jn = {{"counts", n.counts}};
    if (n.kind == TreeNode::Kind::numeric) {
      jn["split"] = "numeric";
      jn["feature"] = n.feature;
      jn["threshold"] = n.threshold;
      jn["children"] = n.children;
    } else if (n.kind == TreeNode::Kind::nominal) {
      jn["split"] = "nominal";
      jn["feature"] = n.feature;
      jn["children"] = n.children;
      jn["branch"] = n.branch;
      jn["default"] = n.default_child;
    }
    nodes.push_back(std::move(jn));
  }
  return {{"features", feats}, {"nodes", nodes}};
}

inline DecisionTree tree_from_json(const nlohmann::json& j) {
  std::vector<TreeFeature> feats;
  for (const auto& jf : j.at("features")) {
    TreeFeature f{jf.at("name").get<std::string>(), column_kind_from_string(jf.at("kind").get<std::string>()), {}};
    if (f.kind == ColumnKind::nominal) f.categories = jf.at("categories").get<std::vector<std::string>>();
    feats.push_back(std::move(f));
  }
  std::vector<TreeNode> nodes;
  for (const auto& jn : j.at("nodes")) {
    TreeNode n;
    n.counts = jn.at("counts").get<ClassCounts>();
    std::string split = jn.value("split", "");
    if (split == "numeric" || split == "nominal") {
      n.feature = jn.at("feature").get<std::size_t>();
      n.children = jn.at("children").get<std::vector<std::size_t>>();
      if (n.feature >= feats.size()) throw ArtifactError("tree node references an unknown feature");
    }
    if (split == "numeric") {
      n.kind = TreeNode::Kind::numeric;
      n.threshold = jn.at("threshold").get<double>();
      if (n.children.size() != 2) throw ArtifactError("numeric split must have two children");
    } else if (split == "nominal") {
      n.kind = TreeNode::Kind::nominal;
      n.branch = jn.at("branch").get<std::vector<std::int32_t>>();
      n.default_child = jn.at("default").get<std::size_t>();
      if (n.default_child >= n.children.size()) throw ArtifactError("nominal split default child out of range");
    } else if (!split.empty()) {
      throw ArtifactError("unknown split kind '" + split + "'");
    }
    nodes.push_back(std::move(n));
  }
  for (const auto& n : nodes) {
    for (std::size_t c : n.children) {
      if (c >= nodes.size()) throw ArtifactError("tree child index out of range");
    }
  }
  if (nodes.empty()) throw ArtifactError("tree has no nodes");
  return DecisionTree(std::move(feats), std::move(nodes));
}

}  // namespace wrapids
