#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wrapids/dataset.hpp"
#include "wrapids/dtree.hpp"
#include "wrapids/metrics.hpp"
#include "wrapids/parallel.hpp"
#include "wrapids/preprocess.hpp"
#include "wrapids/rng.hpp"

namespace wrapids {

// Fold index per row. Rows of each class are shuffled with the seed and dealt
// round-robin, continuing across classes, so every fold's per-class count is
// within one of the exact proportion.
inline std::vector<std::size_t> stratified_folds(const Dataset& d, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("cross-validation needs at least 2 folds");
  std::array<std::vector<std::size_t>, 2> by_class;
  auto labels = d.labels();
  for (std::size_t r = 0; r < d.rows(); ++r) by_class[labels[r]].push_back(r);
  for (int c = 0; c < 2; ++c) {
    if (by_class[c].size() < k) {
      throw DataError("class " + std::to_string(c) + " has " + std::to_string(by_class[c].size()) +
                      " rows, fewer than the " + std::to_string(k) + " folds requested");
    }
  }
  std::vector<std::size_t> fold(d.rows(), 0);
  std::size_t next = 0;
  for (int c = 0; c < 2; ++c) {
    Rng rng(derive_seed(seed, 0xf01d + static_cast<std::uint64_t>(c)));
    shuffle(by_class[c], rng);
    for (std::size_t r : by_class[c]) fold[r] = next++ % k;
  }
  return fold;
}

// Rows kept by a seeded stratified subsample: round(fraction * class size) of
// each class, returned in original row order.
inline std::vector<std::size_t> stratified_subsample_rows(const Dataset& d, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("subsample fraction must lie in (0, 1]");
  std::array<std::vector<std::size_t>, 2> by_class;
  auto labels = d.labels();
  for (std::size_t r = 0; r < d.rows(); ++r) by_class[labels[r]].push_back(r);
  std::vector<std::size_t> keep;
  for (int c = 0; c < 2; ++c) {
    Rng rng(derive_seed(seed, 0x5ab + static_cast<std::uint64_t>(c)));
    shuffle(by_class[c], rng);
    auto take = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(by_class[c].size())));
    keep.insert(keep.end(), by_class[c].begin(), by_class[c].begin() + static_cast<std::ptrdiff_t>(take));
  }
  std::sort(keep.begin(), keep.end());
  return keep;
}

inline Dataset stratified_subsample(const Dataset& d, double fraction, std::uint64_t seed) {
  if (fraction == 1.0) return d;
  return d.take_rows(stratified_subsample_rows(d, fraction, seed));
}

struct SearchConfig {
  std::size_t folds = 5;
  std::size_t termination = 5;  // consecutive non-improving expansions; 0 = never stop early
  std::uint64_t seed = 0;
  TreeParams evaluator;
  double improvement_epsilon = 1e-6;
  std::optional<double> subsample;  // stratified row fraction used for the search
  unsigned threads = 1;
};

// Attribute positions in ascending schema order; the canonical key of a subset.
using SubsetKey = std::vector<std::size_t>;

// Mean k-fold CV accuracy of the C4.5-style evaluator on a subset of
// attributes. Results are memoized per subset; fits() counts evaluator fits
// actually performed.
class SubsetEvaluator {
 public:
  SubsetEvaluator(const Dataset& d, const SearchConfig& cfg)
      : data_(d), cfg_(cfg), options_(c45_options(cfg.evaluator)), folds_(stratified_folds(d, cfg.folds, cfg.seed)) {
    train_rows_.resize(cfg.folds);
    test_rows_.resize(cfg.folds);
    for (std::size_t r = 0; r < d.rows(); ++r) {
      for (std::size_t f = 0; f < cfg.folds; ++f) (f == folds_[r] ? test_rows_ : train_rows_)[f].push_back(r);
    }
  }

  const std::vector<std::size_t>& folds() const noexcept { return folds_; }
  std::size_t fits() const noexcept { return fits_.load(); }
  std::size_t cached() const {
    std::lock_guard lock(mutex_);
    return cache_.size();
  }

  std::optional<double> lookup(const SubsetKey& key) const {
    std::lock_guard lock(mutex_);
    auto it = cache_.find(key);
    if (it == cache_.end()) return std::nullopt;
    return it->second;
  }

  void preload(const SubsetKey& key, double merit) {
    std::lock_guard lock(mutex_);
    cache_.emplace(key, merit);
  }

  double merit(const SubsetKey& key) {
    if (auto m = lookup(key)) return *m;
    double sum = 0.0;
    for (std::size_t f = 0; f < cfg_.folds; ++f) {
      DecisionTree tree = grow_tree(data_, train_rows_[f], key, options_);
      fits_.fetch_add(1);
      BoundTree bound(tree, data_, false);
      std::size_t correct = 0;
      auto labels = data_.labels();
      for (std::size_t r : test_rows_[f]) correct += bound.predict(r) == labels[r];
      sum += static_cast<double>(correct) / static_cast<double>(test_rows_[f].size());
    }
    double m = sum / static_cast<double>(cfg_.folds);
    preload(key, m);
    return m;
  }

  double merit(const FeatureSubset& subset) { return merit(key_of(subset)); }

  SubsetKey key_of(const FeatureSubset& subset) const {
    SubsetKey k = subset.positions(data_.schema());
    std::sort(k.begin(), k.end());
    return k;
  }

 private:
  const Dataset& data_;
  SearchConfig cfg_;
  GrowOptions options_;
  std::vector<std::size_t> folds_;
  std::vector<std::vector<std::size_t>> train_rows_;
  std::vector<std::vector<std::size_t>> test_rows_;
  mutable std::mutex mutex_;
  std::map<SubsetKey, double> cache_;
  std::atomic<std::size_t> fits_{0};
};

inline FeatureSubset subset_from_key(const Schema& schema, const SubsetKey& key) {
  std::vector<std::string> names;
  for (std::size_t p : key) names.push_back(schema[p].name);
  return FeatureSubset(std::move(names));
}

inline double evaluate_subset(const Dataset& d, const FeatureSubset& subset, const SearchConfig& cfg) {
  SubsetEvaluator ev(d, cfg);
  return ev.merit(subset);
}

struct EvaluatedSubset {
  std::vector<std::string> features;
  double merit = 0.0;
  friend bool operator==(const EvaluatedSubset&, const EvaluatedSubset&) = default;
};

struct ExpansionRecord {
  std::size_t step = 0;
  EvaluatedSubset expanded;
  std::vector<EvaluatedSubset> children;  // newly evaluated, canonical order
  EvaluatedSubset best;                   // after this pop
  std::size_t non_improving = 0;
  bool improved = false;
  friend bool operator==(const ExpansionRecord&, const ExpansionRecord&) = default;
};

struct SearchTrace {
  nlohmann::json header;
  std::vector<ExpansionRecord> expansions;
  nlohmann::json summary;
};

struct SearchResult {
  FeatureSubset best;
  double merit = 0.0;
  SearchTrace trace;
  std::size_t evaluations = 0;  // distinct subsets with a merit (including preloaded ones)
  std::size_t fits = 0;         // evaluator fits performed in this run
};

inline nlohmann::json to_json(const EvaluatedSubset& s) { return {{"features", s.features}, {"merit", s.merit}}; }

inline nlohmann::json to_json(const ExpansionRecord& r) {
  nlohmann::json kids = nlohmann::json::array();
  for (const auto& c : r.children) kids.push_back(to_json(c));
  return {{"type", "expansion"},        {"step", r.step},       {"expanded", to_json(r.expanded)},
          {"children", kids},           {"best", to_json(r.best)}, {"non_improving", r.non_improving},
          {"improved", r.improved}};
}

inline EvaluatedSubset evaluated_from_json(const nlohmann::json& j) {
  return {j.at("features").get<std::vector<std::string>>(), j.at("merit").get<double>()};
}

inline ExpansionRecord expansion_from_json(const nlohmann::json& j) {
  ExpansionRecord r;
  r.step = j.at("step").get<std::size_t>();
  r.expanded = evaluated_from_json(j.at("expanded"));
  for (const auto& c : j.at("children")) r.children.push_back(evaluated_from_json(c));
  r.best = evaluated_from_json(j.at("best"));
  r.non_improving = j.at("non_improving").get<std::size_t>();
  r.improved = j.at("improved").get<bool>();
  return r;
}

// Callbacks and shared state for a search run. Everything is optional.
struct SearchHooks {
  std::function<void(const nlohmann::json&)> on_record;  // header, each expansion, summary
  const std::atomic<bool>* stop = nullptr;               // checked before every pop
  std::vector<EvaluatedSubset> preload;                  // merits from an earlier trace
};

inline nlohmann::json search_header(const Dataset& d, const SearchConfig& cfg, std::size_t search_rows) {
  return {{"type", "config"},
          {"direction", "forward"},
          {"folds", cfg.folds},
          {"termination", cfg.termination == 0 ? nlohmann::json("inf") : nlohmann::json(cfg.termination)},
          {"seed", cfg.seed},
          {"improvement_epsilon", cfg.improvement_epsilon},
          {"evaluator",
           {{"min_leaf", cfg.evaluator.min_leaf},
            {"pruning_confidence", cfg.evaluator.pruning_confidence},
            {"max_depth", cfg.evaluator.max_depth ? nlohmann::json(*cfg.evaluator.max_depth) : nlohmann::json(nullptr)},
            {"prune", cfg.evaluator.prune}}},
          {"subsample", cfg.subsample ? nlohmann::json(*cfg.subsample) : nlohmann::json(nullptr)},
          {"rows", d.rows()},
          {"search_rows", search_rows},
          {"attributes", d.attribute_count()},
          {"data", "raw"}};
}

// Best-first forward search over attribute subsets, starting from the empty
// set. The open list is ordered by merit (descending), then subset size, then
// the lexicographic position sequence. Each pop that does not beat the best
// merit so far by more than improvement_epsilon increments a counter that
// resets on improvement; the search ends when the counter reaches
// cfg.termination (if non-zero) or the open list is empty. Children of an
// expansion are evaluated in parallel and recorded in canonical order, so the
// trace does not depend on the thread count.
inline SearchResult best_first_search(const Dataset& full, const SearchConfig& cfg, const SearchHooks& hooks = {}) {
  if (full.attribute_count() == 0) throw DataError("feature search needs at least one attribute");
  Dataset sub = cfg.subsample ? stratified_subsample(full, *cfg.subsample, derive_seed(cfg.seed, 0x5b)) : full;
  const Dataset& d = sub;
  const Schema& schema = d.schema();
  SubsetEvaluator ev(d, cfg);
  for (const auto& p : hooks.preload) ev.preload(ev.key_of(FeatureSubset(p.features)), p.merit);

  SearchResult result;
  result.trace.header = search_header(full, cfg, d.rows());
  if (hooks.on_record) hooks.on_record(result.trace.header);

  struct Node {
    SubsetKey key;
    double merit;
  };
  auto better = [](const Node& a, const Node& b) {
    if (a.merit != b.merit) return a.merit > b.merit;
    if (a.key.size() != b.key.size()) return a.key.size() < b.key.size();
    return a.key < b.key;
  };
  std::set<Node, decltype(better)> open(better);
  auto named = [&](const Node& n) { return EvaluatedSubset{subset_from_key(schema, n.key).names(), n.merit}; };

  std::set<SubsetKey> generated;
  Node start{{}, ev.merit(SubsetKey{})};
  generated.insert(start.key);
  open.insert(start);

  std::optional<Node> best;
  std::size_t stale = 0;
  std::size_t step = 0;
  std::string stopped = "exhausted";
  const unsigned threads = resolve_threads(cfg.threads);
  while (!open.empty()) {
    if (hooks.stop && hooks.stop->load()) {
      stopped = "interrupted";
      break;
    }
    Node node = *open.begin();
    open.erase(open.begin());
    ExpansionRecord rec;
    rec.step = step++;
    rec.expanded = named(node);
    rec.improved = !best || node.merit > best->merit + cfg.improvement_epsilon;
    if (rec.improved) {
      best = node;
      stale = 0;
    } else {
      ++stale;
    }
    rec.non_improving = stale;
    rec.best = named(*best);
    bool terminate = cfg.termination != 0 && stale >= cfg.termination;
    if (!terminate) {
      std::vector<Node> kids;
      for (std::size_t p : schema.attributes()) {
        if (std::binary_search(node.key.begin(), node.key.end(), p)) continue;
        SubsetKey k = node.key;
        k.insert(std::upper_bound(k.begin(), k.end(), p), p);
        if (generated.insert(k).second) kids.push_back({std::move(k), 0.0});
      }
      parallel_for(kids.size(), threads, [&](std::size_t i) { kids[i].merit = ev.merit(kids[i].key); });
      for (const auto& k : kids) {
        rec.children.push_back(named(k));
        open.insert(k);
      }
    }
    if (hooks.on_record) hooks.on_record(to_json(rec));
    result.trace.expansions.push_back(std::move(rec));
    if (terminate) {
      stopped = "termination";
      break;
    }
  }

  result.best = subset_from_key(schema, best ? best->key : SubsetKey{});
  result.merit = best ? best->merit : start.merit;
  result.evaluations = ev.cached();
  result.fits = ev.fits();
  result.trace.summary = {{"type", "summary"},
                          {"selected", result.best.names()},
                          {"merit", result.merit},
                          {"evaluations", result.evaluations},
                          {"fits", result.fits},
                          {"expansions", result.trace.expansions.size()},
                          {"stopped", stopped}};
  if (hooks.on_record) hooks.on_record(result.trace.summary);
  return result;
}

struct LoadedTrace {
  nlohmann::json header;
  std::vector<ExpansionRecord> expansions;
  std::optional<nlohmann::json> summary;

  // Every subset with a recorded merit: expanded nodes and their children.
  std::vector<EvaluatedSubset> merits() const {
    std::vector<EvaluatedSubset> out;
    for (const auto& e : expansions) {
      out.push_back(e.expanded);
      out.insert(out.end(), e.children.begin(), e.children.end());
    }
    return out;
  }
};

// Reads a line-delimited trace. A truncated final line (interrupted write) is ignored.
inline LoadedTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace file: " + path.string());
  LoadedTrace t;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      if (in.peek() == EOF) break;
      throw DataError("corrupt trace line in " + path.string());
    }
    auto type = j.value("type", "");
    if (type == "config") t.header = j;
    else if (type == "expansion") t.expansions.push_back(expansion_from_json(j));
    else if (type == "summary") t.summary = j;
  }
  return t;
}

// Holdout validation: project -> normalize -> encode on the training
// split, fit the classifier, and score the testing split. Preprocessing time
// is reported separately from the model-building time.
inline EvalReport validate_selection(const Dataset& train, const Dataset& test, const FeatureSubset& subset,
                                     const ClassifierSpec& spec, const PipelineOptions& opts = {},
                                     std::size_t timing_runs = 1, TrainedModel* model_out = nullptr,
                                     Preprocessor* preprocessor_out = nullptr) {
  auto t0 = std::chrono::steady_clock::now();
  Preprocessor pp = Preprocessor::fit(train, test, subset, opts);
  Dataset tr = pp.apply(train);
  Dataset te = pp.apply(test);
  double prep = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EvalReport r = time_fit_eval(spec, tr, te, timing_runs, model_out);
  r.feature_count = subset.size();
  r.encoded_width = tr.attribute_count();
  r.preprocess_seconds = prep;
  r.feature_set = "custom";
  if (spec.kind() == ClassifierKind::linsvm) r.note = "linear SVM stand-in, not comparable to the RBF-kernel SVM";
  if (preprocessor_out) *preprocessor_out = std::move(pp);
  return r;
}

}  // namespace wrapids
