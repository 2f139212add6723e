#include <gtest/gtest.h>

#include <fstream>
#include <set>

#include "oracles/oracles.hpp"
#include "support.hpp"
#include "wrapids/synthetic.hpp"
#include "wrapids/wrapper.hpp"

using namespace wrapids;

namespace {

Dataset small_search_data(std::size_t informative, std::size_t noise, std::size_t rows, std::uint64_t seed) {
  return generate_synthetic({.rows = rows, .informative_numeric = informative, .noise_numeric = noise, .separation = 1.5},
                            seed);
}

// Best merit over every subset, scored by an independent evaluator instance.
double exhaustive_best(const Dataset& d, const SearchConfig& cfg) {
  SubsetEvaluator ev(d, cfg);
  auto attrs = d.schema().attributes();
  double best = -1.0;
  for (const auto& idx : oracle::all_subsets(attrs.size())) {
    SubsetKey key;
    for (std::size_t i : idx) key.push_back(attrs[i]);
    best = std::max(best, ev.merit(key));
  }
  return best;
}

std::string dump_trace(const SearchTrace& t) {
  std::string s = t.header.dump() + "\n";
  for (const auto& e : t.expansions) s += to_json(e).dump() + "\n";
  return s + t.summary.dump() + "\n";
}

}  // namespace

// ---- folds -----------------------------------------------------------------------

TEST(Folds, TenRowExample) {
  Dataset d = testing_support::numeric_dataset({{"x", {0, 1, 2, 3, 4, 5, 6, 7, 8, 9}}}, {1, 1, 1, 1, 1, 1, 0, 0, 0, 0});
  auto f = stratified_folds(d, 2, 3);
  std::array<std::array<int, 2>, 2> count{};
  for (std::size_t r = 0; r < 10; ++r) ++count[f[r]][d.labels()[r]];
  EXPECT_EQ(count[0][1], 3);
  EXPECT_EQ(count[1][1], 3);
  EXPECT_EQ(count[0][0], 2);
  EXPECT_EQ(count[1][0], 2);
}

TEST(Folds, PerClassCountsWithinOneAndDeterministic) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Dataset d = generate_synthetic({.rows = 97 + seed * 13, .class_balance = 0.3 + 0.05 * seed}, seed);
    for (std::size_t k : {2u, 3u, 5u, 10u}) {
      auto f = stratified_folds(d, k, seed);
      EXPECT_EQ(f, stratified_folds(d, k, seed));
      for (int c = 0; c < 2; ++c) {
        std::vector<std::size_t> n(k, 0);
        for (std::size_t r = 0; r < d.rows(); ++r) n[f[r]] += d.labels()[r] == c;
        auto [lo, hi] = std::minmax_element(n.begin(), n.end());
        EXPECT_LE(*hi - *lo, 1u) << "seed " << seed << " k " << k;
      }
      std::vector<std::size_t> total(k, 0);
      for (auto x : f) ++total[x];
      auto [lo, hi] = std::minmax_element(total.begin(), total.end());
      EXPECT_LE(*hi - *lo, 1u);
    }
  }
}

TEST(Folds, Errors) {
  Dataset d = testing_support::numeric_dataset({{"x", {1, 2, 3, 4}}}, {1, 1, 1, 0});
  EXPECT_THROW(stratified_folds(d, 1, 0), ConfigError);
  EXPECT_THROW(stratified_folds(d, 2, 0), DataError);
}

TEST(Subsample, StratifiedRoundedCounts) {
  Dataset d = generate_synthetic({.rows = 1000, .class_balance = 0.68}, 2);
  auto rows = stratified_subsample_rows(d, 0.1, 7);
  std::size_t attacks = 0;
  for (auto r : rows) attacks += d.labels()[r] == kAttack;
  EXPECT_EQ(attacks, 68u);
  EXPECT_EQ(rows.size(), 100u);
  EXPECT_TRUE(std::is_sorted(rows.begin(), rows.end()));
  EXPECT_EQ(rows, stratified_subsample_rows(d, 0.1, 7));
  EXPECT_THROW(stratified_subsample_rows(d, 0.0, 7), ConfigError);
  EXPECT_TRUE(stratified_subsample(d, 1.0, 7) == d);
}

// ---- subset evaluation ---------------------------------------------------------

TEST(SubsetMerit, EmptySubsetScoresMajorityShare) {
  Dataset d = generate_synthetic({.rows = 100, .informative_numeric = 2, .class_balance = 0.7}, 1);
  EXPECT_DOUBLE_EQ(evaluate_subset(d, FeatureSubset{}, {}), 0.7);
}

TEST(SubsetMerit, PerfectPredictorScoresOne) {
  std::vector<double> x;
  std::vector<int> y;
  for (int i = 0; i < 60; ++i) {
    y.push_back(i % 3 == 0);
    x.push_back(y.back() ? 10.0 + i : -10.0 - i);
  }
  Dataset d = testing_support::numeric_dataset({{"x", x}}, y);
  EXPECT_EQ(evaluate_subset(d, FeatureSubset({"x"}), {}), 1.0);
}

TEST(SubsetMerit, CacheAvoidsRefits) {
  Dataset d = small_search_data(2, 2, 200, 3);
  SearchConfig cfg;
  SubsetEvaluator ev(d, cfg);
  double a = ev.merit({0, 2});
  EXPECT_EQ(ev.fits(), cfg.folds);
  EXPECT_EQ(ev.merit({0, 2}), a);
  EXPECT_EQ(ev.fits(), cfg.folds);
  SubsetKey want{*d.schema().find("inf_0"), *d.schema().find("noise_0")};
  std::sort(want.begin(), want.end());
  EXPECT_EQ(ev.key_of(FeatureSubset({"noise_0", "inf_0"})), want);
  ev.preload({1}, 0.25);
  EXPECT_EQ(ev.merit({1}), 0.25);
  EXPECT_EQ(ev.fits(), cfg.folds);
}

// ---- search ---------------------------------------------------------------------

TEST(Search, MatchesExhaustiveOracleWithoutTermination) {
  for (auto [inf, noise] : {std::pair<std::size_t, std::size_t>{2, 1}, {3, 5}}) {
    Dataset d = small_search_data(inf, noise, 160, 10 + inf);
    SearchConfig cfg;
    cfg.termination = 0;
    cfg.seed = 4;
    SearchResult r = best_first_search(d, cfg);
    EXPECT_EQ(r.merit, exhaustive_best(d, cfg)) << inf + noise << " features";
    EXPECT_EQ(r.evaluations, std::size_t{1} << (inf + noise));
    EXPECT_EQ(r.fits, cfg.folds * r.evaluations);
    EXPECT_EQ(r.trace.summary.at("stopped"), "exhausted");
  }
}

TEST(Search, SingleAttribute) {
  Dataset d = small_search_data(1, 0, 100, 2);
  SearchResult r = best_first_search(d, {});
  EXPECT_EQ(r.best.names(), (std::vector<std::string>{"inf_0"}));
  EXPECT_EQ(r.evaluations, 2u);
  Dataset none = d.select_attributes({});
  EXPECT_THROW(best_first_search(none, {}), DataError);
}

// Replays the trace against an independent open list: every popped node is
// the best remaining one, the best merit never drops, and the counter resets
// exactly on improvement.
TEST(Search, TraceReplayProperties) {
  Dataset d = small_search_data(3, 4, 180, 21);
  SearchConfig cfg;
  cfg.termination = 3;
  SearchResult r = best_first_search(d, cfg);
  const Schema& s = d.schema();
  auto key = [&](const EvaluatedSubset& e) {
    SubsetKey k = FeatureSubset(e.features).positions(s);
    std::sort(k.begin(), k.end());
    return k;
  };
  using Entry = std::tuple<double, std::size_t, SubsetKey>;
  auto worse = [](const Entry& a, const Entry& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
    return std::get<2>(a) < std::get<2>(b);
  };
  std::set<Entry, decltype(worse)> open(worse);
  auto first = r.trace.expansions.front().expanded;
  EXPECT_TRUE(first.features.empty());
  open.insert({first.merit, 0, {}});
  double best = -1.0;
  std::size_t stale = 0;
  for (const auto& e : r.trace.expansions) {
    ASSERT_FALSE(open.empty());
    Entry top = *open.begin();
    open.erase(open.begin());
    EXPECT_EQ(std::get<2>(top), key(e.expanded)) << "step " << e.step;
    EXPECT_EQ(std::get<0>(top), e.expanded.merit);
    bool improved = e.expanded.merit > best + cfg.improvement_epsilon;
    EXPECT_EQ(e.improved, improved);
    stale = improved ? 0 : stale + 1;
    EXPECT_EQ(e.non_improving, stale);
    if (improved) best = e.expanded.merit;
    EXPECT_EQ(e.best.merit, best);
    for (const auto& c : e.children) {
      auto k = key(c);
      EXPECT_EQ(k.size(), key(e.expanded).size() + 1);
      open.insert({c.merit, k.size(), k});
    }
  }
  EXPECT_EQ(r.trace.expansions.back().non_improving, cfg.termination);
  EXPECT_TRUE(r.trace.expansions.back().children.empty());
  EXPECT_EQ(r.trace.summary.at("stopped"), "termination");
  EXPECT_EQ(r.merit, best);
}

TEST(Search, ThreadCountDoesNotChangeTrace) {
  Dataset d = small_search_data(3, 5, 200, 8);
  SearchConfig one;
  one.seed = 6;
  SearchConfig four = one;
  four.threads = 4;
  auto a = best_first_search(d, one), b = best_first_search(d, four);
  EXPECT_EQ(dump_trace(a.trace), dump_trace(b.trace));
  EXPECT_EQ(dump_trace(a.trace), dump_trace(best_first_search(d, one).trace));
}

TEST(Search, SubsampleRecordedInHeader) {
  Dataset d = small_search_data(2, 2, 400, 9);
  SearchConfig cfg;
  cfg.subsample = 0.25;
  auto r = best_first_search(d, cfg);
  EXPECT_EQ(r.trace.header.at("rows"), 400);
  EXPECT_EQ(r.trace.header.at("search_rows"), 100);
}

TEST(Search, StopFlagInterrupts) {
  Dataset d = small_search_data(2, 2, 100, 9);
  std::atomic<bool> stop{true};
  SearchHooks hooks;
  hooks.stop = &stop;
  auto r = best_first_search(d, {}, hooks);
  EXPECT_EQ(r.trace.summary.at("stopped"), "interrupted");
  EXPECT_TRUE(r.best.empty());
}

TEST(Trace, WriteReadAndResume) {
  Dataset d = small_search_data(3, 3, 200, 12);
  SearchConfig cfg;
  testing_support::TempDir dir;
  std::string lines;
  SearchHooks hooks;
  hooks.on_record = [&](const nlohmann::json& j) { lines += j.dump() + "\n"; };
  SearchResult first = best_first_search(d, cfg, hooks);
  testing_support::write_text(dir / "t.jsonl", lines);
  LoadedTrace t = read_trace(dir / "t.jsonl");
  EXPECT_EQ(t.expansions, first.trace.expansions);
  ASSERT_TRUE(t.summary);
  EXPECT_EQ(t.summary->at("selected"), nlohmann::json(first.best.names()));

  // A cut-off final line is tolerated and the partial run resumes to the
  // same answer without refitting recorded subsets.
  std::string partial = lines.substr(0, lines.find('\n', lines.find('\n', lines.find('\n') + 1) + 1) + 1);
  partial += R"({"type":"expansion","step":2,"expa)";
  testing_support::write_text(dir / "p.jsonl", partial);
  LoadedTrace p = read_trace(dir / "p.jsonl");
  EXPECT_EQ(p.expansions.size(), 2u);
  EXPECT_FALSE(p.summary);
  SearchHooks resume;
  resume.preload = p.merits();
  SearchResult second = best_first_search(d, cfg, resume);
  EXPECT_EQ(second.trace.expansions, first.trace.expansions);
  EXPECT_EQ(second.evaluations, first.evaluations);
  EXPECT_LT(second.fits, first.fits);

  SearchHooks all;
  all.preload = t.merits();
  EXPECT_EQ(best_first_search(d, cfg, all).fits, 0u);

  testing_support::write_text(dir / "bad.jsonl", "{oops\n" + lines);
  EXPECT_THROW(read_trace(dir / "bad.jsonl"), DataError);
  EXPECT_THROW(read_trace(dir / "missing.jsonl"), ConfigError);
}

// ---- validation ------------------------------------------------------------------

TEST(Validate, EmptySubsetPredictsTrainingMajority) {
  Dataset tr = generate_synthetic({.rows = 100, .informative_numeric = 2, .class_balance = 0.6}, 1);
  Dataset te = generate_synthetic({.rows = 50, .informative_numeric = 2, .class_balance = 0.3}, 2);
  EvalReport r = validate_selection(tr, te, FeatureSubset{}, ClassifierSpec{TreeParams{}});
  EXPECT_EQ(r.encoded_width, 0u);
  EXPECT_EQ(r.confusion.tp + r.confusion.fp, 50u);
  EXPECT_EQ(r.feature_set, "custom");
}

TEST(Validate, SelectedBeatsNoiseOnly) {
  Dataset tr = small_search_data(3, 6, 600, 3);
  Dataset te = small_search_data(3, 6, 300, 4);
  auto sel = best_first_search(tr, {});
  EvalReport good = validate_selection(tr, te, sel.best, ClassifierSpec{TreeParams{}});
  EvalReport noise = validate_selection(tr, te, FeatureSubset({"noise_0", "noise_1"}), ClassifierSpec{TreeParams{}});
  EXPECT_GT(good.acc, noise.acc + 0.1);
  EvalReport svm = validate_selection(tr, te, sel.best, ClassifierSpec{LinSvmParams{}});
  EXPECT_FALSE(svm.note.empty());
}
