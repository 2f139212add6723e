#include <gtest/gtest.h>

#include <random>

#include "oracles/oracles.hpp"
#include "support.hpp"
#include "wrapids/benchmark.hpp"
#include "wrapids/synthetic.hpp"
#include "wrapids/wrapper.hpp"

using namespace wrapids;

TEST(Metrics, WorkedExample) {
  ConfusionMatrix c{.tp = 90, .tn = 80, .fp = 20, .fn = 10};
  EXPECT_DOUBLE_EQ(accuracy(c), 0.85);
  EXPECT_DOUBLE_EQ(*detection_rate(c), 0.9);
  EXPECT_DOUBLE_EQ(*false_alert_rate(c), 0.2);
  EXPECT_EQ(percent(accuracy(c)), "85.00");
}

TEST(Metrics, ReferenceMatrixRendersAsPublished) {
  ConfusionMatrix c{.tp = 44403, .tn = 26740, .fp = 10260, .fn = 929};
  EXPECT_EQ(percent(accuracy(c)), oracle::percent_2dp(c.tp + c.tn, c.total()));
  EXPECT_EQ(percent(detection_rate(c)), oracle::percent_2dp(c.tp, c.tp + c.fn));
  EXPECT_EQ(percent(false_alert_rate(c)), oracle::percent_2dp(c.fp, c.fp + c.tn));
  EXPECT_EQ(percent(accuracy(c)), "86.41");
  EXPECT_EQ(percent(detection_rate(c)), "97.95");
  EXPECT_EQ(percent(false_alert_rate(c)), "27.73");
}

TEST(Metrics, PerfectAndAllAttackClassifiers) {
  ConfusionMatrix perfect{.tp = 5, .tn = 7};
  EXPECT_EQ(accuracy(perfect), 1.0);
  EXPECT_EQ(*detection_rate(perfect), 1.0);
  EXPECT_EQ(*false_alert_rate(perfect), 0.0);
  // Everything flagged on a test split of 45332 attacks and 37000 normals.
  ConfusionMatrix all{.tp = 45332, .tn = 0, .fp = 37000, .fn = 0};
  EXPECT_EQ(*detection_rate(all), 1.0);
  EXPECT_EQ(*false_alert_rate(all), 1.0);
  EXPECT_EQ(percent(accuracy(all)), "55.06");
}

TEST(Metrics, UndefinedRatesAndErrors) {
  ConfusionMatrix normals_only{.tn = 3, .fp = 1};
  EXPECT_FALSE(detection_rate(normals_only));
  EXPECT_EQ(percent(detection_rate(normals_only)), "undefined");
  ConfusionMatrix attacks_only{.tp = 3, .fn = 1};
  EXPECT_FALSE(false_alert_rate(attacks_only));
  EXPECT_THROW(accuracy(ConfusionMatrix{}), DataError);
  std::vector<Label> a{1, 0}, b{1};
  EXPECT_THROW(confusion(a, b), DataError);
  EXPECT_THROW(confusion(std::vector<Label>{}, std::vector<Label>{}), DataError);
}

TEST(Metrics, ConfusionCountsCells) {
  std::vector<Label> truth{1, 1, 0, 0, 1};
  std::vector<Label> pred{1, 0, 1, 0, 1};
  EXPECT_EQ(confusion(pred, truth), (ConfusionMatrix{.tp = 2, .tn = 1, .fp = 1, .fn = 1}));
}

// ACC equals the class-weighted mix of DR and (1 - FAR) on random matrices,
// and every rate stays in [0, 1].
TEST(Metrics, IdentityOnRandomMatrices) {
  std::mt19937_64 gen(17);
  std::uniform_int_distribution<std::size_t> u(0, 100000);
  for (int i = 0; i < 1000; ++i) {
    ConfusionMatrix c{u(gen) + 1, u(gen) + 1, u(gen), u(gen)};
    double p = static_cast<double>(c.tp + c.fn), n = static_cast<double>(c.fp + c.tn);
    double mixed = (*detection_rate(c) * p + (1.0 - *false_alert_rate(c)) * n) / (p + n);
    EXPECT_NEAR(accuracy(c), mixed, 1e-12);
    for (double v : {accuracy(c), *detection_rate(c), *false_alert_rate(c)}) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Metrics, ScaleAndRelabelInvariance) {
  std::mt19937_64 gen(5);
  std::uniform_int_distribution<std::size_t> u(1, 1000);
  for (int i = 0; i < 200; ++i) {
    ConfusionMatrix c{u(gen), u(gen), u(gen), u(gen)};
    ConfusionMatrix scaled{c.tp * 7, c.tn * 7, c.fp * 7, c.fn * 7};
    EXPECT_DOUBLE_EQ(accuracy(scaled), accuracy(c));
    EXPECT_DOUBLE_EQ(*detection_rate(scaled), *detection_rate(c));
    // Swapping the positive class turns DR into 1 - FAR.
    ConfusionMatrix swapped{c.tn, c.tp, c.fn, c.fp};
    EXPECT_DOUBLE_EQ(accuracy(swapped), accuracy(c));
    EXPECT_NEAR(*detection_rate(swapped), 1.0 - *false_alert_rate(c), 1e-12);
  }
}

TEST(Metrics, MedianOfRuns) {
  EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median({4.0, 1.0}), 2.5);
  EXPECT_EQ(median({}), 0.0);
}

TEST(Metrics, ReportJsonRoundTrip) {
  EvalReport r = EvalReport::from_confusion({.tp = 9, .tn = 0, .fp = 0, .fn = 1});
  r.classifier = "knn";
  r.feature_set = "full";
  r.encoded_width = 12;
  r.mbt_runs = {0.5, 0.25};
  r.mbt_seconds = 0.375;
  r.note = "n";
  EvalReport back = report_from_json(nlohmann::json::parse(to_json(r).dump()));
  EXPECT_EQ(back.confusion, r.confusion);
  EXPECT_EQ(back.acc, r.acc);
  EXPECT_EQ(back.dr, r.dr);
  EXPECT_FALSE(back.far);
  EXPECT_EQ(back.mbt_runs, r.mbt_runs);
  EXPECT_EQ(back.note, "n");
}

TEST(Metrics, TimedFitMatchesDirectPrediction) {
  Dataset all = generate_synthetic({.rows = 500, .informative_numeric = 2, .noise_numeric = 2}, 1);
  std::vector<std::size_t> a, b;
  for (std::size_t r = 0; r < all.rows(); ++r) (r < 300 ? a : b).push_back(r);
  Dataset tr = all.take_rows(a), te = all.take_rows(b);
  ClassifierSpec spec{TreeParams{}};
  EvalReport r = time_fit_eval(spec, tr, te, 3);
  EXPECT_EQ(r.mbt_runs.size(), 3u);
  EXPECT_EQ(r.mbt_seconds, median(r.mbt_runs));
  EXPECT_EQ(r.confusion, confusion(predict(fit(spec, tr), te), te.labels()));
  EXPECT_THROW(time_fit_eval(spec, tr, te, 0), ConfigError);
}

// ---- benchmark grid ------------------------------------------------------------

namespace {

struct Splits {
  Dataset train, test;
};

Splits mixed_splits() {
  SyntheticSpec s{.rows = 600, .informative_numeric = 3, .noise_numeric = 2, .nominal_features = 2};
  Dataset all = generate_synthetic(s, 31);
  std::vector<std::size_t> a, b;
  for (std::size_t r = 0; r < all.rows(); ++r) (r % 3 ? a : b).push_back(r);
  return {all.take_rows(a), all.take_rows(b)};
}

}  // namespace

TEST(Benchmark, SingleCellEqualsValidation) {
  auto [tr, te] = mixed_splits();
  FeatureSubset subset({"inf_0", "inf_1", "nom_0"});
  ClassifierSpec spec{KnnParams{.k = 3}};
  BenchmarkConfig cfg{{{"mine", subset, std::nullopt, ""}}, {spec}, {}, 1};
  auto reports = run_benchmark(tr, te, cfg);
  ASSERT_EQ(reports.size(), 1u);
  EvalReport direct = validate_selection(tr, te, subset, spec);
  EXPECT_EQ(reports[0].confusion, direct.confusion);
  EXPECT_EQ(reports[0].encoded_width, direct.encoded_width);
  EXPECT_EQ(reports[0].feature_set, "mine");
  EXPECT_EQ(reports[0].feature_count, 3u);
}

TEST(Benchmark, WidthMismatchNamesObservedWidth) {
  auto [tr, te] = mixed_splits();
  FeatureSubset subset = FeatureSubset::all_of(tr.schema());
  BenchmarkConfig cfg{{{"full", subset, 999, ""}}, {ClassifierSpec{GnbParams{}}}, {}, 1};
  std::size_t observed = Preprocessor::fit(tr, te, subset).apply(tr).attribute_count();
  try {
    run_benchmark(tr, te, cfg);
    FAIL() << "expected a width mismatch";
  } catch (const DataError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("encoded width is " + std::to_string(observed)), std::string::npos) << msg;
    EXPECT_NE(msg.find("999"), std::string::npos) << msg;
  }
  cfg.feature_sets[0].expected_width = observed;
  EXPECT_NO_THROW(run_benchmark(tr, te, cfg));
}

TEST(Benchmark, GridOrderNotesAndRenderers) {
  auto [tr, te] = mixed_splits();
  BenchmarkConfig cfg;
  cfg.feature_sets = {{"full", FeatureSubset::all_of(tr.schema()), std::nullopt, ""},
                      {"small", FeatureSubset({"inf_0", "nom_1"}), std::nullopt, "hand picked"}};
  cfg.classifiers = {ClassifierSpec{GnbParams{}}, ClassifierSpec{LinSvmParams{}}};
  auto reports = run_benchmark(tr, te, cfg);
  ASSERT_EQ(reports.size(), 4u);
  EXPECT_EQ(reports[0].feature_set, "full");
  EXPECT_EQ(reports[1].classifier, "linsvm");
  EXPECT_EQ(reports[2].feature_set, "small");
  EXPECT_EQ(reports[1].note, stand_in_note());
  EXPECT_EQ(reports[3].note, stand_in_note() + "; hand picked");
  EXPECT_EQ(reports[2].note, "hand picked");

  Provenance prov{.seed = 4, .config_hash = "abc123"};
  std::string perf = render_performance_table(reports, prov);
  EXPECT_NE(perf.find("abc123"), std::string::npos);
  EXPECT_NE(perf.find("SVM*"), std::string::npos);
  EXPECT_NE(perf.find(percent(reports[0].acc)), std::string::npos);
  EXPECT_NE(perf.find("* " + stand_in_note()), std::string::npos);
  std::string timing = render_timing_table(reports, prov);
  EXPECT_NE(timing.find("preprocessing excluded"), std::string::npos);

  std::string csv = render_csv(reports, prov);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
  EXPECT_EQ(csv.substr(0, csv.find('\n')).find("version,seed,config_hash"), 0u);

  auto back = reports_from_json(nlohmann::json::parse(render_json(reports, prov).dump()));
  ASSERT_EQ(back.size(), reports.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].confusion, reports[i].confusion);
    EXPECT_EQ(back[i].note, reports[i].note);
  }
  EXPECT_THROW(reports_from_json({{"format", "other"}}), ArtifactError);
}

TEST(Benchmark, EmptyGridIsConfigError) {
  auto [tr, te] = mixed_splits();
  EXPECT_THROW(run_benchmark(tr, te, {}), ConfigError);
  BenchmarkConfig cfg{{{"full", FeatureSubset::all_of(tr.schema()), std::nullopt, ""}}, {}, {}, 1};
  EXPECT_THROW(run_benchmark(tr, te, cfg), ConfigError);
}
