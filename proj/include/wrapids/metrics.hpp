#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wrapids/classifier.hpp"
#include "wrapids/dataset.hpp"
#include "wrapids/error.hpp"

namespace wrapids {

// Attack is the positive class.
struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + tn + fp + fn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

inline ConfusionMatrix confusion(std::span<const Label> predicted, std::span<const Label> truth) {
  if (predicted.size() != truth.size()) {
    throw DataError("prediction and truth lengths differ (" + std::to_string(predicted.size()) + " vs " +
                    std::to_string(truth.size()) + ")");
  }
  if (predicted.empty()) throw DataError("cannot build a confusion matrix from no rows");
  ConfusionMatrix c;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == kAttack) (predicted[i] == kAttack ? c.tp : c.fn)++;
    else (predicted[i] == kAttack ? c.fp : c.tn)++;
  }
  return c;
}

// (TP + TN) / (TP + TN + FP + FN)
inline double accuracy(const ConfusionMatrix& c) {
  if (c.total() == 0) throw DataError("accuracy of an empty confusion matrix is undefined");
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

// TP / (TP + FN); undefined without attack rows.
inline std::optional<double> detection_rate(const ConfusionMatrix& c) {
  if (c.tp + c.fn == 0) return std::nullopt;
  return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

// FP / (FP + TN); undefined without normal rows.
inline std::optional<double> false_alert_rate(const ConfusionMatrix& c) {
  if (c.fp + c.tn == 0) return std::nullopt;
  return static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn);
}

// Percentage with two decimals, or "undefined".
inline std::string percent(std::optional<double> fraction) {
  if (!fraction) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *fraction * 100.0);
  return buf;
}

struct EvalReport {
  std::string classifier;   // kind name
  std::string feature_set;  // "full", "wrapper" or a custom tag
  std::size_t feature_count = 0;
  std::size_t encoded_width = 0;
  ConfusionMatrix confusion;
  double acc = 0.0;
  std::optional<double> dr;
  std::optional<double> far;
  double mbt_seconds = 0.0;  // fit + predict only; median when timing_runs > 1
  std::vector<double> mbt_runs;
  double preprocess_seconds = 0.0;
  std::string note;

  static EvalReport from_confusion(const ConfusionMatrix& c) {
    EvalReport r;
    r.confusion = c;
    r.acc = accuracy(c);
    r.dr = detection_rate(c);
    r.far = false_alert_rate(c);
    return r;
  }
};

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : (v[m - 1] + v[m]) / 2.0;
}

// Fits on `train` and predicts `test` under a monotonic clock; only the fit
// and predict calls are timed. With runs > 1 the model is rebuilt that many
// times and the median wall time is reported (metrics come from the first
// run; seeded fits make the runs identical).
inline EvalReport time_fit_eval(const ClassifierSpec& spec, const Dataset& train, const Dataset& test,
                                std::size_t runs = 1, TrainedModel* model_out = nullptr) {
  if (runs < 1) throw ConfigError("timing runs must be >= 1");
  std::vector<double> times;
  std::vector<Label> first_pred;
  for (std::size_t i = 0; i < runs; ++i) {
    auto start = std::chrono::steady_clock::now();
    TrainedModel m = fit(spec, train);
    std::vector<Label> pred = predict(m, test);
    auto stop = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double>(stop - start).count());
    if (i == 0) {
      first_pred = std::move(pred);
      if (model_out) *model_out = std::move(m);
    }
  }
  EvalReport r = EvalReport::from_confusion(confusion(first_pred, test.labels()));
  r.classifier = std::string(to_string(spec.kind()));
  r.mbt_runs = times;
  r.mbt_seconds = median(times);
  r.encoded_width = test.attribute_count();
  return r;
}

inline nlohmann::json to_json(const ConfusionMatrix& c) {
  return {{"tp", c.tp}, {"tn", c.tn}, {"fp", c.fp}, {"fn", c.fn}};
}

inline ConfusionMatrix confusion_from_json(const nlohmann::json& j) {
  return {j.at("tp").get<std::size_t>(), j.at("tn").get<std::size_t>(), j.at("fp").get<std::size_t>(),
          j.at("fn").get<std::size_t>()};
}

inline nlohmann::json to_json(const EvalReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {{"classifier", r.classifier},
          {"feature_set", r.feature_set},
          {"feature_count", r.feature_count},
          {"encoded_width", r.encoded_width},
          {"confusion", to_json(r.confusion)},
          {"acc", r.acc},
          {"dr", opt(r.dr)},
          {"far", opt(r.far)},
          {"mbt_seconds", r.mbt_seconds},
          {"mbt_runs", r.mbt_runs},
          {"preprocess_seconds", r.preprocess_seconds},
          {"note", r.note}};
}

// Metrics are recomputed from the stored confusion counts, so a reloaded
// report always satisfies the formula identities.
inline EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r = EvalReport::from_confusion(confusion_from_json(j.at("confusion")));
  r.classifier = j.at("classifier").get<std::string>();
  r.feature_set = j.at("feature_set").get<std::string>();
  r.feature_count = j.value("feature_count", std::size_t{0});
  r.encoded_width = j.value("encoded_width", std::size_t{0});
  r.mbt_seconds = j.value("mbt_seconds", 0.0);
  r.mbt_runs = j.value("mbt_runs", std::vector<double>{});
  r.preprocess_seconds = j.value("preprocess_seconds", 0.0);
  r.note = j.value("note", "");
  return r;
}

}  // namespace wrapids
