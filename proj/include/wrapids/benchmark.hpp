#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wrapids/classifier.hpp"
#include "wrapids/csv.hpp"
#include "wrapids/metrics.hpp"
#include "wrapids/preprocess.hpp"

#ifndef WRAPIDS_VERSION
#define WRAPIDS_VERSION "unknown"
#endif

namespace wrapids {

inline constexpr const char* kVersion = WRAPIDS_VERSION;

struct FeatureSetSpec {
  std::string tag;  // "full", "wrapper" or a custom name
  FeatureSubset subset;
  std::optional<std::size_t> expected_width;  // checked after encoding
  std::string note;
};

struct BenchmarkConfig {
  std::vector<FeatureSetSpec> feature_sets;
  std::vector<ClassifierSpec> classifiers;
  PipelineOptions pipeline;
  std::size_t timing_runs = 1;
};

// Identification stamped onto every rendered report.
struct Provenance {
  std::string version = kVersion;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string train_fingerprint;
  std::string test_fingerprint;
};

inline std::string stand_in_note() { return "linear SVM stand-in, not comparable to the RBF-kernel SVM"; }

// Raises DataError naming the observed width when it differs from the expected one.
inline void check_encoded_width(const FeatureSetSpec& fs, std::size_t observed) {
  if (fs.expected_width && *fs.expected_width != observed) {
    throw DataError("feature set '" + fs.tag + "': encoded width is " + std::to_string(observed) + ", expected " +
                    std::to_string(*fs.expected_width));
  }
}

// One report per (feature set, classifier) cell, feature sets outermost.
// Preprocessing is fitted once per feature set. Cells run one at a time so
// timings do not contend; classifiers use their own thread settings.
inline std::vector<EvalReport> run_benchmark(const Dataset& train, const Dataset& test, const BenchmarkConfig& cfg) {
  if (cfg.feature_sets.empty()) throw ConfigError("benchmark needs at least one feature set");
  if (cfg.classifiers.empty()) throw ConfigError("benchmark needs at least one classifier");
  std::vector<EvalReport> out;
  for (const auto& fs : cfg.feature_sets) {
    auto t0 = std::chrono::steady_clock::now();
    Preprocessor pp = Preprocessor::fit(train, test, fs.subset, cfg.pipeline);
    Dataset tr = pp.apply(train);
    Dataset te = pp.apply(test);
    double prep = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    check_encoded_width(fs, tr.attribute_count());
    for (const auto& spec : cfg.classifiers) {
      EvalReport r = time_fit_eval(spec, tr, te, cfg.timing_runs);
      r.feature_set = fs.tag;
      r.feature_count = fs.subset.size();
      r.encoded_width = tr.attribute_count();
      r.preprocess_seconds = prep;
      std::vector<std::string> notes;
      if (spec.kind() == ClassifierKind::linsvm) notes.push_back(stand_in_note());
      if (!fs.note.empty()) notes.push_back(fs.note);
      for (std::size_t i = 0; i < notes.size(); ++i) r.note += (i ? "; " : "") + notes[i];
      out.push_back(std::move(r));
    }
  }
  return out;
}

inline std::string display_name_of(const EvalReport& r) {
  return ClassifierSpec::defaults(classifier_kind_from_string(r.classifier)).display_name();
}

namespace detail {

inline std::vector<std::string> distinct_in_order(const std::vector<EvalReport>& reports,
                                                  std::string EvalReport::*field) {
  std::vector<std::string> out;
  for (const auto& r : reports) {
    if (std::find(out.begin(), out.end(), r.*field) == out.end()) out.push_back(r.*field);
  }
  return out;
}

inline const EvalReport* cell(const std::vector<EvalReport>& reports, const std::string& fs, const std::string& clf) {
  for (const auto& r : reports) {
    if (r.feature_set == fs && r.classifier == clf) return &r;
  }
  return nullptr;
}

inline std::string seconds_text(double s) {
  char buf[32];
  if (s >= 60.0) std::snprintf(buf, sizeof buf, "%.2fm", s / 60.0);
  else std::snprintf(buf, sizeof buf, "%.3fs", s);
  return buf;
}

inline void write_provenance_lines(std::ostream& os, const Provenance& p) {
  os << "# wrapids " << p.version << "  seed " << p.seed << "  config " << p.config_hash << "\n";
  os << "# train " << p.train_fingerprint << "  test " << p.test_fingerprint << "\n";
}

inline std::string column_title(const std::vector<EvalReport>& reports, const std::string& fs) {
  for (const auto& r : reports) {
    if (r.feature_set == fs) return fs + " (" + std::to_string(r.feature_count) + " features, width " +
                                     std::to_string(r.encoded_width) + ")";
  }
  return fs;
}

inline void write_padded(std::ostream& os, const std::string& s, std::size_t width) {
  os << s;
  for (std::size_t i = s.size(); i < width; ++i) os << ' ';
}

inline std::vector<std::string> collect_notes(const std::vector<EvalReport>& reports) {
  std::vector<std::string> notes;
  for (const auto& r : reports) {
    std::stringstream ss(r.note);
    std::string part;
    while (std::getline(ss, part, ';')) {
      auto b = part.find_first_not_of(' ');
      if (b == std::string::npos) continue;
      part = part.substr(b);
      if (std::find(notes.begin(), notes.end(), part) == notes.end()) notes.push_back(part);
    }
  }
  return notes;
}

}  // namespace detail

// Classifier rows by feature-set column groups of ACC / DR / FAR percentages.
inline std::string render_performance_table(const std::vector<EvalReport>& reports, const Provenance& p) {
  auto sets = detail::distinct_in_order(reports, &EvalReport::feature_set);
  auto clfs = detail::distinct_in_order(reports, &EvalReport::classifier);
  constexpr std::size_t name_w = 8, cell_w = 10;
  std::ostringstream os;
  detail::write_provenance_lines(os, p);
  detail::write_padded(os, "", name_w);
  for (const auto& fs : sets) detail::write_padded(os, "| " + detail::column_title(reports, fs), 3 * cell_w + 2);
  os << "\n";
  detail::write_padded(os, "Model", name_w);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    os << "| ";
    for (const char* h : {"ACC", "DR", "FAR"}) detail::write_padded(os, h, cell_w);
  }
  os << "\n";
  for (const auto& c : clfs) {
    std::string name;
    for (const auto& fs : sets) {
      if (const auto* r = detail::cell(reports, fs, c)) name = display_name_of(*r);
    }
    detail::write_padded(os, name, name_w);
    for (const auto& fs : sets) {
      os << "| ";
      const auto* r = detail::cell(reports, fs, c);
      detail::write_padded(os, r ? percent(r->acc) : "-", cell_w);
      detail::write_padded(os, r ? percent(r->dr) : "-", cell_w);
      detail::write_padded(os, r ? percent(r->far) : "-", cell_w);
    }
    os << "\n";
  }
  for (const auto& n : detail::collect_notes(reports)) os << "* " << n << "\n";
  return os.str();
}

// Classifier rows by feature-set columns of model-building time.
inline std::string render_timing_table(const std::vector<EvalReport>& reports, const Provenance& p) {
  auto sets = detail::distinct_in_order(reports, &EvalReport::feature_set);
  auto clfs = detail::distinct_in_order(reports, &EvalReport::classifier);
  constexpr std::size_t name_w = 8, cell_w = 14;
  std::ostringstream os;
  detail::write_provenance_lines(os, p);
  detail::write_padded(os, "Model", name_w);
  for (const auto& fs : sets) detail::write_padded(os, "| " + fs, cell_w + 2);
  os << "\n";
  for (const auto& c : clfs) {
    std::string name;
    for (const auto& fs : sets) {
      if (const auto* r = detail::cell(reports, fs, c)) name = display_name_of(*r);
    }
    detail::write_padded(os, name, name_w);
    for (const auto& fs : sets) {
      const auto* r = detail::cell(reports, fs, c);
      detail::write_padded(os, "| " + (r ? detail::seconds_text(r->mbt_seconds) : std::string("-")), cell_w + 2);
    }
    os << "\n";
  }
  std::size_t runs = reports.empty() ? 0 : reports.front().mbt_runs.size();
  os << "* fit + predict wall time, preprocessing excluded";
  if (runs > 1) os << "; median of " << runs << " runs";
  os << "\n";
  return os.str();
}

inline std::vector<std::string> report_csv_header() {
  return {"version", "seed",  "config_hash",  "train_fingerprint", "test_fingerprint",
          "feature_set", "feature_count", "encoded_width", "classifier", "tp", "tn", "fp", "fn",
          "acc", "dr", "far", "mbt_seconds", "preprocess_seconds", "note"};
}

// One row per cell. Timing values are the last numeric columns.
inline std::string render_csv(const std::vector<EvalReport>& reports, const Provenance& p) {
  std::ostringstream os;
  csv::write_record(os, report_csv_header());
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("undefined"); };
  for (const auto& r : reports) {
    csv::write_record(os, {p.version, std::to_string(p.seed), p.config_hash, p.train_fingerprint,
                           p.test_fingerprint, r.feature_set, std::to_string(r.feature_count),
                           std::to_string(r.encoded_width), r.classifier, std::to_string(r.confusion.tp),
                           std::to_string(r.confusion.tn), std::to_string(r.confusion.fp),
                           std::to_string(r.confusion.fn), format_double(r.acc), opt(r.dr), opt(r.far),
                           format_double(r.mbt_seconds), format_double(r.preprocess_seconds), r.note});
  }
  return os.str();
}

inline nlohmann::json to_json(const Provenance& p) {
  return {{"version", p.version},
          {"seed", p.seed},
          {"config_hash", p.config_hash},
          {"train_fingerprint", p.train_fingerprint},
          {"test_fingerprint", p.test_fingerprint}};
}

inline nlohmann::json render_json(const std::vector<EvalReport>& reports, const Provenance& p) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& r : reports) cells.push_back(to_json(r));
  return {{"format", "wrapids-benchmark"}, {"provenance", to_json(p)}, {"reports", cells}};
}

inline std::vector<EvalReport> reports_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "wrapids-benchmark") throw ArtifactError("not a benchmark report");
  std::vector<EvalReport> out;
  for (const auto& r : j.at("reports")) out.push_back(report_from_json(r));
  return out;
}

}  // namespace wrapids
