#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wrapids/benchmark.hpp"
#include "wrapids/classifier.hpp"
#include "wrapids/csv.hpp"
#include "wrapids/dataset.hpp"
#include "wrapids/hash.hpp"
#include "wrapids/preprocess.hpp"
#include "wrapids/synthetic.hpp"
#include "wrapids/wrapper.hpp"

namespace wrapids {

// ---- schema files ----------------------------------------------------------

inline nlohmann::json to_json(const Schema& s) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : s.columns()) cols.push_back({{"name", c.name}, {"kind", to_string(c.kind)}});
  return {{"columns", cols}};
}

inline Schema schema_from_json(const nlohmann::json& j) {
  std::vector<std::pair<std::string, ColumnKind>> cols;
  try {
    for (const auto& c : j.at("columns")) {
      cols.emplace_back(c.at("name").get<std::string>(), column_kind_from_string(c.at("kind").get<std::string>()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed schema: ") + e.what());
  }
  return Schema::from_columns(std::move(cols));
}

// Schema guessed from a CSV: columns whose every cell parses as a finite
// number are numeric, the rest nominal; `label` names the label column.
inline Schema infer_schema(const std::filesystem::path& path, const std::string& label = "label") {
  if (!std::filesystem::exists(path)) throw ConfigError("file not found: " + path.string());
  auto reader = csv::Reader::from_file(path);
  std::vector<std::string> header, fields;
  if (!reader.next(header)) throw DataError(path.string() + ": missing header row");
  if (!header.empty() && header[0].starts_with("\xEF\xBB\xBF")) header[0].erase(0, 3);
  std::vector<bool> numeric(header.size(), true);
  while (reader.next(fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    for (std::size_t c = 0; c < std::min(fields.size(), header.size()); ++c) {
      double v;
      if (numeric[c] && !detail::parse_double(fields[c], v)) numeric[c] = false;
    }
  }
  std::vector<std::pair<std::string, ColumnKind>> cols;
  bool found = false;
  for (std::size_t c = 0; c < header.size(); ++c) {
    ColumnKind k = numeric[c] ? ColumnKind::numeric : ColumnKind::nominal;
    if (header[c] == label) {
      k = ColumnKind::label;
      found = true;
    }
    cols.emplace_back(header[c], k);
  }
  if (!found) throw ConfigError(path.string() + ": no label column named '" + label + "'");
  return Schema::from_columns(std::move(cols));
}

// ---- run configuration -----------------------------------------------------

// Command-line values that replace individual config keys.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> output;
  std::optional<double> subsample;
  std::optional<std::string> model;
};

struct RunConfig {
  nlohmann::json effective;  // the config after overrides; its hash names the output directory
  std::filesystem::path base_dir;
  std::optional<std::filesystem::path> train;
  std::optional<std::filesystem::path> test;
  nlohmann::json schema = "unsw-nb15-raw";
  std::vector<std::string> drop;
  PipelineOptions pipeline;
  nlohmann::json features;      // null when absent
  nlohmann::json feature_sets;  // null when absent
  std::vector<ClassifierSpec> classifiers;
  SearchConfig search;
  SyntheticSpec synthetic;
  std::size_t synthetic_test_rows = 0;
  std::optional<std::filesystem::path> model;
  std::filesystem::path output = "wrapids-out";
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::size_t timing_runs = 1;

  // Threads and the output directory do not change results, so they are left out.
  std::string hash() const {
    nlohmann::json j = effective;
    j.erase("threads");
    j.erase("output");
    return fnv1a_hex(j.dump());
  }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<std::string_view> allowed,
                           const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

inline std::filesystem::path resolve_path(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

inline TreeParams tree_params_from_json(const nlohmann::json& j) {
  ClassifierSpec s = classifier_spec_from_json([&] {
    nlohmann::json t = j;
    t["kind"] = "tree";
    return t;
  }());
  return std::get<TreeParams>(s.params);
}

inline SearchConfig search_from_json(const nlohmann::json& j, std::uint64_t seed) {
  SearchConfig cfg;
  cfg.seed = seed;
  if (j.is_null()) return cfg;
  reject_unknown(j, {"folds", "termination", "seed", "improvement_epsilon", "subsample", "evaluator"}, "search");
  if (j.contains("folds")) cfg.folds = j.at("folds").get<std::size_t>();
  if (j.contains("termination")) {
    const auto& t = j.at("termination");
    if (t.is_string() && (t == "inf" || t == "none")) cfg.termination = 0;
    else if (t.is_number_unsigned()) cfg.termination = t.get<std::size_t>();
    else throw ConfigError("search.termination must be a non-negative integer or \"inf\"");
  }
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("improvement_epsilon")) cfg.improvement_epsilon = j.at("improvement_epsilon").get<double>();
  if (j.contains("subsample") && !j.at("subsample").is_null()) cfg.subsample = j.at("subsample").get<double>();
  if (j.contains("evaluator")) cfg.evaluator = tree_params_from_json(j.at("evaluator"));
  if (cfg.folds < 2) throw ConfigError("search.folds must be >= 2");
  if (cfg.subsample && !(*cfg.subsample > 0.0 && *cfg.subsample <= 1.0)) {
    throw ConfigError("search.subsample must lie in (0, 1]");
  }
  return cfg;
}

inline SyntheticSpec synthetic_from_json(const nlohmann::json& j, std::size_t& test_rows) {
  SyntheticSpec s;
  test_rows = 0;
  if (j.is_null()) return s;
  reject_unknown(j, {"rows", "test_rows", "informative_numeric", "noise_numeric", "nominal_features", "class_balance",
                     "separation"},
                 "synthetic");
  if (j.contains("rows")) s.rows = j.at("rows").get<std::size_t>();
  if (j.contains("test_rows")) test_rows = j.at("test_rows").get<std::size_t>();
  if (j.contains("informative_numeric")) s.informative_numeric = j.at("informative_numeric").get<std::size_t>();
  if (j.contains("noise_numeric")) s.noise_numeric = j.at("noise_numeric").get<std::size_t>();
  if (j.contains("nominal_features")) s.nominal_features = j.at("nominal_features").get<std::size_t>();
  if (j.contains("class_balance")) s.class_balance = j.at("class_balance").get<double>();
  if (j.contains("separation")) s.separation = j.at("separation").get<double>();
  validate(s);
  return s;
}

}  // namespace detail

// Builds a RunConfig from a parsed JSON document. Relative paths resolve
// against `base_dir` (the config file's directory).
inline RunConfig parse_run_config(nlohmann::json j, const std::filesystem::path& base_dir,
                                  const Overrides& o = {}) {
  if (j.is_null()) j = nlohmann::json::object();
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  if (o.seed) j["seed"] = *o.seed;
  if (o.threads) j["threads"] = *o.threads;
  if (o.output) j["output"] = *o.output;
  if (o.model) j["model"] = *o.model;
  if (o.subsample) j["search"]["subsample"] = *o.subsample;

  RunConfig c;
  c.effective = j;
  c.base_dir = base_dir;
  try {
    detail::reject_unknown(j,
                           {"train", "test", "schema", "label", "drop", "normalize", "encode", "vocabulary", "features",
                            "feature_sets", "classifiers", "search", "synthetic", "model", "output", "seed", "threads",
                            "timing_runs"},
                           "config");
    c.seed = j.value("seed", std::uint64_t{0});
    c.threads = j.value("threads", 1u);
    c.timing_runs = j.value("timing_runs", std::size_t{1});
    if (c.timing_runs < 1) throw ConfigError("timing_runs must be >= 1");
    if (j.contains("train")) c.train = detail::resolve_path(base_dir, j.at("train").get<std::string>());
    if (j.contains("test")) c.test = detail::resolve_path(base_dir, j.at("test").get<std::string>());
    if (j.contains("schema")) c.schema = j.at("schema");
    if (j.contains("label")) {
      if (!(c.schema.is_string() && c.schema == "infer")) throw ConfigError("'label' applies only to schema \"infer\"");
      c.schema = {{"infer", j.at("label").get<std::string>()}};
    }
    if (j.contains("drop")) c.drop = j.at("drop").get<std::vector<std::string>>();
    else if (c.schema.is_string() && c.schema == "unsw-nb15-raw") c.drop = unsw_nb15_filtered_columns();
    c.pipeline.normalize = j.value("normalize", true);
    c.pipeline.encode = j.value("encode", true);
    if (j.contains("vocabulary")) {
      auto v = j.at("vocabulary").get<std::string>();
      if (v == "train+test") c.pipeline.vocabulary = Vocabulary::train_then_test;
      else if (v == "train") c.pipeline.vocabulary = Vocabulary::train_only;
      else throw ConfigError("vocabulary must be \"train+test\" or \"train\"");
    }
    if (j.contains("features") && j.contains("feature_sets")) {
      throw ConfigError("config names both 'features' and 'feature_sets'; give exactly one feature source");
    }
    c.features = j.value("features", nlohmann::json());
    c.feature_sets = j.value("feature_sets", nlohmann::json());
    if (j.contains("classifiers")) {
      const auto& cl = j.at("classifiers");
      if (!cl.is_array()) throw ConfigError("'classifiers' must be an array");
      for (const auto& e : cl) {
        c.classifiers.push_back(e.is_string() ? classifier_spec_from_json({{"kind", e}}, c.seed)
                                              : classifier_spec_from_json(e, c.seed));
      }
    }
    for (auto& s : c.classifiers) s.set_threads(c.threads);
    c.search = detail::search_from_json(j.value("search", nlohmann::json()), c.seed);
    c.search.threads = c.threads;
    c.synthetic = detail::synthetic_from_json(j.value("synthetic", nlohmann::json()), c.synthetic_test_rows);
    if (j.contains("model")) c.model = detail::resolve_path(base_dir, j.at("model").get<std::string>());
    if (j.contains("output")) c.output = j.at("output").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config value has the wrong type: ") + e.what());
  }
  return c;
}

inline RunConfig load_run_config(const std::optional<std::filesystem::path>& path, const Overrides& o = {}) {
  if (!path) return parse_run_config(nlohmann::json::object(), {}, o);
  std::ifstream in(*path);
  if (!in) throw ConfigError("cannot open config file: " + path->string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path->string() + ": " + e.what());
  }
  return parse_run_config(std::move(j), path->parent_path(), o);
}

inline Schema resolve_schema(const RunConfig& c, const std::filesystem::path& data) {
  const auto& s = c.schema;
  if (s.is_string()) {
    if (s == "infer") return infer_schema(data);
    return builtin_schema(s.get<std::string>());
  }
  if (s.is_object() && s.contains("infer")) return infer_schema(data, s.at("infer").get<std::string>());
  if (s.is_object() && s.contains("columns")) return schema_from_json(s);
  if (s.is_object() && s.contains("from")) {
    auto p = detail::resolve_path(c.base_dir, s.at("from").get<std::string>());
    std::ifstream in(p);
    if (!in) throw ConfigError("cannot open schema file: " + p.string());
    try {
      return schema_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(p.string() + ": " + e.what());
    }
  }
  throw ConfigError("schema must be a built-in name, \"infer\", {\"columns\": [...]} or {\"from\": path}");
}

// Loads a split named by the config and applies the drop list.
inline Dataset load_split(const RunConfig& c, const std::optional<std::filesystem::path>& path, const char* which) {
  if (!path) throw ConfigError(std::string("config does not name a '") + which + "' file");
  if (!std::filesystem::exists(*path)) throw ConfigError(std::string(which) + " file not found: " + path->string());
  Dataset d = load_csv(*path, resolve_schema(c, *path));
  return c.drop.empty() ? d : drop_columns(d, c.drop);
}

// Feature names stored in a subset file or, for a .jsonl trace, its summary.
inline FeatureSubset read_subset_file(const std::filesystem::path& p) {
  if (p.extension() == ".jsonl") {
    LoadedTrace t = read_trace(p);
    if (!t.summary) throw DataError(p.string() + ": trace has no summary (search did not finish)");
    return FeatureSubset(t.summary->at("selected").get<std::vector<std::string>>());
  }
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot open feature file: " + p.string());
  try {
    auto j = nlohmann::json::parse(in);
    return FeatureSubset(j.at("features").get<std::vector<std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(p.string() + ": " + e.what());
  }
}

// "all" | "wrapper19" | [names] | {"from": path}. Names are checked against the schema.
inline FeatureSubset resolve_features(const nlohmann::json& spec, const Schema& schema,
                                      const std::filesystem::path& base_dir, std::string* note = nullptr) {
  FeatureSubset out;
  if (spec.is_null() || spec == "all") {
    out = FeatureSubset::all_of(schema);
  } else if (spec == "wrapper19") {
    out = wrapper19_subset();
    if (note) *note = wrapper19_note();
  } else if (spec.is_array()) {
    out = FeatureSubset(spec.get<std::vector<std::string>>());
  } else if (spec.is_object() && spec.contains("from")) {
    out = read_subset_file(detail::resolve_path(base_dir, spec.at("from").get<std::string>()));
  } else {
    throw ConfigError("features must be \"all\", \"wrapper19\", a list of names or {\"from\": path}");
  }
  out.positions(schema);  // validates names
  return out;
}

// Feature sets for a benchmark: 'feature_sets' entries or a single set from 'features'.
inline std::vector<FeatureSetSpec> resolve_feature_sets(const RunConfig& c, const Schema& schema) {
  std::vector<FeatureSetSpec> out;
  auto tag_of = [](const nlohmann::json& f) {
    if (f.is_null() || f == "all") return std::string("full");
    if (f == "wrapper19") return std::string("wrapper");
    return std::string("custom");
  };
  if (c.feature_sets.is_null()) {
    FeatureSetSpec fs;
    fs.tag = tag_of(c.features);
    fs.subset = resolve_features(c.features, schema, c.base_dir, &fs.note);
    out.push_back(std::move(fs));
    return out;
  }
  if (!c.feature_sets.is_array() || c.feature_sets.empty()) throw ConfigError("'feature_sets' must be a non-empty array");
  for (const auto& e : c.feature_sets) {
    FeatureSetSpec fs;
    nlohmann::json src = e;
    if (e.is_object() && !e.contains("from")) {
      detail::reject_unknown(e, {"tag", "features", "expected_width"}, "feature_sets entry");
      src = e.value("features", nlohmann::json());
      if (e.contains("expected_width")) fs.expected_width = e.at("expected_width").get<std::size_t>();
      fs.tag = e.value("tag", tag_of(src));
    } else {
      fs.tag = tag_of(src);
    }
    fs.subset = resolve_features(src, schema, c.base_dir, &fs.note);
    for (const auto& prev : out) {
      if (prev.tag == fs.tag) throw ConfigError("feature set tag '" + fs.tag + "' appears twice");
    }
    out.push_back(std::move(fs));
  }
  return out;
}

}  // namespace wrapids
