#pragma once

#include <algorithm>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "wrapids/dataset.hpp"
#include "wrapids/error.hpp"

namespace wrapids {

// Ordered list of attribute names; never contains the label.
class FeatureSubset {
 public:
  FeatureSubset() = default;
  explicit FeatureSubset(std::vector<std::string> names) : names_(std::move(names)) {
    std::unordered_set<std::string> seen;
    for (const auto& n : names_) {
      if (!seen.insert(n).second) throw ConfigError("feature '" + n + "' listed twice");
    }
  }

  // Every attribute of the schema, in schema order.
  static FeatureSubset all_of(const Schema& schema) {
    std::vector<std::string> names;
    for (std::size_t p : schema.attributes()) names.push_back(schema[p].name);
    return FeatureSubset(std::move(names));
  }

  const std::vector<std::string>& names() const noexcept { return names_; }
  std::size_t size() const noexcept { return names_.size(); }
  bool empty() const noexcept { return names_.empty(); }

  // Schema positions in subset order; throws on unknown names or the label.
  std::vector<std::size_t> positions(const Schema& schema) const {
    std::vector<std::size_t> out;
    out.reserve(names_.size());
    for (const auto& n : names_) {
      auto p = schema.find(n);
      if (!p) throw DataError("unknown feature '" + n + "'");
      if (*p == schema.label_position()) throw DataError("the label column '" + n + "' cannot be a feature");
      out.push_back(*p);
    }
    return out;
  }

  friend bool operator==(const FeatureSubset&, const FeatureSubset&) = default;

 private:
  std::vector<std::string> names_;
};

// The published 19-feature wrapper selection. The source lists "stepb", which
// is not a UNSW-NB15 column; it is read as "stcpb" (see wrapper19_note()).
inline FeatureSubset wrapper19_subset() {
  return FeatureSubset({"proto", "service", "spkts", "sbytes", "dbytes", "dttl", "sloss", "dloss", "swin", "stcpb",
                        "trans_depth", "response_body_len", "ct_srv_src", "ct_src_dport_ltm", "ct_dst_sport_ltm",
                        "ct_dst_src_ltm", "ct_flw_http_mthd", "ct_src_ltm", "ct_srv_dst"});
}

inline std::string wrapper19_note() {
  return "wrapper19 preset: listed feature 'stepb' does not exist in UNSW-NB15 and was substituted with 'stcpb'";
}

// Keeps exactly the subset's columns (in subset order) plus the label.
inline Dataset project(const Dataset& d, const FeatureSubset& subset) {
  return d.select_attributes(subset.positions(d.schema()));
}

struct MinMax {
  std::string column;
  double min = 0.0;
  double max = 0.0;
  friend bool operator==(const MinMax&, const MinMax&) = default;
};

struct NormalizerStats {
  std::vector<MinMax> columns;

  const MinMax* find(std::string_view name) const {
    for (const auto& c : columns) {
      if (c.column == name) return &c;
    }
    return nullptr;
  }
  friend bool operator==(const NormalizerStats&, const NormalizerStats&) = default;
};

inline NormalizerStats fit_minmax(const Dataset& train) {
  if (train.rows() == 0) throw DataError("cannot fit min-max statistics on an empty dataset");
  NormalizerStats stats;
  for (std::size_t p : train.schema().attributes()) {
    if (train.schema()[p].kind != ColumnKind::numeric) continue;
    auto v = train.numeric(p);
    auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    stats.columns.push_back({train.schema()[p].name, *lo, *hi});
  }
  return stats;
}

// x' = (x - min) / (max - min); zero-range columns map to 0. Values outside
// the fitted range are not clipped.
inline double minmax_scale(double x, const MinMax& s) {
  double range = s.max - s.min;
  if (range == 0.0) return 0.0;
  return (x - s.min) / range;
}

inline Dataset apply_minmax(const NormalizerStats& stats, const Dataset& d) {
  const auto& schema = d.schema();
  std::vector<std::shared_ptr<const ColumnData>> cols(schema.size());
  for (std::size_t p : schema.attributes()) {
    if (schema[p].kind != ColumnKind::numeric) {
      cols[p] = d.column_ptr(p);
      continue;
    }
    const MinMax* s = stats.find(schema[p].name);
    if (!s) throw SchemaMismatch("numeric column '" + schema[p].name + "' has no fitted min-max statistics");
    auto in = d.numeric(p);
    NumericColumn out;
    out.values.resize(in.size());
    for (std::size_t r = 0; r < in.size(); ++r) out.values[r] = minmax_scale(in[r], *s);
    cols[p] = std::make_shared<const ColumnData>(std::move(out));
  }
  return Dataset::from_shared(schema, std::move(cols), d.labels_ptr());
}

enum class Vocabulary { train_then_test, train_only };

struct CategoryBlock {
  std::string column;
  std::vector<std::string> categories;  // output index = position in this list
  friend bool operator==(const CategoryBlock&, const CategoryBlock&) = default;
};

struct EncoderMap {
  std::vector<CategoryBlock> blocks;

  const CategoryBlock* find(std::string_view name) const {
    for (const auto& b : blocks) {
      if (b.column == name) return &b;
    }
    return nullptr;
  }
  friend bool operator==(const EncoderMap&, const EncoderMap&) = default;
};

namespace detail {

inline void append_first_appearance(const NominalColumn& col, std::vector<std::string>& vocab,
                                    std::unordered_set<std::string>& seen) {
  std::vector<bool> visited(col.categories.size(), false);
  for (auto code : col.codes) {
    if (visited[code]) continue;
    visited[code] = true;
    if (seen.insert(col.categories[code]).second) vocab.push_back(col.categories[code]);
  }
}

}  // namespace detail

// Vocabulary per nominal column: categories in order of first appearance over
// the training rows, then (by default) over the testing rows.
inline EncoderMap fit_onehot(const Dataset& train, const Dataset& test,
                             Vocabulary mode = Vocabulary::train_then_test) {
  if (!(train.schema() == test.schema())) throw SchemaMismatch("training and testing schemas differ");
  EncoderMap map;
  for (std::size_t p : train.schema().attributes()) {
    if (train.schema()[p].kind != ColumnKind::nominal) continue;
    CategoryBlock block{train.schema()[p].name, {}};
    std::unordered_set<std::string> seen;
    detail::append_first_appearance(train.nominal(p), block.categories, seen);
    if (mode == Vocabulary::train_then_test) detail::append_first_appearance(test.nominal(p), block.categories, seen);
    map.blocks.push_back(std::move(block));
  }
  return map;
}

inline std::string encoded_column_name(std::string_view column, std::string_view category) {
  return std::string(column) + "=" + std::string(category);
}

// Replaces each nominal column by one indicator column per vocabulary entry.
// Output order: numeric columns as they were, then the indicator blocks in
// nominal-column order, then the label. Unknown categories encode as all zeros.
inline Dataset apply_onehot(const EncoderMap& map, const Dataset& d) {
  const auto& schema = d.schema();
  std::vector<std::pair<std::string, ColumnKind>> names;
  std::vector<std::shared_ptr<const ColumnData>> cols;
  for (std::size_t p : schema.attributes()) {
    if (schema[p].kind != ColumnKind::numeric) continue;
    names.emplace_back(schema[p].name, ColumnKind::numeric);
    cols.push_back(d.column_ptr(p));
  }
  for (std::size_t p : schema.attributes()) {
    if (schema[p].kind != ColumnKind::nominal) continue;
    const CategoryBlock* block = map.find(schema[p].name);
    if (!block) throw SchemaMismatch("nominal column '" + schema[p].name + "' has no fitted vocabulary");
    const auto& col = d.nominal(p);
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < block->categories.size(); ++i) index.emplace(block->categories[i], i);
    std::vector<std::int64_t> slot(col.categories.size(), -1);
    for (std::size_t c = 0; c < col.categories.size(); ++c) {
      auto it = index.find(col.categories[c]);
      if (it != index.end()) slot[c] = static_cast<std::int64_t>(it->second);
    }
    std::vector<NumericColumn> indicators(block->categories.size());
    for (auto& ind : indicators) ind.values.assign(d.rows(), 0.0);
    for (std::size_t r = 0; r < d.rows(); ++r) {
      auto s = slot[col.codes[r]];
      if (s >= 0) indicators[static_cast<std::size_t>(s)].values[r] = 1.0;
    }
    for (std::size_t i = 0; i < indicators.size(); ++i) {
      names.emplace_back(encoded_column_name(block->column, block->categories[i]), ColumnKind::numeric);
      cols.push_back(std::make_shared<const ColumnData>(std::move(indicators[i])));
    }
  }
  names.emplace_back(schema.label_name(), ColumnKind::label);
  cols.push_back(nullptr);
  Schema out_schema;
  try {
    out_schema = Schema::from_columns(std::move(names));
  } catch (const ConfigError& e) {
    throw DataError(std::string("one-hot encoding produced clashing column names: ") + e.what());
  }
  return Dataset::from_shared(std::move(out_schema), std::move(cols), d.labels_ptr());
}

// Width after encoding without materializing the encoded table.
inline std::size_t encoded_width(const EncoderMap& map, const Schema& schema) {
  std::size_t width = 0;
  for (std::size_t p : schema.attributes()) {
    if (schema[p].kind == ColumnKind::numeric) {
      ++width;
    } else {
      const CategoryBlock* block = map.find(schema[p].name);
      if (!block) throw SchemaMismatch("nominal column '" + schema[p].name + "' has no fitted vocabulary");
      width += block->categories.size();
    }
  }
  return width;
}

struct PipelineOptions {
  bool normalize = true;
  bool encode = true;
  Vocabulary vocabulary = Vocabulary::train_then_test;
};

// Fitted projection -> normalization -> encoding chain. Fit on the training
// split (and the testing split's categories, for the vocabulary); reapply to
// any dataset with the original schema.
struct Preprocessor {
  FeatureSubset subset;
  std::optional<NormalizerStats> normalizer;
  std::optional<EncoderMap> encoder;

  static Preprocessor fit(const Dataset& train, const Dataset& test, const FeatureSubset& subset,
                          const PipelineOptions& opts = {}) {
    Preprocessor pp;
    pp.subset = subset;
    Dataset tr = project(train, subset);
    Dataset te = project(test, subset);
    if (opts.normalize) {
      pp.normalizer = fit_minmax(tr);
      tr = apply_minmax(*pp.normalizer, tr);
      te = apply_minmax(*pp.normalizer, te);
    }
    if (opts.encode) pp.encoder = fit_onehot(tr, te, opts.vocabulary);
    return pp;
  }

  Dataset apply(const Dataset& d) const {
    for (const auto& n : subset.names()) {
      auto p = d.schema().find(n);
      if (!p || d.schema()[*p].kind == ColumnKind::label) {
        throw SchemaMismatch("preprocessing expects column '" + n + "', which the data does not provide");
      }
    }
    Dataset out = project(d, subset);
    if (normalizer) out = apply_minmax(*normalizer, out);
    if (encoder) out = apply_onehot(*encoder, out);
    return out;
  }
};

inline constexpr int kPreprocessFormatVersion = 1;

inline nlohmann::json to_json(const NormalizerStats& s) {
  nlohmann::json cols = nlohmann::json::array();
  for (const auto& c : s.columns) cols.push_back({{"column", c.column}, {"min", c.min}, {"max", c.max}});
  return {{"columns", cols}};
}

inline NormalizerStats normalizer_from_json(const nlohmann::json& j) {
  NormalizerStats s;
  for (const auto& c : j.at("columns")) {
    MinMax m{c.at("column").get<std::string>(), c.at("min").get<double>(), c.at("max").get<double>()};
    if (!(m.min <= m.max)) throw ArtifactError("normalizer column '" + m.column + "' has min > max");
    s.columns.push_back(std::move(m));
  }
  return s;
}

inline nlohmann::json to_json(const EncoderMap& m) {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : m.blocks) blocks.push_back({{"column", b.column}, {"categories", b.categories}});
  return {{"blocks", blocks}};
}

inline EncoderMap encoder_from_json(const nlohmann::json& j) {
  EncoderMap m;
  for (const auto& b : j.at("blocks")) {
    CategoryBlock block{b.at("column").get<std::string>(), b.at("categories").get<std::vector<std::string>>()};
    std::unordered_set<std::string> seen(block.categories.begin(), block.categories.end());
    if (seen.size() != block.categories.size()) throw ArtifactError("duplicate category in block '" + block.column + "'");
    m.blocks.push_back(std::move(block));
  }
  return m;
}

inline nlohmann::json to_json(const Preprocessor& pp) {
  nlohmann::json j = {{"format", "wrapids-preprocess"}, {"version", kPreprocessFormatVersion}, {"features", pp.subset.names()}};
  j["normalizer"] = pp.normalizer ? to_json(*pp.normalizer) : nlohmann::json(nullptr);
  j["encoder"] = pp.encoder ? to_json(*pp.encoder) : nlohmann::json(nullptr);
  return j;
}

inline Preprocessor preprocessor_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "wrapids-preprocess") throw ArtifactError("not a preprocessing artifact");
  if (j.value("version", -1) != kPreprocessFormatVersion) {
    throw ArtifactError("unsupported preprocessing artifact version " + j.value("version", nlohmann::json()).dump());
  }
  Preprocessor pp;
  pp.subset = FeatureSubset(j.at("features").get<std::vector<std::string>>());
  if (!j.at("normalizer").is_null()) pp.normalizer = normalizer_from_json(j.at("normalizer"));
  if (!j.at("encoder").is_null()) pp.encoder = encoder_from_json(j.at("encoder"));
  return pp;
}

}  // namespace wrapids
