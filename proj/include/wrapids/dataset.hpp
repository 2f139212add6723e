#pragma once

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include "wrapids/csv.hpp"
#include "wrapids/error.hpp"

namespace wrapids {

using Label = std::uint8_t;  // 0 = normal, 1 = attack
inline constexpr Label kNormal = 0;
inline constexpr Label kAttack = 1;

enum class ColumnKind { numeric, nominal, label };

inline std::string_view to_string(ColumnKind k) {
  switch (k) {
    case ColumnKind::numeric: return "numeric";
    case ColumnKind::nominal: return "nominal";
    case ColumnKind::label: return "label";
  }
  return "?";
}

inline ColumnKind column_kind_from_string(std::string_view s) {
  if (s == "numeric") return ColumnKind::numeric;
  if (s == "nominal") return ColumnKind::nominal;
  if (s == "label") return ColumnKind::label;
  throw ConfigError("unknown column kind '" + std::string(s) + "'");
}

struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::numeric;
  std::size_t position = 0;

  friend bool operator==(const ColumnSchema&, const ColumnSchema&) = default;
};

// Ordered column list. Construction validates unique names, exactly one label
// column, and contiguous positions.
class Schema {
 public:
  Schema() = default;

  // Positions are assigned from list order.
  static Schema from_columns(std::vector<std::pair<std::string, ColumnKind>> cols) {
    std::vector<ColumnSchema> out;
    out.reserve(cols.size());
    for (std::size_t i = 0; i < cols.size(); ++i) out.push_back({std::move(cols[i].first), cols[i].second, i});
    return Schema(std::move(out));
  }

  explicit Schema(std::vector<ColumnSchema> columns) : columns_(std::move(columns)) {
    std::size_t labels = 0;
    for (std::size_t i = 0; i < columns_.size(); ++i) {
      const auto& c = columns_[i];
      if (c.position != i) throw ConfigError("schema positions must be contiguous from 0 (column '" + c.name + "')");
      if (c.name.empty()) throw ConfigError("schema column names must be non-empty");
      if (!index_.emplace(c.name, i).second) throw ConfigError("duplicate column name '" + c.name + "'");
      if (c.kind == ColumnKind::label) {
        ++labels;
        label_ = i;
      } else {
        attributes_.push_back(i);
      }
    }
    if (labels != 1) throw ConfigError("schema must have exactly one label column, found " + std::to_string(labels));
  }

  std::size_t size() const noexcept { return columns_.size(); }
  const ColumnSchema& operator[](std::size_t i) const { return columns_.at(i); }
  const std::vector<ColumnSchema>& columns() const noexcept { return columns_; }
  std::size_t label_position() const noexcept { return label_; }
  const std::string& label_name() const { return columns_[label_].name; }

  // Schema positions of every non-label column, in order.
  const std::vector<std::size_t>& attributes() const noexcept { return attributes_; }

  std::optional<std::size_t> find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t position_of(std::string_view name) const {
    auto p = find(name);
    if (!p) throw DataError("unknown column '" + std::string(name) + "'");
    return *p;
  }

  std::size_t count(ColumnKind k) const {
    std::size_t n = 0;
    for (const auto& c : columns_) n += c.kind == k;
    return n;
  }

  friend bool operator==(const Schema& a, const Schema& b) { return a.columns_ == b.columns_; }

 private:
  std::vector<ColumnSchema> columns_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::size_t> attributes_;
  std::size_t label_ = 0;
};

// Built-in schema of the published UNSW-NB15 training/testing CSV files.
inline Schema unsw_nb15_raw_schema() {
  using K = ColumnKind;
  static const char* const numeric_after_state[] = {
      "spkts", "dpkts", "sbytes", "dbytes", "rate", "sttl", "dttl", "sload", "dload", "sloss",
      "dloss", "sinpkt", "dinpkt", "sjit", "djit", "swin", "stcpb", "dtcpb", "dwin", "tcprtt",
      "synack", "ackdat", "smean", "dmean", "trans_depth", "response_body_len", "ct_srv_src",
      "ct_state_ttl", "ct_dst_ltm", "ct_src_dport_ltm", "ct_dst_sport_ltm", "ct_dst_src_ltm",
      "is_ftp_login", "ct_ftp_cmd", "ct_flw_http_mthd", "ct_src_ltm", "ct_srv_dst", "is_sm_ips_ports"};
  std::vector<std::pair<std::string, ColumnKind>> cols = {
      {"id", K::numeric}, {"dur", K::numeric}, {"proto", K::nominal}, {"service", K::nominal}, {"state", K::nominal}};
  for (const char* n : numeric_after_state) cols.emplace_back(n, K::numeric);
  cols.emplace_back("attack_cat", K::nominal);
  cols.emplace_back("label", K::label);
  return Schema::from_columns(std::move(cols));
}

// Columns removed before feature selection: the row id and the multi-class target.
inline std::vector<std::string> unsw_nb15_filtered_columns() { return {"id", "attack_cat"}; }

inline Schema builtin_schema(std::string_view name) {
  if (name == "unsw-nb15-raw") return unsw_nb15_raw_schema();
  throw ConfigError("unknown built-in schema '" + std::string(name) + "'");
}

struct NumericColumn {
  std::vector<double> values;
};

// Dictionary-encoded strings. `categories` lists distinct values in order of
// first appearance; `codes[r]` indexes into it.
struct NominalColumn {
  std::vector<std::uint32_t> codes;
  std::vector<std::string> categories;

  const std::string& at(std::size_t row) const { return categories[codes[row]]; }

  static NominalColumn from_strings(const std::vector<std::string>& cells) {
    NominalColumn col;
    std::unordered_map<std::string, std::uint32_t> seen;
    col.codes.reserve(cells.size());
    for (const auto& s : cells) {
      auto [it, fresh] = seen.emplace(s, static_cast<std::uint32_t>(col.categories.size()));
      if (fresh) col.categories.push_back(s);
      col.codes.push_back(it->second);
    }
    return col;
  }
};

using ColumnData = std::variant<NumericColumn, NominalColumn>;

struct ClassDistribution {
  std::size_t attack_count = 0;
  std::size_t normal_count = 0;
  double attack_fraction = 0.0;
};

// Immutable column-oriented table. Column storage is shared between datasets
// derived by dropping or projecting columns, so those operations never copy
// cell data.
class Dataset {
 public:
  Dataset() = default;

  // `columns` is indexed by schema position; the slot at the label position
  // is ignored and may hold any value.
  Dataset(Schema schema, std::vector<ColumnData> columns, std::vector<Label> labels)
      : schema_(std::move(schema)), rows_(labels.size()) {
    if (columns.size() != schema_.size()) {
      throw DataError("column count " + std::to_string(columns.size()) + " does not match schema size " +
                      std::to_string(schema_.size()));
    }
    columns_.resize(schema_.size());
    for (std::size_t p = 0; p < columns.size(); ++p) {
      if (p == schema_.label_position()) continue;
      columns_[p] = std::make_shared<const ColumnData>(std::move(columns[p]));
    }
    labels_ = std::make_shared<const std::vector<Label>>(std::move(labels));
    validate();
  }

  // Builds a dataset from already-shared column storage (used by transforms
  // that replace some columns and pass the rest through untouched).
  static Dataset from_shared(Schema schema, std::vector<std::shared_ptr<const ColumnData>> columns,
                             std::shared_ptr<const std::vector<Label>> labels) {
    Dataset out;
    out.schema_ = std::move(schema);
    if (columns.size() != out.schema_.size()) throw DataError("column count does not match schema size");
    out.columns_ = std::move(columns);
    out.columns_[out.schema_.label_position()] = nullptr;
    out.labels_ = labels ? std::move(labels) : std::make_shared<const std::vector<Label>>();
    out.rows_ = out.labels_->size();
    for (std::size_t p : out.schema_.attributes()) {
      if (!out.columns_[p]) throw DataError("missing data for column '" + out.schema_[p].name + "'");
    }
    out.validate();
    return out;
  }

  const Schema& schema() const noexcept { return schema_; }
  std::size_t rows() const noexcept { return rows_; }
  std::shared_ptr<const ColumnData> column_ptr(std::size_t position) const { return columns_.at(position); }
  std::shared_ptr<const std::vector<Label>> labels_ptr() const { return labels_; }
  std::size_t attribute_count() const noexcept { return schema_.attributes().size(); }

  std::span<const Label> labels() const { return labels_ ? std::span<const Label>(*labels_) : std::span<const Label>(); }

  const ColumnData& column(std::size_t position) const {
    if (position >= columns_.size() || !columns_[position]) {
      throw DataError("no attribute column at position " + std::to_string(position));
    }
    return *columns_[position];
  }

  std::span<const double> numeric(std::size_t position) const {
    const auto* c = std::get_if<NumericColumn>(&column(position));
    if (!c) throw DataError("column '" + schema_[position].name + "' is not numeric");
    return c->values;
  }

  const NominalColumn& nominal(std::size_t position) const {
    const auto* c = std::get_if<NominalColumn>(&column(position));
    if (!c) throw DataError("column '" + schema_[position].name + "' is not nominal");
    return *c;
  }

  // Cell rendered as text; numeric cells use the shortest round-trip form.
  std::string cell_text(std::size_t row, std::size_t position) const;

  // New dataset keeping the given attribute positions (in that order) plus the
  // label, which is always placed last.
  Dataset select_attributes(const std::vector<std::size_t>& positions) const {
    std::vector<ColumnSchema> cols;
    std::vector<std::shared_ptr<const ColumnData>> data;
    std::unordered_set<std::size_t> seen;
    for (std::size_t p : positions) {
      if (p >= schema_.size() || p == schema_.label_position()) {
        throw DataError("invalid attribute position " + std::to_string(p));
      }
      if (!seen.insert(p).second) throw DataError("duplicate column '" + schema_[p].name + "'");
      cols.push_back({schema_[p].name, schema_[p].kind, cols.size()});
      data.push_back(columns_[p]);
    }
    cols.push_back({schema_.label_name(), ColumnKind::label, cols.size()});
    data.push_back(nullptr);
    Dataset out;
    out.schema_ = Schema(std::move(cols));
    out.columns_ = std::move(data);
    out.labels_ = labels_;
    out.rows_ = rows_;
    return out;
  }

  // New dataset holding the given rows (repeats allowed) in that order.
  Dataset take_rows(std::span<const std::size_t> rows) const {
    Dataset out;
    out.schema_ = schema_;
    out.rows_ = rows.size();
    out.columns_.resize(columns_.size());
    for (std::size_t p = 0; p < columns_.size(); ++p) {
      if (!columns_[p]) continue;
      out.columns_[p] = std::make_shared<const ColumnData>(std::visit(
          [&](const auto& col) -> ColumnData {
            using T = std::decay_t<decltype(col)>;
            T sub;
            if constexpr (std::is_same_v<T, NumericColumn>) {
              sub.values.reserve(rows.size());
              for (std::size_t r : rows) sub.values.push_back(col.values.at(r));
            } else {
              // Re-derive first-appearance order for the subset.
              std::vector<std::int64_t> remap(col.categories.size(), -1);
              sub.codes.reserve(rows.size());
              for (std::size_t r : rows) {
                std::uint32_t c = col.codes.at(r);
                if (remap[c] < 0) {
                  remap[c] = static_cast<std::int64_t>(sub.categories.size());
                  sub.categories.push_back(col.categories[c]);
                }
                sub.codes.push_back(static_cast<std::uint32_t>(remap[c]));
              }
            }
            return sub;
          },
          *columns_[p]));
    }
    std::vector<Label> lab;
    lab.reserve(rows.size());
    for (std::size_t r : rows) lab.push_back(labels_->at(r));
    out.labels_ = std::make_shared<const std::vector<Label>>(std::move(lab));
    return out;
  }

  // Value equality: same schema, same labels, same cell values (nominal cells
  // compared as strings, numeric cells bitwise).
  friend bool operator==(const Dataset& a, const Dataset& b) {
    if (!(a.schema_ == b.schema_) || a.rows_ != b.rows_) return false;
    if (!std::equal(a.labels().begin(), a.labels().end(), b.labels().begin(), b.labels().end())) return false;
    for (std::size_t p : a.schema_.attributes()) {
      const auto& ca = a.column(p);
      const auto& cb = b.column(p);
      if (ca.index() != cb.index()) return false;
      if (const auto* na = std::get_if<NumericColumn>(&ca)) {
        const auto& nb = std::get<NumericColumn>(cb);
        for (std::size_t r = 0; r < a.rows_; ++r) {
          if (std::bit_cast<std::uint64_t>(na->values[r]) != std::bit_cast<std::uint64_t>(nb.values[r])) return false;
        }
      } else {
        const auto& xa = std::get<NominalColumn>(ca);
        const auto& xb = std::get<NominalColumn>(cb);
        for (std::size_t r = 0; r < a.rows_; ++r) {
          if (xa.at(r) != xb.at(r)) return false;
        }
      }
    }
    return true;
  }

 private:
  void validate() const {
    for (Label l : *labels_) {
      if (l > 1) throw DataError("label values must be 0 or 1");
    }
    for (std::size_t p : schema_.attributes()) {
      const auto& col = *columns_[p];
      const auto& cs = schema_[p];
      std::size_t len = std::visit(
          [](const auto& c) {
            if constexpr (std::is_same_v<std::decay_t<decltype(c)>, NumericColumn>) return c.values.size();
            else return c.codes.size();
          },
          col);
      if (len != rows_) {
        throw DataError("column '" + cs.name + "' has " + std::to_string(len) + " cells, expected " +
                        std::to_string(rows_));
      }
      if (cs.kind == ColumnKind::numeric) {
        const auto* num = std::get_if<NumericColumn>(&col);
        if (!num) throw DataError("column '" + cs.name + "' is declared numeric but holds categories");
        for (double v : num->values) {
          if (!std::isfinite(v)) throw DataError("column '" + cs.name + "' contains a non-finite value");
        }
      } else {
        const auto* nom = std::get_if<NominalColumn>(&col);
        if (!nom) throw DataError("column '" + cs.name + "' is declared nominal but holds numbers");
        for (auto c : nom->codes) {
          if (c >= nom->categories.size()) throw DataError("column '" + cs.name + "' has an invalid category code");
        }
      }
    }
  }

  Schema schema_;
  std::vector<std::shared_ptr<const ColumnData>> columns_;
  std::shared_ptr<const std::vector<Label>> labels_;
  std::size_t rows_ = 0;
};

inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string Dataset::cell_text(std::size_t row, std::size_t position) const {
  if (position == schema_.label_position()) return labels()[row] ? "1" : "0";
  const auto& col = column(position);
  if (const auto* n = std::get_if<NumericColumn>(&col)) return format_double(n->values[row]);
  return std::get<NominalColumn>(col).at(row);
}

namespace detail {

inline bool parse_double(std::string_view s, double& out) {
  // from_chars rejects a leading '+', which some exporters emit.
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  if (s.empty()) return false;
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace detail

// Loads an RFC 4180 CSV whose header row equals the schema names in order.
// Errors name the 1-based data row (the header is not counted) and the column.
inline Dataset load_csv(const std::filesystem::path& path, const Schema& schema) {
  if (!std::filesystem::exists(path)) throw ConfigError("file not found: " + path.string());
  auto reader = csv::Reader::from_file(path);
  std::vector<std::string> fields;
  if (!reader.next(fields)) throw DataError(path.string() + ": missing header row");
  if (!fields.empty() && fields[0].starts_with("\xEF\xBB\xBF")) fields[0].erase(0, 3);
  if (fields.size() != schema.size()) {
    throw DataError(path.string() + ": header has " + std::to_string(fields.size()) + " columns, schema expects " +
                    std::to_string(schema.size()));
  }
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (fields[i] != schema[i].name) {
      throw DataError(path.string() + ": header column " + std::to_string(i + 1) + " is '" + fields[i] +
                      "', schema expects '" + schema[i].name + "'");
    }
  }

  std::vector<std::vector<double>> numeric(schema.size());
  std::vector<std::vector<std::string>> nominal(schema.size());
  std::vector<Label> labels;
  std::size_t row = 0;
  while (reader.next(fields)) {
    ++row;
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
    auto where = [&](std::size_t col) {
      return path.string() + ": row " + std::to_string(row) + " (line " + std::to_string(reader.line()) +
             "), column '" + schema[col].name + "'";
    };
    if (fields.size() != schema.size()) {
      throw DataError(path.string() + ": row " + std::to_string(row) + " (line " + std::to_string(reader.line()) +
                      ") has " + std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(schema.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) {
      switch (schema[c].kind) {
        case ColumnKind::numeric: {
          double v;
          if (!detail::parse_double(fields[c], v)) {
            throw DataError(where(c) + ": cannot parse '" + fields[c] + "' as a finite number");
          }
          numeric[c].push_back(v);
          break;
        }
        case ColumnKind::nominal:
          nominal[c].push_back(fields[c]);
          break;
        case ColumnKind::label:
          if (fields[c] == "0") labels.push_back(kNormal);
          else if (fields[c] == "1") labels.push_back(kAttack);
          else throw DataError(where(c) + ": label '" + fields[c] + "' is not 0 or 1");
          break;
      }
    }
  }

  std::vector<ColumnData> cols(schema.size());
  for (std::size_t c = 0; c < schema.size(); ++c) {
    if (schema[c].kind == ColumnKind::numeric) cols[c] = NumericColumn{std::move(numeric[c])};
    else if (schema[c].kind == ColumnKind::nominal) cols[c] = NominalColumn::from_strings(nominal[c]);
  }
  return Dataset(schema, std::move(cols), std::move(labels));
}

inline void write_csv(std::ostream& out, const Dataset& d) {
  const auto& schema = d.schema();
  std::vector<std::string> fields(schema.size());
  for (std::size_t c = 0; c < schema.size(); ++c) fields[c] = schema[c].name;
  csv::write_record(out, fields);
  for (std::size_t r = 0; r < d.rows(); ++r) {
    for (std::size_t c = 0; c < schema.size(); ++c) fields[c] = d.cell_text(r, c);
    csv::write_record(out, fields);
  }
}

inline void write_csv(const std::filesystem::path& path, const Dataset& d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file: " + path.string());
  write_csv(out, d);
}

// Removes the named attribute columns; the label column cannot be dropped.
inline Dataset drop_columns(const Dataset& d, const std::vector<std::string>& names) {
  std::unordered_set<std::size_t> dropped;
  for (const auto& n : names) {
    auto p = d.schema().find(n);
    if (!p) throw DataError("cannot drop unknown column '" + n + "'");
    if (*p == d.schema().label_position()) throw DataError("cannot drop the label column '" + n + "'");
    dropped.insert(*p);
  }
  std::vector<std::size_t> keep;
  for (std::size_t p : d.schema().attributes()) {
    if (!dropped.contains(p)) keep.push_back(p);
  }
  return d.select_attributes(keep);
}

inline ClassDistribution class_distribution(const Dataset& d) {
  ClassDistribution out;
  for (Label l : d.labels()) (l == kAttack ? out.attack_count : out.normal_count)++;
  out.attack_fraction = d.rows() == 0 ? 0.0 : static_cast<double>(out.attack_count) / static_cast<double>(d.rows());
  return out;
}

}  // namespace wrapids
