#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "wrapids/error.hpp"

namespace wrapids::csv {

// RFC 4180 reader over an in-memory buffer. Accepts LF or CRLF line endings,
// quoted fields with embedded separators, doubled quotes, and line breaks.
class Reader {
 public:
  explicit Reader(std::string text) : text_(std::move(text)) {}

  static Reader from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return Reader(std::move(ss).str());
  }

  // Reads the next record into `fields`. Returns false at end of input.
  // A trailing empty line at end of file is not a record.
  bool next(std::vector<std::string>& fields) {
    if (pos_ >= text_.size()) return false;
    record_line_ = line_;
    std::size_t used = 0;
    auto field = [&]() -> std::string& {
      if (used == fields.size()) fields.emplace_back();
      std::string& f = fields[used++];
      f.clear();
      return f;
    };
    std::string* cur = &field();
    bool quoted = false;
    bool after_quote = false;
    while (pos_ < text_.size()) {
      char c = text_[pos_++];
      if (quoted) {
        if (c == '"') {
          if (pos_ < text_.size() && text_[pos_] == '"') {
            cur->push_back('"');
            ++pos_;
          } else {
            quoted = false;
            after_quote = true;
          }
        } else {
          if (c == '\n') ++line_;
          cur->push_back(c);
        }
        continue;
      }
      if (c == ',') {
        cur = &field();
        after_quote = false;
      } else if (c == '\n' || c == '\r') {
        if (c == '\r' && pos_ < text_.size() && text_[pos_] == '\n') ++pos_;
        ++line_;
        fields.resize(used);
        return true;
      } else if (c == '"' && cur->empty() && !after_quote) {
        quoted = true;
      } else {
        if (after_quote) {
          throw DataError("malformed quoted field on line " + std::to_string(record_line_));
        }
        cur->push_back(c);
      }
    }
    if (quoted) throw DataError("unterminated quoted field starting on line " + std::to_string(record_line_));
    fields.resize(used);
    return true;
  }

  // 1-based physical line where the last returned record started.
  std::size_t line() const noexcept { return record_line_; }

 private:
  std::string text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t record_line_ = 1;
};

inline bool needs_quoting(std::string_view s) {
  return s.find_first_of(",\"\r\n") != std::string_view::npos;
}

inline void write_field(std::ostream& out, std::string_view s) {
  if (!needs_quoting(s)) {
    out << s;
    return;
  }
  out << '"';
  for (char c : s) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

inline void write_record(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    write_field(out, fields[i]);
  }
  out << '\n';
}

}  // namespace wrapids::csv
