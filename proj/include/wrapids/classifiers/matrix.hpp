#pragma once

#include <bit>
#include <cstring>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/beast/core/detail/base64.hpp>
#include <nlohmann/json.hpp>

#include "wrapids/dataset.hpp"
#include "wrapids/error.hpp"

namespace wrapids {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Row-major feature matrix of every attribute; all attributes must be numeric.
inline Matrix to_matrix(const Dataset& d) {
  const auto& attrs = d.schema().attributes();
  Matrix m(static_cast<Eigen::Index>(d.rows()), static_cast<Eigen::Index>(attrs.size()));
  for (std::size_t j = 0; j < attrs.size(); ++j) {
    if (d.schema()[attrs[j]].kind != ColumnKind::numeric) {
      throw DataError("column '" + d.schema()[attrs[j]].name +
                      "' is nominal; this classifier needs numeric input (enable encoding)");
    }
    auto col = d.numeric(attrs[j]);
    for (std::size_t r = 0; r < d.rows(); ++r) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = col[r];
  }
  return m;
}

inline std::vector<Label> labels_of(const Dataset& d) { return {d.labels().begin(), d.labels().end()}; }

// Dense matrices serialize as base64 of their little-endian IEEE-754 bytes,
// which keeps large kNN artifacts compact and bit-exact.
inline nlohmann::json matrix_to_json(const Matrix& m) {
  static_assert(std::endian::native == std::endian::little, "matrix blobs assume a little-endian host");
  namespace b64 = boost::beast::detail::base64;
  std::size_t bytes = static_cast<std::size_t>(m.size()) * sizeof(double);
  std::string out(b64::encoded_size(bytes), '\0');
  out.resize(b64::encode(out.data(), m.data(), bytes));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"encoding", "base64-f64le"}, {"data", out}};
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  namespace b64 = boost::beast::detail::base64;
  if (j.value("encoding", "") != "base64-f64le") throw ArtifactError("unsupported matrix encoding");
  auto rows = j.at("rows").get<Eigen::Index>();
  auto cols = j.at("cols").get<Eigen::Index>();
  const auto& text = j.at("data").get_ref<const std::string&>();
  Matrix m(rows, cols);
  std::size_t want = static_cast<std::size_t>(m.size()) * sizeof(double);
  if (text.size() != b64::encoded_size(want)) throw ArtifactError("matrix blob has the wrong size");
  std::vector<char> buf(b64::decoded_size(text.size()) + 8);
  auto written = b64::decode(buf.data(), text.data(), text.size()).first;
  if (written != want) throw ArtifactError("matrix blob has the wrong size");
  std::memcpy(m.data(), buf.data(), want);
  return m;
}

inline nlohmann::json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Vector vector_from_json(const nlohmann::json& j) {
  auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace wrapids
