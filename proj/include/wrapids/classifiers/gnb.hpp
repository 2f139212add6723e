#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "wrapids/classifiers/matrix.hpp"

namespace wrapids {

struct GnbParams {
  // Added to every variance, relative to the largest feature variance.
  double var_smoothing = 1e-9;
};

class GaussianNB {
 public:
  GaussianNB() = default;

  static GaussianNB fit(const Matrix& x, std::span<const Label> y, const GnbParams& params = {}) {
    if (x.rows() == 0) throw DataError("Gaussian NB needs at least one training row");
    if (static_cast<std::size_t>(x.rows()) != y.size()) throw DataError("rows and labels differ in length");
    if (!(params.var_smoothing >= 0.0)) throw ConfigError("var_smoothing must be >= 0");
    const Eigen::Index d = x.cols();
    GaussianNB m;
    m.mean_ = Matrix::Zero(2, d);
    m.var_ = Matrix::Zero(2, d);
    std::array<std::size_t, 2> n{};
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      ++n[y[r]];
      m.mean_.row(y[r]) += x.row(r);
    }
    for (int c = 0; c < 2; ++c) {
      if (n[c]) m.mean_.row(c) /= static_cast<double>(n[c]);
    }
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      m.var_.row(y[r]) += (x.row(r) - m.mean_.row(y[r])).array().square().matrix();
    }
    for (int c = 0; c < 2; ++c) {
      if (n[c]) m.var_.row(c) /= static_cast<double>(n[c]);
    }
    double max_var = 0.0;
    if (d > 0) {
      Eigen::RowVectorXd mu = x.colwise().mean();
      max_var = ((x.rowwise() - mu).array().square().colwise().sum() / static_cast<double>(x.rows())).maxCoeff();
    }
    m.epsilon_ = params.var_smoothing * max_var;
    m.var_.array() += m.epsilon_;
    for (int c = 0; c < 2; ++c) {
      m.present_[c] = n[c] > 0;
      m.log_prior_[c] = n[c] ? std::log(static_cast<double>(n[c]) / static_cast<double>(x.rows()))
                             : -std::numeric_limits<double>::infinity();
      m.log_norm_[c] = 0.0;
      if (n[c]) {
        for (Eigen::Index j = 0; j < d; ++j) {
          if (!(m.var_(c, j) > 0.0)) throw DataError("Gaussian NB: zero variance with var_smoothing 0");
          m.log_norm_[c] -= 0.5 * std::log(2.0 * std::numbers::pi * m.var_(c, j));
        }
      }
    }
    return m;
  }

  // log P(c) + log P(x | c) for both classes; -inf for a class absent from training.
  std::array<double, 2> joint_log_likelihood(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
    std::array<double, 2> out{};
    for (int c = 0; c < 2; ++c) {
      if (!present_[c]) {
        out[c] = -std::numeric_limits<double>::infinity();
        continue;
      }
      double quad = ((row - mean_.row(c)).array().square() / var_.row(c).array()).sum();
      out[c] = log_prior_[c] + log_norm_[c] - 0.5 * quad;
    }
    return out;
  }

  // Posterior [P(normal|x), P(attack|x)] per row.
  Matrix posteriors(const Matrix& x) const {
    check_width(x);
    Matrix out(x.rows(), 2);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      auto jll = joint_log_likelihood(x.row(r));
      double top = std::max(jll[0], jll[1]);
      double norm = top + std::log(std::exp(jll[0] - top) + std::exp(jll[1] - top));
      out(r, 0) = std::exp(jll[0] - norm);
      out(r, 1) = std::exp(jll[1] - norm);
    }
    return out;
  }

  // Log-posterior difference log P(attack|x) - log P(normal|x).
  std::vector<double> scores(const Matrix& x) const {
    check_width(x);
    std::vector<double> out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      auto jll = joint_log_likelihood(x.row(r));
      if (!present_[0]) out[r] = std::numeric_limits<double>::infinity();
      else if (!present_[1]) out[r] = -std::numeric_limits<double>::infinity();
      else out[r] = jll[1] - jll[0];
    }
    return out;
  }

  const Matrix& means() const noexcept { return mean_; }
  const Matrix& variances() const noexcept { return var_; }
  std::array<double, 2> log_priors() const noexcept { return log_prior_; }

  nlohmann::json to_json() const {
    return {{"means", matrix_to_json(mean_)},
            {"variances", matrix_to_json(var_)},
            {"present", present_},
            {"epsilon", epsilon_},
            {"log_prior", {present_[0] ? log_prior_[0] : 0.0, present_[1] ? log_prior_[1] : 0.0}},
            {"log_norm", log_norm_}};
  }

  static GaussianNB from_json(const nlohmann::json& j) {
    GaussianNB m;
    m.mean_ = matrix_from_json(j.at("means"));
    m.var_ = matrix_from_json(j.at("variances"));
    m.present_ = j.at("present").get<std::array<bool, 2>>();
    m.epsilon_ = j.at("epsilon").get<double>();
    m.log_prior_ = j.at("log_prior").get<std::array<double, 2>>();
    m.log_norm_ = j.at("log_norm").get<std::array<double, 2>>();
    for (int c = 0; c < 2; ++c) {
      if (!m.present_[c]) m.log_prior_[c] = -std::numeric_limits<double>::infinity();
    }
    if (m.mean_.rows() != 2 || m.var_.rows() != 2 || m.mean_.cols() != m.var_.cols()) {
      throw ArtifactError("Gaussian NB parameters have inconsistent shapes");
    }
    return m;
  }

  friend bool operator==(const GaussianNB& a, const GaussianNB& b) {
    return a.mean_ == b.mean_ && a.var_ == b.var_ && a.present_ == b.present_ && a.log_prior_ == b.log_prior_;
  }

 private:
  void check_width(const Matrix& x) const {
    if (x.cols() != mean_.cols()) throw SchemaMismatch("Gaussian NB query width does not match the training width");
  }

  Matrix mean_;
  Matrix var_;
  std::array<bool, 2> present_{};
  std::array<double, 2> log_prior_{};
  std::array<double, 2> log_norm_{};
  double epsilon_ = 0.0;
};

}  // namespace wrapids
