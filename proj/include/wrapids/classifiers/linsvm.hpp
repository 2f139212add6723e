#pragma once

#include <cmath>
#include <numeric>
#include <vector>

#include "wrapids/classifiers/matrix.hpp"
#include "wrapids/rng.hpp"

namespace wrapids {

struct LinSvmParams {
  double c = 1.0;
  std::size_t epochs = 20;
  std::uint64_t seed = 0;
};

// Primal soft-margin objective with the bias treated as an ordinary weight on
// a constant-1 feature: 0.5 * (|w|^2 + b^2) + C * sum(max(0, 1 - y_i (w.x_i + b))),
// labels mapped to {-1, +1}.
inline double svm_objective(const Vector& w, double b, const Matrix& x, std::span<const Label> y, double c) {
  double hinge = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double s = y[i] == kAttack ? 1.0 : -1.0;
    hinge += std::max(0.0, 1.0 - s * (x.row(i).dot(w) + b));
  }
  return 0.5 * (w.squaredNorm() + b * b) + c * hinge;
}

// Linear SVM stand-in: stochastic sub-gradient descent with step 1/(lambda t),
// lambda = 1/(C n), returning the average of the iterates from the second
// half of training.
class LinearSvm {
 public:
  LinearSvm() = default;
  LinearSvm(Vector w, double b) : w_(std::move(w)), b_(b) {}

  static LinearSvm fit(const Matrix& x, std::span<const Label> y, const LinSvmParams& p) {
    if (!(p.c > 0.0)) throw ConfigError("linsvm C must be > 0");
    if (p.epochs < 1) throw ConfigError("linsvm epochs must be >= 1");
    if (x.rows() == 0) throw DataError("cannot fit linsvm on an empty dataset");
    if (static_cast<std::size_t>(x.rows()) != y.size()) throw DataError("rows and labels differ in length");
    const std::size_t n = static_cast<std::size_t>(x.rows());
    const double lambda = 1.0 / (p.c * static_cast<double>(n));
    Vector w = Vector::Zero(x.cols());
    double b = 0.0;
    Vector w_avg = Vector::Zero(x.cols());
    double b_avg = 0.0;
    std::size_t averaged = 0;
    const std::size_t total = n * p.epochs;
    const std::size_t burn_in = total / 2;
    Rng rng(derive_seed(p.seed, 0x5e7));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t t = 0;
    for (std::size_t epoch = 0; epoch < p.epochs; ++epoch) {
      shuffle(order, rng);
      for (std::size_t i : order) {
        ++t;
        const double eta = 1.0 / (lambda * static_cast<double>(t));
        const double s = y[i] == kAttack ? 1.0 : -1.0;
        const auto row = x.row(static_cast<Eigen::Index>(i));
        const double margin = s * (row.dot(w) + b);
        const double shrink = 1.0 - eta * lambda;
        w *= shrink;
        b *= shrink;
        if (margin < 1.0) {
          w += (eta * s) * row.transpose();
          b += eta * s;
        }
        if (t > burn_in) {
          w_avg += w;
          b_avg += b;
          ++averaged;
        }
      }
    }
    w_avg /= static_cast<double>(averaged);
    b_avg /= static_cast<double>(averaged);
    return LinearSvm(std::move(w_avg), b_avg);
  }

  const Vector& weights() const noexcept { return w_; }
  double bias() const noexcept { return b_; }

  // Signed margin w.x + b; >= 0 predicts attack.
  std::vector<double> scores(const Matrix& x) const {
    if (x.cols() != w_.size()) throw SchemaMismatch("linsvm input width does not match the training width");
    Vector m = (x * w_).array() + b_;
    return {m.data(), m.data() + m.size()};
  }

  nlohmann::json to_json() const { return {{"w", vector_to_json(w_)}, {"b", b_}}; }
  static LinearSvm from_json(const nlohmann::json& j) {
    return LinearSvm(vector_from_json(j.at("w")), j.at("b").get<double>());
  }

  friend bool operator==(const LinearSvm& a, const LinearSvm& b) { return a.w_ == b.w_ && a.b_ == b.b_; }

 private:
  Vector w_;
  double b_ = 0.0;
};

}  // namespace wrapids
