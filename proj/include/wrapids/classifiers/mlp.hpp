#pragma once

#include <cmath>
#include <numeric>
#include <vector>

#include "wrapids/classifiers/matrix.hpp"
#include "wrapids/rng.hpp"

namespace wrapids {

enum class MlpSolver { adam, sgd };

struct MlpParams {
  std::size_t hidden = 100;
  std::size_t max_epochs = 200;
  std::size_t batch = 200;
  double learning_rate = 1e-3;
  double l2 = 1e-4;
  double tolerance = 1e-4;
  std::size_t patience = 10;  // epochs without tolerance-sized improvement before stopping
  MlpSolver solver = MlpSolver::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool shuffle = true;
  std::uint64_t seed = 0;
};

// One hidden rectifier layer feeding a single logistic output.
struct MlpWeights {
  Matrix w1;  // inputs x hidden
  Vector b1;  // hidden
  Vector w2;  // hidden
  double b2 = 0.0;

  static MlpWeights zeros(Eigen::Index inputs, Eigen::Index hidden) {
    return {Matrix::Zero(inputs, hidden), Vector::Zero(hidden), Vector::Zero(hidden), 0.0};
  }

  // Glorot-uniform initialization (gain 6 for the hidden layer, 2 for the
  // logistic output), biases drawn the same way.
  static MlpWeights glorot(Eigen::Index inputs, Eigen::Index hidden, std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0x31b));
    MlpWeights w = zeros(inputs, hidden);
    double b1 = std::sqrt(6.0 / static_cast<double>(inputs + hidden));
    for (Eigen::Index i = 0; i < w.w1.rows(); ++i)
      for (Eigen::Index j = 0; j < w.w1.cols(); ++j) w.w1(i, j) = (2.0 * uniform01(rng) - 1.0) * b1;
    for (Eigen::Index j = 0; j < hidden; ++j) w.b1[j] = (2.0 * uniform01(rng) - 1.0) * b1;
    double b2 = std::sqrt(2.0 / static_cast<double>(hidden + 1));
    for (Eigen::Index j = 0; j < hidden; ++j) w.w2[j] = (2.0 * uniform01(rng) - 1.0) * b2;
    w.b2 = (2.0 * uniform01(rng) - 1.0) * b2;
    return w;
  }

  friend bool operator==(const MlpWeights& a, const MlpWeights& b) {
    return a.w1 == b.w1 && a.b1 == b.b1 && a.w2 == b.w2 && a.b2 == b.b2;
  }
};

using MlpGradient = MlpWeights;

namespace detail {

inline double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }
inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace detail

// Output-layer pre-activations (logits) for every row.
inline Vector mlp_logits(const MlpWeights& w, const Matrix& x) {
  Matrix h = ((x * w.w1).rowwise() + w.b1.transpose()).cwiseMax(0.0);
  return (h * w.w2).array() + w.b2;
}

// Mean binary cross-entropy plus l2 / (2 * rows) times the squared weights
// (biases are not penalized).
inline double mlp_loss(const MlpWeights& w, const Matrix& x, std::span<const Label> y, double l2) {
  Vector z = mlp_logits(w, x);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) loss += detail::softplus(z[i]) - y[i] * z[i];
  const double n = static_cast<double>(x.rows());
  return loss / n + l2 / (2.0 * n) * (w.w1.squaredNorm() + w.w2.squaredNorm());
}

// Analytic gradient of mlp_loss by backpropagation. Writes the loss to `loss`
// when given.
inline MlpGradient mlp_gradient(const MlpWeights& w, const Matrix& x, std::span<const Label> y, double l2,
                                double* loss = nullptr) {
  if (x.rows() == 0) throw DataError("gradient needs a non-empty batch");
  const double n = static_cast<double>(x.rows());
  Matrix pre = (x * w.w1).rowwise() + w.b1.transpose();
  Matrix h = pre.cwiseMax(0.0);
  Vector z = (h * w.w2).array() + w.b2;
  Vector dz(z.size());
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    dz[i] = (detail::sigmoid(z[i]) - y[i]) / n;
    if (loss) total += detail::softplus(z[i]) - y[i] * z[i];
  }
  MlpGradient g;
  g.w2 = h.transpose() * dz + (l2 / n) * w.w2;
  g.b2 = dz.sum();
  Matrix dpre = (dz * w.w2.transpose()).cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
  g.w1 = x.transpose() * dpre + (l2 / n) * w.w1;
  g.b1 = dpre.colwise().sum().transpose();
  if (loss) *loss = total / n + l2 / (2.0 * n) * (w.w1.squaredNorm() + w.w2.squaredNorm());
  return g;
}

class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(MlpWeights w, std::vector<double> curve = {}) : w_(std::move(w)), loss_curve_(std::move(curve)) {}

  const MlpWeights& weights() const noexcept { return w_; }
  // Mean training loss per completed epoch.
  const std::vector<double>& loss_curve() const noexcept { return loss_curve_; }

  // Logit of P(attack | x); >= 0 predicts attack.
  std::vector<double> scores(const Matrix& x) const {
    if (x.cols() != w_.w1.rows()) throw SchemaMismatch("MLP input width does not match the training width");
    Vector z = mlp_logits(w_, x);
    return {z.data(), z.data() + z.size()};
  }

  nlohmann::json to_json() const {
    return {{"w1", matrix_to_json(w_.w1)}, {"b1", vector_to_json(w_.b1)}, {"w2", vector_to_json(w_.w2)},
            {"b2", w_.b2}, {"loss_curve", loss_curve_}};
  }

  static Mlp from_json(const nlohmann::json& j) {
    MlpWeights w{matrix_from_json(j.at("w1")), vector_from_json(j.at("b1")), vector_from_json(j.at("w2")),
                 j.at("b2").get<double>()};
    if (w.b1.size() != w.w1.cols() || w.w2.size() != w.w1.cols()) throw ArtifactError("MLP weights have inconsistent shapes");
    return Mlp(std::move(w), j.value("loss_curve", std::vector<double>{}));
  }

  friend bool operator==(const Mlp& a, const Mlp& b) { return a.w_ == b.w_; }

 private:
  MlpWeights w_;
  std::vector<double> loss_curve_;
};

inline void validate(const MlpParams& p) {
  if (p.hidden < 1) throw ConfigError("MLP hidden size must be >= 1");
  if (p.batch < 1) throw ConfigError("MLP batch size must be >= 1");
  if (!(p.learning_rate > 0.0)) throw ConfigError("MLP learning rate must be > 0");
  if (!(p.l2 >= 0.0)) throw ConfigError("MLP l2 must be >= 0");
}

// Mini-batch training. The solver is Adam with bias-corrected moments, or
// plain gradient descent at a constant rate. Training stops after max_epochs
// or once the epoch loss has failed to improve on the best loss by
// `tolerance` for `patience` consecutive epochs.
inline Mlp fit_mlp(const Matrix& x, std::span<const Label> y, const MlpParams& p) {
  validate(p);
  if (x.rows() == 0) throw DataError("cannot fit an MLP on an empty dataset");
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw DataError("rows and labels differ in length");
  const std::size_t n = static_cast<std::size_t>(x.rows());
  const std::size_t batch = std::min(p.batch, n);
  MlpWeights w = MlpWeights::glorot(x.cols(), static_cast<Eigen::Index>(p.hidden), p.seed);
  MlpWeights m1 = MlpWeights::zeros(x.cols(), static_cast<Eigen::Index>(p.hidden));
  MlpWeights m2 = m1;
  Rng rng(derive_seed(p.seed, 0x5f1));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> curve;
  double best = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  std::size_t step = 0;
  Matrix xb;
  std::vector<Label> yb;

  auto adam = [&](auto& param, const auto& grad, auto& mom1, auto& mom2, double rate) {
    mom1 = p.beta1 * mom1 + (1 - p.beta1) * grad;
    if constexpr (std::is_same_v<std::decay_t<decltype(param)>, double>) {
      mom2 = p.beta2 * mom2 + (1 - p.beta2) * grad * grad;
      param -= rate * mom1 / (std::sqrt(mom2) + p.epsilon);
    } else {
      mom2 = p.beta2 * mom2 + (1 - p.beta2) * grad.cwiseProduct(grad);
      param.array() -= rate * mom1.array() / (mom2.array().sqrt() + p.epsilon);
    }
  };

  for (std::size_t epoch = 0; epoch < p.max_epochs; ++epoch) {
    if (p.shuffle) shuffle(order, rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      std::size_t len = std::min(batch, n - start);
      xb.resize(static_cast<Eigen::Index>(len), x.cols());
      yb.resize(len);
      for (std::size_t i = 0; i < len; ++i) {
        xb.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(order[start + i]));
        yb[i] = y[order[start + i]];
      }
      double loss = 0.0;
      MlpGradient g = mlp_gradient(w, xb, yb, p.l2, &loss);
      epoch_loss += loss * static_cast<double>(len);
      ++step;
      if (p.solver == MlpSolver::sgd) {
        w.w1 -= p.learning_rate * g.w1;
        w.b1 -= p.learning_rate * g.b1;
        w.w2 -= p.learning_rate * g.w2;
        w.b2 -= p.learning_rate * g.b2;
      } else {
        double rate = p.learning_rate * std::sqrt(1 - std::pow(p.beta2, static_cast<double>(step))) /
                      (1 - std::pow(p.beta1, static_cast<double>(step)));
        adam(w.w1, g.w1, m1.w1, m2.w1, rate);
        adam(w.b1, g.b1, m1.b1, m2.b1, rate);
        adam(w.w2, g.w2, m1.w2, m2.w2, rate);
        adam(w.b2, g.b2, m1.b2, m2.b2, rate);
      }
    }
    epoch_loss /= static_cast<double>(n);
    curve.push_back(epoch_loss);
    if (epoch_loss > best - p.tolerance) ++stale;
    else stale = 0;
    best = std::min(best, epoch_loss);
    if (stale >= p.patience) break;
  }
  return Mlp(std::move(w), std::move(curve));
}

}  // namespace wrapids
