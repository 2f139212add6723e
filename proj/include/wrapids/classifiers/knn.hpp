#pragma once

#include <algorithm>
#include <queue>
#include <vector>

#include "wrapids/classifiers/matrix.hpp"
#include "wrapids/parallel.hpp"

namespace wrapids {

struct KnnParams {
  std::size_t k = 5;
  unsigned threads = 1;
};

// Brute-force Euclidean k-nearest-neighbors. Neighbors are ordered by exact
// squared distance, then by training row index.
class Knn {
 public:
  Knn() = default;
  Knn(Matrix train, std::vector<Label> labels, std::size_t k)
      : train_(std::move(train)), labels_(std::move(labels)), k_(k) {
    if (train_.rows() == 0) throw DataError("kNN needs at least one training row");
    if (static_cast<std::size_t>(train_.rows()) != labels_.size()) throw DataError("kNN rows and labels differ in length");
    if (k_ < 1) throw ConfigError("kNN k must be >= 1");
    if (k_ > labels_.size()) throw ConfigError("kNN k exceeds the number of training rows");
    norms_ = train_.rowwise().squaredNorm();
    max_norm_ = norms_.maxCoeff();
  }

  std::size_t k() const noexcept { return k_; }
  const Matrix& train() const noexcept { return train_; }
  const std::vector<Label>& labels() const noexcept { return labels_; }

  // Indices of the k nearest training rows for every query row.
  std::vector<std::vector<std::size_t>> neighbors(const Matrix& queries, unsigned threads = 1) const {
    check_width(queries);
    std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(queries.rows()));
    const std::size_t blocks = (out.size() + kBlock - 1) / kBlock;
    parallel_for(blocks, resolve_threads(threads), [&](std::size_t b) {
      Eigen::Index lo = static_cast<Eigen::Index>(b * kBlock);
      Eigen::Index hi = std::min<Eigen::Index>(queries.rows(), lo + static_cast<Eigen::Index>(kBlock));
      Matrix gram = queries.middleRows(lo, hi - lo) * train_.transpose();
      for (Eigen::Index q = lo; q < hi; ++q) out[static_cast<std::size_t>(q)] = nearest(queries, q, gram.row(q - lo));
    });
    return out;
  }

  // Attack fraction among the k nearest neighbors.
  std::vector<double> scores(const Matrix& queries, unsigned threads = 1) const {
    auto nn = neighbors(queries, threads);
    std::vector<double> out(nn.size());
    for (std::size_t i = 0; i < nn.size(); ++i) {
      std::size_t attacks = 0;
      for (std::size_t j : nn[i]) attacks += labels_[j];
      out[i] = static_cast<double>(attacks) / static_cast<double>(k_);
    }
    return out;
  }

  friend bool operator==(const Knn& a, const Knn& b) {
    return a.k_ == b.k_ && a.labels_ == b.labels_ && a.train_ == b.train_;
  }

 private:
  static constexpr std::size_t kBlock = 16;

  void check_width(const Matrix& q) const {
    if (q.cols() != train_.cols()) throw SchemaMismatch("kNN query width does not match the training width");
  }

  double exact_distance(const Matrix& queries, Eigen::Index q, Eigen::Index t) const {
    double s = 0.0;
    for (Eigen::Index j = 0; j < train_.cols(); ++j) {
      double d = queries(q, j) - train_(t, j);
      s += d * d;
    }
    return s;
  }

  // Screens with the Gram-matrix identity |q-x|^2 = |q|^2 + |x|^2 - 2 q.x, then
  // recomputes exact distances for everything within rounding slack of the
  // k-th screened distance.
  std::vector<std::size_t> nearest(const Matrix& queries, Eigen::Index q,
                                   const Eigen::Ref<const Eigen::RowVectorXd>& dots) const {
    const double qn = queries.row(q).squaredNorm();
    const Eigen::Index n = train_.rows();
    std::priority_queue<double> heap;
    for (Eigen::Index t = 0; t < n; ++t) {
      double approx = qn + norms_[t] - 2.0 * dots[t];
      if (heap.size() < k_) heap.push(approx);
      else if (approx < heap.top()) {
        heap.pop();
        heap.push(approx);
      }
    }
    const double slack = 1e-10 * (qn + max_norm_) + 1e-300;
    const double cutoff = heap.top() + 2.0 * slack;
    std::vector<std::pair<double, std::size_t>> cand;
    for (Eigen::Index t = 0; t < n; ++t) {
      double approx = qn + norms_[t] - 2.0 * dots[t];
      if (approx <= cutoff) cand.emplace_back(exact_distance(queries, q, t), static_cast<std::size_t>(t));
    }
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k_), cand.end());
    std::vector<std::size_t> out(k_);
    for (std::size_t i = 0; i < k_; ++i) out[i] = cand[i].second;
    return out;
  }

  Matrix train_;
  std::vector<Label> labels_;
  std::size_t k_ = 5;
  Vector norms_;
  double max_norm_ = 0.0;
};

}  // namespace wrapids
