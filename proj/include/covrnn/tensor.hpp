#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "covrnn/error.hpp"

namespace covrnn {

using Vector = std::vector<double>;

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw DimensionError("matrix data size " + std::to_string(data_.size()) +
                           " != " + std::to_string(rows_) + "x" +
                           std::to_string(cols_));
    }
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// An input sequence: one feature row per timestep.
class Sequence {
 public:
  Sequence() = default;
  Sequence(std::size_t steps, std::size_t features, double fill = 0.0)
      : values_(steps, features, fill) {}
  Sequence(std::size_t steps, std::size_t features, std::vector<double> data)
      : values_(steps, features, std::move(data)) {}

  std::size_t steps() const { return values_.rows(); }
  std::size_t features() const { return values_.cols(); }

  std::span<const double> step(std::size_t t) const { return values_.row(t); }
  std::span<double> step(std::size_t t) { return values_.row(t); }

  double& operator()(std::size_t t, std::size_t k) { return values_(t, k); }
  double operator()(std::size_t t, std::size_t k) const { return values_(t, k); }

  std::span<double> flat() { return values_.flat(); }
  std::span<const double> flat() const { return values_.flat(); }

  bool same_shape(const Sequence& other) const {
    return steps() == other.steps() && features() == other.features();
  }

  friend bool operator==(const Sequence&, const Sequence&) = default;

 private:
  Matrix values_;
};

// y = W x + b
inline Vector affine(const Matrix& w, std::span<const double> x,
                     std::span<const double> b) {
  Vector y(b.begin(), b.end());
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const auto row = w.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) acc += row[c] * x[c];
    y[r] += acc;
  }
  return y;
}

// out += W^T g
inline void accumulate_transposed(const Matrix& w, std::span<const double> g,
                                  std::span<double> out) {
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const auto row = w.row(r);
    const double gr = g[r];
    if (gr == 0.0) continue;
    for (std::size_t c = 0; c < row.size(); ++c) out[c] += row[c] * gr;
  }
}

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double l2_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace covrnn
