#include "ddavs/nd/array.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "ddavs/error.hpp"

namespace ddavs::nd {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Array::Array(Shape shape, double fill)
    : shape_(std::move(shape)), values_(shape_size(shape_), fill) {}

Array::Array(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_size(shape_) != values_.size()) {
    throw DimensionError("array shape " + shape_str(shape_) + " holds " +
                         std::to_string(shape_size(shape_)) + " values, got " +
                         std::to_string(values_.size()));
  }
}

Array Array::matrix(std::size_t rows, std::size_t cols,
                    std::initializer_list<double> values) {
  return Array({rows, cols}, std::vector<double>(values));
}

Array Array::vector(std::initializer_list<double> values) {
  return Array({values.size()}, std::vector<double>(values));
}

Array Array::identity(std::size_t n) {
  Array out({n, n});
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

std::size_t Array::rows() const noexcept {
  if (shape_.size() >= 2) return shape_[0];
  return shape_.empty() ? 0 : 1;
}

std::size_t Array::cols() const noexcept {
  if (shape_.size() >= 2) return values_.size() / shape_[0];
  return shape_.empty() ? 0 : shape_[0];
}

Array Array::reshaped(Shape shape) const {
  return Array(std::move(shape), values_);
}

Array& Array::operator+=(const Array& other) {
  if (other.values_.size() != values_.size()) {
    throw DimensionError("cannot accumulate " + shape_str(other.shape_) +
                         " into " + shape_str(shape_));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

void Array::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool Array::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

}  // namespace

void gemm(const Array& a, bool trans_a, const Array& b, bool trans_b, Array& c,
          double alpha, double beta) {
  const std::size_t m = trans_a ? a.cols() : a.rows();
  const std::size_t k = trans_a ? a.rows() : a.cols();
  const std::size_t kb = trans_b ? b.cols() : b.rows();
  const std::size_t n = trans_b ? b.rows() : b.cols();
  if (k != kb || c.rows() != m || c.cols() != n) {
    throw DimensionError("gemm shape mismatch: " + shape_str(a.shape()) +
                         (trans_a ? "^T" : "") + " x " + shape_str(b.shape()) +
                         (trans_b ? "^T" : "") + " -> " + shape_str(c.shape()));
  }
  if (m == 0 || n == 0) return;
  ConstMap ma(a.data(), static_cast<Eigen::Index>(a.rows()),
              static_cast<Eigen::Index>(a.cols()));
  ConstMap mb(b.data(), static_cast<Eigen::Index>(b.rows()),
              static_cast<Eigen::Index>(b.cols()));
  MutMap mc(c.data(), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  if (beta == 0.0) {
    mc.setZero();
  } else if (beta != 1.0) {
    mc *= beta;
  }
  if (k == 0) return;
  if (!trans_a && !trans_b) {
    mc.noalias() += alpha * (ma * mb);
  } else if (!trans_a && trans_b) {
    mc.noalias() += alpha * (ma * mb.transpose());
  } else if (trans_a && !trans_b) {
    mc.noalias() += alpha * (ma.transpose() * mb);
  } else {
    mc.noalias() += alpha * (ma.transpose() * mb.transpose());
  }
}

}  // namespace ddavs::nd
