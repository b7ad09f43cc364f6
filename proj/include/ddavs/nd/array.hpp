#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace ddavs::nd {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major array of 64-bit floats.
///
/// One- and two-dimensional arrays are the common case; a 1-D array of
/// length n behaves as a 1 x n row for the matrix accessors.
class Array {
 public:
  Array() = default;
  explicit Array(Shape shape, double fill = 0.0);
  Array(Shape shape, std::vector<double> values);

  static Array matrix(std::size_t rows, std::size_t cols,
                      std::initializer_list<double> values);
  static Array vector(std::initializer_list<double> values);
  static Array scalar(double v) { return Array({1}, v); }
  static Array identity(std::size_t n);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t ndim() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  std::size_t rows() const noexcept;
  std::size_t cols() const noexcept;

  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  const std::vector<double>& storage() const noexcept { return values_; }

  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols() + c]; }

  /// Same values under a new shape of equal element count.
  Array reshaped(Shape shape) const;

  Array& operator+=(const Array& other);
  void fill(double v);

  bool all_finite() const noexcept;

  friend bool operator==(const Array& a, const Array& b) = default;

 private:
  Shape shape_;
  std::vector<double> values_;
};

/// C = alpha * op(A) * op(B) + beta * C for 2-D arrays.
void gemm(const Array& a, bool trans_a, const Array& b, bool trans_b, Array& c,
          double alpha = 1.0, double beta = 0.0);

}  // namespace ddavs::nd
