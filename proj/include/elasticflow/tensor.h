#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace elasticflow {

#ifdef ELASTICFLOW_SINGLE_PRECISION
using Real = float;
#else
using Real = double;
#endif

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

// Dense row-major tensor. Ops in this library work on rank-2 tensors where
// rows are batch entries; other ranks are only stored and serialized.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, Real fill = Real(0));
  Tensor(Shape shape, std::vector<Real> values);

  static Tensor matrix(std::size_t rows, std::size_t cols, Real fill = Real(0));
  static Tensor from_rows(std::initializer_list<std::initializer_list<Real>> rows);
  static Tensor scalar(Real value);
  static Tensor row(std::span<const Real> values);
  static Tensor column(std::span<const Real> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  std::size_t rows() const {
    if (shape_.size() != 2) throw_not_matrix("rows");
    return shape_[0];
  }
  std::size_t cols() const {
    if (shape_.size() != 2) throw_not_matrix("cols");
    return shape_[1];
  }

  Real* data() { return data_.data(); }
  const Real* data() const { return data_.data(); }
  std::span<Real> values() { return data_; }
  std::span<const Real> values() const { return data_; }
  std::span<Real> row_span(std::size_t r);
  std::span<const Real> row_span(std::size_t r) const;

  Real& operator[](std::size_t i) { return data_[i]; }
  Real operator[](std::size_t i) const { return data_[i]; }
  Real& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  Real at(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  // Value of a single-element tensor.
  Real item() const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;
  void fill(Real value);
  Tensor reshaped(Shape shape) const;

 private:
  [[noreturn]] void throw_not_matrix(const char* op) const;
  Shape shape_;
  std::vector<Real> data_;
};

// Exact bit-pattern comparison (distinguishes -0.0 from 0.0).
bool bitwise_equal(const Tensor& a, const Tensor& b);

Real max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace elasticflow
