#include "elasticflow/tensor.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <numeric>

#include "elasticflow/error.h"

namespace elasticflow {

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

ShapeError::ShapeError(const std::string& op, const Shape& lhs, const Shape& rhs)
    : Error(op + ": incompatible shapes " + shape_string(lhs) + " and " +
            shape_string(rhs)) {}

ShapeError::ShapeError(const std::string& op, const std::string& detail)
    : Error(op + ": " + detail) {}

namespace {

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

}  // namespace

Tensor::Tensor(Shape shape, Real fill)
    : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<Real> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (data_.size() != element_count(shape_)) {
    throw ShapeError("Tensor", "shape " + shape_string(shape_) + " needs " +
                                   std::to_string(element_count(shape_)) +
                                   " values, got " + std::to_string(data_.size()));
  }
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, Real fill) {
  return Tensor({rows, cols}, fill);
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<Real>> rows) {
  const std::size_t n_rows = rows.size();
  const std::size_t n_cols = n_rows ? rows.begin()->size() : 0;
  std::vector<Real> values;
  values.reserve(n_rows * n_cols);
  for (const auto& r : rows) {
    if (r.size() != n_cols) throw ShapeError("Tensor::from_rows", "ragged rows");
    values.insert(values.end(), r.begin(), r.end());
  }
  return Tensor({n_rows, n_cols}, std::move(values));
}

Tensor Tensor::scalar(Real value) { return Tensor({1, 1}, value); }

Tensor Tensor::row(std::span<const Real> values) {
  return Tensor({1, values.size()}, std::vector<Real>(values.begin(), values.end()));
}

Tensor Tensor::column(std::span<const Real> values) {
  return Tensor({values.size(), 1}, std::vector<Real>(values.begin(), values.end()));
}

void Tensor::throw_not_matrix(const char* op) const {
  throw ShapeError(op, "expected rank-2 tensor, got " + shape_string(shape_));
}

std::span<Real> Tensor::row_span(std::size_t r) {
  const std::size_t c = cols();
  return std::span<Real>(data_).subspan(r * c, c);
}

std::span<const Real> Tensor::row_span(std::size_t r) const {
  const std::size_t c = cols();
  return std::span<const Real>(data_).subspan(r * c, c);
}

Real Tensor::item() const {
  if (data_.size() != 1) {
    throw ShapeError("item", "expected one element, got shape " + shape_string(shape_));
  }
  return data_[0];
}

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](Real v) { return std::isfinite(v); });
}

void Tensor::fill(Real value) { std::fill(data_.begin(), data_.end(), value); }

Tensor Tensor::reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

bool bitwise_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  return a.size() == 0 ||
         std::memcmp(a.data(), b.data(), a.size() * sizeof(Real)) == 0;
}

Real max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw ShapeError("max_abs_diff", a.shape(), b.shape());
  Real worst = 0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace elasticflow
