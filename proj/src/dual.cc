#include "elasticflow/dual.h"

#include <cmath>

#include "elasticflow/error.h"

namespace elasticflow {

DualTensor::DualTensor(Tensor p, Tensor t) : primal(std::move(p)), tangent(std::move(t)) {
  if (!primal.same_shape(tangent)) throw ShapeError("DualTensor", primal.shape(), tangent.shape());
}

DualTensor DualTensor::constant(Tensor p) {
  Tensor zero(p.shape());
  return DualTensor(std::move(p), std::move(zero));
}

DualTensor matmul(const DualTensor& a, const DualTensor& b) {
  Tensor value = matmul(a.primal, b.primal);
  Tensor d = add(matmul(a.tangent, b.primal), matmul(a.primal, b.tangent));
  return {std::move(value), std::move(d)};
}

DualTensor matmul(const DualTensor& a, const Tensor& b) {
  return {matmul(a.primal, b), matmul(a.tangent, b)};
}

DualTensor add(const DualTensor& a, const DualTensor& b) {
  return {add(a.primal, b.primal), add(a.tangent, b.tangent)};
}

DualTensor sub(const DualTensor& a, const DualTensor& b) {
  return {sub(a.primal, b.primal), sub(a.tangent, b.tangent)};
}

DualTensor mul(const DualTensor& a, const DualTensor& b) {
  Tensor d = add(mul(a.tangent, b.primal), mul(a.primal, b.tangent));
  return {mul(a.primal, b.primal), std::move(d)};
}

DualTensor scale(const DualTensor& a, Real s) { return {scale(a.primal, s), scale(a.tangent, s)}; }

DualTensor add_scalar(const DualTensor& a, Real s) { return {add_scalar(a.primal, s), a.tangent}; }

DualTensor add_row(const DualTensor& a, const DualTensor& row) {
  return {add_row(a.primal, row.primal), add_row(a.tangent, row.tangent)};
}

DualTensor mul_col(const DualTensor& a, const DualTensor& col) {
  Tensor d = add(mul_col(a.tangent, col.primal), mul_col(a.primal, col.tangent));
  return {mul_col(a.primal, col.primal), std::move(d)};
}

DualTensor affine(const DualTensor& x, const Tensor& w, const Tensor& b) {
  return {affine(x.primal, w, b), matmul(x.tangent, w)};
}

DualTensor silu(const DualTensor& a) {
  return {silu(a.primal), mul(silu_derivative(a.primal), a.tangent)};
}

DualTensor tanh(const DualTensor& a) {
  Tensor value = tanh(a.primal);
  Tensor d(a.shape());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = (Real(1) - value[i] * value[i]) * a.tangent[i];
  return {std::move(value), std::move(d)};
}

DualTensor sin(const DualTensor& a) { return {sin(a.primal), mul(cos(a.primal), a.tangent)}; }

DualTensor cos(const DualTensor& a) {
  return {cos(a.primal), scale(mul(sin(a.primal), a.tangent), Real(-1))};
}

DualTensor concat_cols(const DualTensor& a, const DualTensor& b) {
  return {concat_cols(a.primal, b.primal), concat_cols(a.tangent, b.tangent)};
}

DualTensor slice_cols(const DualTensor& a, std::size_t start, std::size_t length) {
  return {slice_cols(a.primal, start, length), slice_cols(a.tangent, start, length)};
}

DualTensor layer_norm_rows(const DualTensor& a) {
  Tensor inv_std;
  Tensor y = layer_norm_rows(a.primal, &inv_std);
  // dy = inv·(dx − mean(dx) − y·mean(y⊙dx)) per row.
  const std::size_t n = y.cols();
  Tensor d(y.shape());
  for (std::size_t i = 0; i < y.rows(); ++i) {
    Real mean_dx = 0, mean_ydx = 0;
    for (std::size_t j = 0; j < n; ++j) {
      mean_dx += a.tangent.at(i, j);
      mean_ydx += y.at(i, j) * a.tangent.at(i, j);
    }
    mean_dx /= Real(n);
    mean_ydx /= Real(n);
    for (std::size_t j = 0; j < n; ++j) {
      d.at(i, j) = inv_std[i] * (a.tangent.at(i, j) - mean_dx - y.at(i, j) * mean_ydx);
    }
  }
  return {std::move(y), std::move(d)};
}

DualTensor mean(const DualTensor& a) { return {mean(a.primal), mean(a.tangent)}; }

DualTensor sum_squares(const DualTensor& a) {
  Real acc = 0;
  for (std::size_t i = 0; i < a.primal.size(); ++i) acc += Real(2) * a.primal[i] * a.tangent[i];
  return {sum_squares(a.primal), Tensor::scalar(acc)};
}

DualTensor stop_gradient(const DualTensor& a) { return DualTensor::constant(a.primal); }

}  // namespace elasticflow
