#pragma once

#include <utility>

#include "elasticflow/ops.h"
#include "elasticflow/tensor.h"

namespace elasticflow {

// Forward-mode value: a primal and its directional derivative of the same
// shape. Each op propagates both in one pass, so a Jacobian-vector product
// never materializes the Jacobian.
struct DualTensor {
  Tensor primal;
  Tensor tangent;

  DualTensor() = default;
  DualTensor(Tensor p, Tensor t);
  // Constant: zero tangent.
  static DualTensor constant(Tensor p);

  const Shape& shape() const { return primal.shape(); }
};

DualTensor matmul(const DualTensor& a, const DualTensor& b);
DualTensor matmul(const DualTensor& a, const Tensor& b);
DualTensor add(const DualTensor& a, const DualTensor& b);
DualTensor sub(const DualTensor& a, const DualTensor& b);
DualTensor mul(const DualTensor& a, const DualTensor& b);
DualTensor scale(const DualTensor& a, Real s);
DualTensor add_scalar(const DualTensor& a, Real s);
DualTensor add_row(const DualTensor& a, const DualTensor& row);
DualTensor mul_col(const DualTensor& a, const DualTensor& col);
DualTensor affine(const DualTensor& x, const Tensor& w, const Tensor& b);
DualTensor silu(const DualTensor& a);
DualTensor tanh(const DualTensor& a);
DualTensor sin(const DualTensor& a);
DualTensor cos(const DualTensor& a);
DualTensor concat_cols(const DualTensor& a, const DualTensor& b);
DualTensor slice_cols(const DualTensor& a, std::size_t start, std::size_t length);
DualTensor layer_norm_rows(const DualTensor& a);
DualTensor mean(const DualTensor& a);
DualTensor sum_squares(const DualTensor& a);
DualTensor stop_gradient(const DualTensor& a);

struct JvpResult {
  Tensor value;
  Tensor derivative;
};

// Evaluates f(input) and J_f(input)·tangent in one forward pass. `f` must be
// callable on DualTensor; using an op without a dual overload is rejected at
// compile time.
template <class F>
JvpResult jvp(F&& f, const Tensor& input, const Tensor& tangent);

}  // namespace elasticflow

#include "elasticflow/error.h"

namespace elasticflow {

template <class F>
JvpResult jvp(F&& f, const Tensor& input, const Tensor& tangent) {
  if (!input.same_shape(tangent)) throw ShapeError("jvp", input.shape(), tangent.shape());
  DualTensor out = std::forward<F>(f)(DualTensor(input, tangent));
  return {std::move(out.primal), std::move(out.tangent)};
}

}  // namespace elasticflow
