#pragma once

#include "elasticflow/tensor.h"

// Value-level kernels on rank-2 tensors. The forward-mode (dual.h) and
// reverse-mode (tape.h) layers are written in terms of these. All reductions
// run left to right in index order, so results are bit-reproducible.
namespace elasticflow {

Tensor transpose(const Tensor& a);
Tensor matmul(const Tensor& a, const Tensor& b);     // a·b
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a·bᵀ
Tensor matmul_tn(const Tensor& a, const Tensor& b);  // aᵀ·b

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, Real s);
Tensor add_scalar(const Tensor& a, Real s);
void add_inplace(Tensor& acc, const Tensor& b);

// a[B,n] + row[1,n] broadcast over rows.
Tensor add_row(const Tensor& a, const Tensor& row);
// a[B,n] ⊙ col[B,1] broadcast over columns.
Tensor mul_col(const Tensor& a, const Tensor& col);
// Column sums: [B,n] -> [1,n].
Tensor sum_rows(const Tensor& a);
// Per-row inner product: [B,n],[B,n] -> [B,1].
Tensor row_dot(const Tensor& a, const Tensor& b);

// x·w + b with w stored [in,out] and b [1,out].
Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b);

Tensor silu(const Tensor& a);
Tensor silu_derivative(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor sin(const Tensor& a);
Tensor cos(const Tensor& a);

Tensor concat_cols(const Tensor& a, const Tensor& b);
Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t length);

inline constexpr Real kLayerNormEps = Real(1e-6);
// Per-row standardization without affine parameters. `inv_std` (if given)
// receives the [B,1] reciprocal standard deviations.
Tensor layer_norm_rows(const Tensor& a, Tensor* inv_std = nullptr);

Tensor mean(const Tensor& a);         // -> [1,1]
Tensor sum_squares(const Tensor& a);  // -> [1,1]

// Identity on values; only meaningful on the dual and tape layers.
inline Tensor stop_gradient(const Tensor& a) { return a; }

}  // namespace elasticflow
