#include "elasticflow/ops.h"

#include <cmath>

#include "elasticflow/error.h"

namespace elasticflow {

namespace {

void require_rank2(const char* op, const Tensor& a) {
  if (a.rank() != 2) throw ShapeError(op, "expected rank-2 tensor, got " + shape_string(a.shape()));
}

void require_same(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw ShapeError(op, a.shape(), b.shape());
}

template <class F>
Tensor map(const Tensor& a, F f) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
  return out;
}

template <class F>
Tensor zip(const char* op, const Tensor& a, const Tensor& b, F f) {
  require_same(op, a, b);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

Real sigmoid(Real x) { return Real(1) / (Real(1) + std::exp(-x)); }

}  // namespace

Tensor transpose(const Tensor& a) {
  require_rank2("transpose", a);
  const std::size_t m = a.rows(), n = a.cols();
  Tensor out = Tensor::matrix(n, m);
  const Real* src = a.data();
  Real* dst = out.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) dst[j * m + i] = src[i * n + j];
  }
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2("matmul", a);
  require_rank2("matmul", b);
  if (a.cols() != b.rows()) throw ShapeError("matmul", a.shape(), b.shape());
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out = Tensor::matrix(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    Real* __restrict o = out.data() + i * n;
    const Real* ar = a.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const Real av = ar[p];
      const Real* __restrict br = b.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) o[j] += av * br[j];
    }
  }
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_rank2("matmul_nt", a);
  require_rank2("matmul_nt", b);
  if (a.cols() != b.cols()) throw ShapeError("matmul_nt", a.shape(), b.shape());
  return matmul(a, transpose(b));
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  require_rank2("matmul_tn", a);
  require_rank2("matmul_tn", b);
  if (a.rows() != b.rows()) throw ShapeError("matmul_tn", a.shape(), b.shape());
  const std::size_t m = a.cols(), k = a.rows(), n = b.cols();
  Tensor out = Tensor::matrix(m, n);
  for (std::size_t p = 0; p < k; ++p) {
    const Real* ar = a.data() + p * m;
    const Real* __restrict br = b.data() + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const Real av = ar[i];
      Real* __restrict o = out.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) o[j] += av * br[j];
    }
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  return zip("add", a, b, [](Real x, Real y) { return x + y; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return zip("sub", a, b, [](Real x, Real y) { return x - y; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return zip("mul", a, b, [](Real x, Real y) { return x * y; });
}

Tensor scale(const Tensor& a, Real s) {
  return map(a, [s](Real x) { return x * s; });
}

Tensor add_scalar(const Tensor& a, Real s) {
  return map(a, [s](Real x) { return x + s; });
}

void add_inplace(Tensor& acc, const Tensor& b) {
  require_same("add_inplace", acc, b);
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += b[i];
}

Tensor add_row(const Tensor& a, const Tensor& row) {
  require_rank2("add_row", a);
  require_rank2("add_row", row);
  if (row.rows() != 1 || row.cols() != a.cols()) throw ShapeError("add_row", a.shape(), row.shape());
  Tensor out(a.shape());
  const std::size_t n = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = a[i * n + j] + row[j];
  }
  return out;
}

Tensor mul_col(const Tensor& a, const Tensor& col) {
  require_rank2("mul_col", a);
  require_rank2("mul_col", col);
  if (col.cols() != 1 || col.rows() != a.rows()) throw ShapeError("mul_col", a.shape(), col.shape());
  Tensor out(a.shape());
  const std::size_t n = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = a[i * n + j] * col[i];
  }
  return out;
}

Tensor sum_rows(const Tensor& a) {
  require_rank2("sum_rows", a);
  Tensor out = Tensor::matrix(1, a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out[j] += a.at(i, j);
  }
  return out;
}

Tensor row_dot(const Tensor& a, const Tensor& b) {
  require_rank2("row_dot", a);
  require_same("row_dot", a, b);
  Tensor out = Tensor::matrix(a.rows(), 1);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    Real acc = 0;
    for (std::size_t j = 0; j < a.cols(); ++j) acc += a.at(i, j) * b.at(i, j);
    out[i] = acc;
  }
  return out;
}

Tensor affine(const Tensor& x, const Tensor& w, const Tensor& b) {
  return add_row(matmul(x, w), b);
}

Tensor silu(const Tensor& a) {
  return map(a, [](Real x) { return x * sigmoid(x); });
}

Tensor silu_derivative(const Tensor& a) {
  return map(a, [](Real x) {
    const Real s = sigmoid(x);
    return s * (Real(1) + x * (Real(1) - s));
  });
}

Tensor tanh(const Tensor& a) {
  return map(a, [](Real x) { return std::tanh(x); });
}

Tensor sin(const Tensor& a) {
  return map(a, [](Real x) { return std::sin(x); });
}

Tensor cos(const Tensor& a) {
  return map(a, [](Real x) { return std::cos(x); });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  require_rank2("concat_cols", a);
  require_rank2("concat_cols", b);
  if (a.rows() != b.rows()) throw ShapeError("concat_cols", a.shape(), b.shape());
  const std::size_t na = a.cols(), nb = b.cols();
  Tensor out = Tensor::matrix(a.rows(), na + nb);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < na; ++j) out.at(i, j) = a.at(i, j);
    for (std::size_t j = 0; j < nb; ++j) out.at(i, na + j) = b.at(i, j);
  }
  return out;
}

Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t length) {
  require_rank2("slice_cols", a);
  if (start + length > a.cols()) {
    throw ShapeError("slice_cols", "columns [" + std::to_string(start) + "," +
                                       std::to_string(start + length) + ") out of range for " +
                                       shape_string(a.shape()));
  }
  Tensor out = Tensor::matrix(a.rows(), length);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < length; ++j) out.at(i, j) = a.at(i, start + j);
  }
  return out;
}

Tensor layer_norm_rows(const Tensor& a, Tensor* inv_std) {
  require_rank2("layer_norm_rows", a);
  const std::size_t n = a.cols();
  Tensor out(a.shape());
  if (inv_std) *inv_std = Tensor::matrix(a.rows(), 1);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const Real* x = a.data() + i * n;
    Real mu = 0;
    for (std::size_t j = 0; j < n; ++j) mu += x[j];
    mu /= Real(n);
    Real var = 0;
    for (std::size_t j = 0; j < n; ++j) var += (x[j] - mu) * (x[j] - mu);
    var /= Real(n);
    const Real inv = Real(1) / std::sqrt(var + kLayerNormEps);
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = (x[j] - mu) * inv;
    if (inv_std) (*inv_std)[i] = inv;
  }
  return out;
}

Tensor mean(const Tensor& a) {
  if (a.empty()) throw ShapeError("mean", "empty tensor");
  Real acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i];
  return Tensor::scalar(acc / Real(a.size()));
}

Tensor sum_squares(const Tensor& a) {
  Real acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * a[i];
  return Tensor::scalar(acc);
}

}  // namespace elasticflow
