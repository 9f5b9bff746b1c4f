#include "elasticflow/tape.h"

#include <cmath>

#include "elasticflow/error.h"
#include "elasticflow/ops.h"

namespace elasticflow {

const Tensor& Var::value() const {
  if (!tape_) throw PreconditionError("Var: not attached to a tape");
  return tape_->value(id_);
}

bool Var::requires_grad() const { return tape_ && tape_->requires_grad(id_); }

Var Tape::constant(Tensor value) { return record(std::move(value), false, nullptr); }

Var Tape::variable(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, true, false, nullptr, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(ParameterStore& store, const std::string& name) {
  Var v = variable(store.value(name));
  nodes_.back().sink = &store.grad(name);
  return v;
}

Var Tape::record(Tensor value, bool requires_grad, Backward backward) {
  if (!requires_grad) backward = nullptr;
  nodes_.push_back(Node{std::move(value), {}, requires_grad, false, std::move(backward), nullptr});
  return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(std::size_t id, const Tensor& g) {
  Node& node = nodes_[id];
  if (!node.requires_grad) return;
  if (!node.value.same_shape(g)) throw ShapeError("backward", node.value.shape(), g.shape());
  if (!node.has_grad) {
    node.grad = g;
    node.has_grad = true;
  } else {
    add_inplace(node.grad, g);
  }
}

void Tape::backward(const Var& loss) {
  if (loss.tape() != this) throw PreconditionError("backward: loss belongs to another tape");
  if (loss.value().size() != 1) {
    throw ShapeError("backward", "loss must be a scalar, got shape " + shape_string(loss.shape()));
  }
  for (Node& node : nodes_) {
    node.has_grad = false;
    node.grad = Tensor();
  }
  accumulate(loss.id(), Tensor(loss.shape(), Real(1)));
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (node.has_grad && node.backward) node.backward(*this, node.grad);
  }
  for (Node& node : nodes_) {
    if (node.sink && node.has_grad) add_inplace(*node.sink, node.grad);
  }
}

const Tensor& Tape::grad(const Var& v) const {
  const Node& node = nodes_[v.id()];
  if (!node.has_grad) throw PreconditionError("grad: no gradient recorded for this value");
  return node.grad;
}

namespace {

Tape& shared_tape(const char* op, const Var& a, const Var& b) {
  if (!a.tape() || a.tape() != b.tape()) throw PreconditionError(std::string(op) + ": operands on different tapes");
  return *a.tape();
}

Tape& own_tape(const Var& a) {
  if (!a.tape()) throw PreconditionError("Var: not attached to a tape");
  return *a.tape();
}

template <class F>
Var elementwise(const Var& a, Tensor value, F local_derivative) {
  Tape& t = own_tape(a);
  const std::size_t ia = a.id();
  return t.record(std::move(value), a.requires_grad(),
                  [ia, local_derivative](Tape& tape, const Tensor& g) {
                    tape.accumulate(ia, mul(g, local_derivative(tape.value(ia))));
                  });
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  Tape& t = shared_tape("matmul", a, b);
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(matmul(a.value(), b.value()), a.requires_grad() || b.requires_grad(),
                  [ia, ib](Tape& tape, const Tensor& g) {
                    if (tape.requires_grad(ia)) tape.accumulate(ia, matmul_nt(g, tape.value(ib)));
                    if (tape.requires_grad(ib)) tape.accumulate(ib, matmul_tn(tape.value(ia), g));
                  });
}

Var matmul(const Var& a, const Tensor& b) { return matmul(a, own_tape(a).constant(b)); }

Var add(const Var& a, const Var& b) {
  Tape& t = shared_tape("add", a, b);
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(add(a.value(), b.value()), a.requires_grad() || b.requires_grad(),
                  [ia, ib](Tape& tape, const Tensor& g) {
                    tape.accumulate(ia, g);
                    tape.accumulate(ib, g);
                  });
}

Var sub(const Var& a, const Var& b) {
  Tape& t = shared_tape("sub", a, b);
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(sub(a.value(), b.value()), a.requires_grad() || b.requires_grad(),
                  [ia, ib](Tape& tape, const Tensor& g) {
                    tape.accumulate(ia, g);
                    if (tape.requires_grad(ib)) tape.accumulate(ib, scale(g, Real(-1)));
                  });
}

Var sub(const Var& a, const Tensor& b) { return sub(a, own_tape(a).constant(b)); }

Var mul(const Var& a, const Var& b) {
  Tape& t = shared_tape("mul", a, b);
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(mul(a.value(), b.value()), a.requires_grad() || b.requires_grad(),
                  [ia, ib](Tape& tape, const Tensor& g) {
                    if (tape.requires_grad(ia)) tape.accumulate(ia, mul(g, tape.value(ib)));
                    if (tape.requires_grad(ib)) tape.accumulate(ib, mul(g, tape.value(ia)));
                  });
}

Var scale(const Var& a, Real s) {
  Tape& t = own_tape(a);
  const std::size_t ia = a.id();
  return t.record(scale(a.value(), s), a.requires_grad(),
                  [ia, s](Tape& tape, const Tensor& g) { tape.accumulate(ia, scale(g, s)); });
}

Var add_scalar(const Var& a, Real s) {
  Tape& t = own_tape(a);
  const std::size_t ia = a.id();
  return t.record(add_scalar(a.value(), s), a.requires_grad(),
                  [ia](Tape& tape, const Tensor& g) { tape.accumulate(ia, g); });
}

Var add_row(const Var& a, const Var& row) {
  Tape& t = shared_tape("add_row", a, row);
  const std::size_t ia = a.id(), ir = row.id();
  return t.record(add_row(a.value(), row.value()), a.requires_grad() || row.requires_grad(),
                  [ia, ir](Tape& tape, const Tensor& g) {
                    tape.accumulate(ia, g);
                    if (tape.requires_grad(ir)) tape.accumulate(ir, sum_rows(g));
                  });
}

Var mul_col(const Var& a, const Var& col) {
  Tape& t = shared_tape("mul_col", a, col);
  const std::size_t ia = a.id(), ic = col.id();
  return t.record(mul_col(a.value(), col.value()), a.requires_grad() || col.requires_grad(),
                  [ia, ic](Tape& tape, const Tensor& g) {
                    if (tape.requires_grad(ia)) tape.accumulate(ia, mul_col(g, tape.value(ic)));
                    if (tape.requires_grad(ic)) tape.accumulate(ic, row_dot(g, tape.value(ia)));
                  });
}

Var affine(const Var& x, const Var& w, const Var& b) { return add_row(matmul(x, w), b); }

Var silu(const Var& a) {
  return elementwise(a, silu(a.value()), [](const Tensor& x) { return silu_derivative(x); });
}

Var tanh(const Var& a) {
  return elementwise(a, tanh(a.value()), [](const Tensor& x) {
    Tensor d = tanh(x);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = Real(1) - d[i] * d[i];
    return d;
  });
}

Var sin(const Var& a) {
  return elementwise(a, sin(a.value()), [](const Tensor& x) { return cos(x); });
}

Var cos(const Var& a) {
  return elementwise(a, cos(a.value()), [](const Tensor& x) { return scale(sin(x), Real(-1)); });
}

Var concat_cols(const Var& a, const Var& b) {
  Tape& t = shared_tape("concat_cols", a, b);
  const std::size_t ia = a.id(), ib = b.id();
  const std::size_t na = a.value().cols(), nb = b.value().cols();
  return t.record(concat_cols(a.value(), b.value()), a.requires_grad() || b.requires_grad(),
                  [ia, ib, na, nb](Tape& tape, const Tensor& g) {
                    if (tape.requires_grad(ia)) tape.accumulate(ia, slice_cols(g, 0, na));
                    if (tape.requires_grad(ib)) tape.accumulate(ib, slice_cols(g, na, nb));
                  });
}

Var slice_cols(const Var& a, std::size_t start, std::size_t length) {
  Tape& t = own_tape(a);
  const std::size_t ia = a.id();
  return t.record(slice_cols(a.value(), start, length), a.requires_grad(),
                  [ia, start, length](Tape& tape, const Tensor& g) {
                    const Tensor& src = tape.value(ia);
                    Tensor full(src.shape());
                    for (std::size_t i = 0; i < g.rows(); ++i) {
                      for (std::size_t j = 0; j < length; ++j) full.at(i, start + j) = g.at(i, j);
                    }
                    tape.accumulate(ia, full);
                  });
}

Var layer_norm_rows(const Var& a) {
  Tape& t = own_tape(a);
  const std::size_t ia = a.id();
  Tensor inv_std;
  Tensor y = layer_norm_rows(a.value(), &inv_std);
  // dx = inv·(g − mean(g) − y·mean(g⊙y)) per row.
  Tensor saved_y = y;
  return t.record(std::move(y), a.requires_grad(),
                  [ia, yv = std::move(saved_y), inv = std::move(inv_std)](Tape& tape, const Tensor& g) {
                    const std::size_t n = yv.cols();
                    Tensor dx(yv.shape());
                    for (std::size_t i = 0; i < yv.rows(); ++i) {
                      Real mean_g = 0, mean_gy = 0;
                      for (std::size_t j = 0; j < n; ++j) {
                        mean_g += g.at(i, j);
                        mean_gy += g.at(i, j) * yv.at(i, j);
                      }
                      mean_g /= Real(n);
                      mean_gy /= Real(n);
                      for (std::size_t j = 0; j < n; ++j) {
                        dx.at(i, j) = inv[i] * (g.at(i, j) - mean_g - yv.at(i, j) * mean_gy);
                      }
                    }
                    tape.accumulate(ia, dx);
                  });
}

Var mean(const Var& a) {
  Tape& t = own_tape(a);
  const std::size_t ia = a.id();
  const Real n = Real(a.value().size());
  return t.record(mean(a.value()), a.requires_grad(), [ia, n](Tape& tape, const Tensor& g) {
    tape.accumulate(ia, Tensor(tape.value(ia).shape(), g.item() / n));
  });
}

Var sum_squares(const Var& a) {
  Tape& t = own_tape(a);
  const std::size_t ia = a.id();
  return t.record(sum_squares(a.value()), a.requires_grad(), [ia](Tape& tape, const Tensor& g) {
    tape.accumulate(ia, scale(tape.value(ia), Real(2) * g.item()));
  });
}

Var stop_gradient(const Var& a) { return own_tape(a).constant(a.value()); }

}  // namespace elasticflow
