#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <string>

#include "elasticflow/parameter_store.h"
#include "elasticflow/tensor.h"

namespace elasticflow {

class Tape;

// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool requires_grad() const;
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Reverse-mode recorder. Nodes are appended in evaluation order; backward()
// walks them in reverse. Parameters registered through parameter() receive
// their gradients in the owning ParameterStore, added onto what is already
// there.
class Tape {
 public:
  // Called with the node's accumulated output gradient.
  using Backward = std::function<void(Tape&, const Tensor& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var variable(Tensor value);
  Var parameter(ParameterStore& store, const std::string& name);

  // Records an op output. `requires_grad` should be true iff any input
  // requires a gradient; `backward` is dropped otherwise.
  Var record(Tensor value, bool requires_grad, Backward backward);

  void backward(const Var& loss);

  // Gradient of a variable()/parameter() leaf from the last backward().
  const Tensor& grad(const Var& v) const;

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  void accumulate(std::size_t id, const Tensor& g);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    bool has_grad = false;
    Backward backward;
    Tensor* sink = nullptr;
  };

  std::deque<Node> nodes_;
};

Var matmul(const Var& a, const Var& b);
Var matmul(const Var& a, const Tensor& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var sub(const Var& a, const Tensor& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, Real s);
Var add_scalar(const Var& a, Real s);
Var add_row(const Var& a, const Var& row);
Var mul_col(const Var& a, const Var& col);
Var affine(const Var& x, const Var& w, const Var& b);
Var silu(const Var& a);
Var tanh(const Var& a);
Var sin(const Var& a);
Var cos(const Var& a);
Var concat_cols(const Var& a, const Var& b);
Var slice_cols(const Var& a, std::size_t start, std::size_t length);
Var layer_norm_rows(const Var& a);
Var mean(const Var& a);
Var sum_squares(const Var& a);
// Same value; nothing flows back through it.
Var stop_gradient(const Var& a);

}  // namespace elasticflow
