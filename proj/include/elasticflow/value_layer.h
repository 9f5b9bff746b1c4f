#pragma once

#include <map>
#include <string>

#include "elasticflow/dual.h"
#include "elasticflow/parameter_store.h"
#include "elasticflow/tape.h"

// Adapters that let one templated model definition run as a plain forward
// pass, a forward-mode (JVP) pass, or a recorded pass for backprop.
//
//   param(name)    -> operand usable as the weight/bias of affine()
//   lift(name)     -> parameter as a layer Value
//   constant(t)    -> non-differentiated input as a layer Value
namespace elasticflow {

struct PlainLayer {
  using Value = Tensor;
  const ParameterStore& params;

  const Tensor& param(const std::string& name) const { return params.value(name); }
  Tensor lift(const std::string& name) const { return params.value(name); }
  Tensor constant(Tensor t) const { return t; }
};

// Parameters are held fixed: their tangent is zero.
struct DualLayer {
  using Value = DualTensor;
  const ParameterStore& params;

  const Tensor& param(const std::string& name) const { return params.value(name); }
  DualTensor lift(const std::string& name) const { return DualTensor::constant(params.value(name)); }
  DualTensor constant(Tensor t) const { return DualTensor::constant(std::move(t)); }
};

class TapeLayer {
 public:
  using Value = Var;

  TapeLayer(Tape& tape, ParameterStore& params) : tape_(tape), params_(params) {}

  Var param(const std::string& name) {
    auto it = cache_.find(name);
    if (it != cache_.end()) return it->second;
    Var v = tape_.parameter(params_, name);
    cache_.emplace(name, v);
    return v;
  }
  Var lift(const std::string& name) { return param(name); }
  Var constant(Tensor t) { return tape_.constant(std::move(t)); }

  Tape& tape() { return tape_; }
  const ParameterStore& params() const { return params_; }

 private:
  Tape& tape_;
  ParameterStore& params_;
  std::map<std::string, Var> cache_;
};

}  // namespace elasticflow
