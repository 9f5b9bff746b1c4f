#include "elasticflow/objective.h"

#include <cmath>

#include "elasticflow/error.h"
#include "elasticflow/ops.h"
#include "elasticflow/tape.h"
#include "elasticflow/value_layer.h"

namespace elasticflow {

std::string to_string(Objective objective) {
  return objective == Objective::kMeanFlow ? "meanflow" : "cfm";
}

Objective parse_objective(const std::string& name) {
  if (name == "meanflow") return Objective::kMeanFlow;
  if (name == "cfm") return Objective::kCfm;
  throw ConfigError("unknown objective '" + name + "' (expected meanflow or cfm)");
}

Tensor meanflow_target(const VelocityNetwork& net, const ParameterStore& params, const Tensor& x,
                       const Tensor& noise, std::span<const Real> r, std::span<const Real> t,
                       std::span<const Condition> conds) {
  Tensor z = interpolate(x, noise, t);
  Tensor v = conditional_velocity(x, noise);
  if (r.size() != t.size()) throw ShapeError("meanflow_target", "r and t lengths differ");
  bool any_span = false;
  for (std::size_t b = 0; b < r.size(); ++b) any_span = any_span || r[b] != t[b];
  if (!any_span) return v;

  JvpResult jvp = net.forward_jvp(params, z, r, t, conds, v, Real(1));
  if (!jvp.derivative.all_finite() || !jvp.value.all_finite()) {
    throw NumericError("meanflow_target: non-finite network output or total derivative");
  }
  Tensor target = v;
  const std::size_t n = v.cols();
  for (std::size_t b = 0; b < v.rows(); ++b) {
    const Real span = t[b] - r[b];
    if (span == 0) continue;
    for (std::size_t j = 0; j < n; ++j) target[b * n + j] = v[b * n + j] - span * jvp.derivative[b * n + j];
  }
  return target;
}

namespace {

Real regression_loss(const VelocityNetwork& net, ParameterStore& params, const Tensor& z,
                     std::span<const Real> r, std::span<const Real> t, std::span<const Condition> conds,
                     const Tensor& target, bool accumulate_grads) {
  Tape tape;
  TapeLayer layer(tape, params);
  Var prediction = net.forward(layer, z, r, t, conds);
  Var diff = sub(prediction, stop_gradient(tape.constant(target)));
  Var loss = scale(sum_squares(diff), Real(1) / Real(z.rows()));
  const Real value = loss.value().item();
  if (!std::isfinite(value)) throw NumericError("loss is not finite");
  if (accumulate_grads) tape.backward(loss);
  return value;
}

}  // namespace

Real loss_meanflow(const VelocityNetwork& net, ParameterStore& params, const FlowBatch& batch,
                   bool accumulate_grads) {
  Tensor target = meanflow_target(net, params, batch.x, batch.noise, batch.r, batch.t, batch.conds);
  Tensor z = interpolate(batch.x, batch.noise, batch.t);
  return regression_loss(net, params, z, batch.r, batch.t, batch.conds, target, accumulate_grads);
}

Real loss_cfm(const VelocityNetwork& net, ParameterStore& params, const FlowBatch& batch,
              bool accumulate_grads) {
  Tensor z = interpolate(batch.x, batch.noise, batch.t);
  Tensor v = conditional_velocity(batch.x, batch.noise);
  return regression_loss(net, params, z, batch.t, batch.t, batch.conds, v, accumulate_grads);
}

Real evaluate_loss(Objective objective, const VelocityNetwork& net, ParameterStore& params,
                   const FlowBatch& batch, bool accumulate_grads) {
  return objective == Objective::kMeanFlow ? loss_meanflow(net, params, batch, accumulate_grads)
                                           : loss_cfm(net, params, batch, accumulate_grads);
}

}  // namespace elasticflow
