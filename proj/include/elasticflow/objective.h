#pragma once

#include <span>
#include <string>

#include "elasticflow/flow_paths.h"
#include "elasticflow/parameter_store.h"
#include "elasticflow/velocity_network.h"

namespace elasticflow {

enum class Objective { kMeanFlow, kCfm };

std::string to_string(Objective objective);
Objective parse_objective(const std::string& name);

// Regression target for u_θ(z_t, r, t):
//   𝒯 = v − (t − r)·(v·∇_z u_θ + ∂_t u_θ),   v = ε − x,
// with the bracket computed by one forward-mode pass (tangent v on z, 1 on t,
// 0 on r). Rows with r == t return v unchanged. The result is a plain tensor,
// i.e. it carries no gradient path back to the parameters.
Tensor meanflow_target(const VelocityNetwork& net, const ParameterStore& params, const Tensor& x,
                       const Tensor& noise, std::span<const Real> r, std::span<const Real> t,
                       std::span<const Condition> conds);

// mean_b ||u_θ(z_t, r, t, c) − sg(𝒯)||². When `accumulate_grads` is set the
// gradient is added into params' gradient slots.
Real loss_meanflow(const VelocityNetwork& net, ParameterStore& params, const FlowBatch& batch,
                   bool accumulate_grads = false);

// mean_b ||u_θ(z_t, t, t, c) − v||²; the network is queried on the diagonal.
Real loss_cfm(const VelocityNetwork& net, ParameterStore& params, const FlowBatch& batch,
              bool accumulate_grads = false);

Real evaluate_loss(Objective objective, const VelocityNetwork& net, ParameterStore& params,
                   const FlowBatch& batch, bool accumulate_grads = false);

}  // namespace elasticflow
