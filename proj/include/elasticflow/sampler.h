#pragma once

#include <functional>
#include <span>
#include <vector>

#include "elasticflow/flow_paths.h"
#include "elasticflow/parameter_store.h"
#include "elasticflow/rng.h"
#include "elasticflow/velocity_network.h"

namespace elasticflow {

// u(z, r, t, c) on a batch z [B, n] with r and t shared across the batch.
// Analytic fields can stand in for the network here.
using VelocityField =
    std::function<Tensor(const Tensor& z, Real r, Real t, std::span<const Condition> conds)>;

VelocityField network_field(const VelocityNetwork& net, const ParameterStore& params);

struct GuidanceConfig {
  Real w = Real(2);
  bool use_cfg = true;
};

// u_uncond + w·(u_cond − u_uncond); w = 1 and w = 0 return the corresponding
// branch bit-for-bit.
Tensor cfg_combine(const Tensor& u_cond, const Tensor& u_uncond, Real w);

struct SampleResult {
  Tensor x;                         // [B, n]
  std::size_t nfe_conditional = 0;  // field evaluations per sample, conditional branch
  std::size_t nfe_total = 0;        // including the unconditional branch
};

// z₁ ~ N(0, I);  x̂ = z₁ − u(z₁, 0, 1) with optional guidance.
SampleResult one_step_sample(const VelocityField& field, std::span<const Condition> conds,
                             std::size_t input_dim, const GuidanceConfig& guidance, Rng& rng);

// Euler integration of dz/dτ = u(z, τ, τ) from τ = 1 down to 0 in n_steps
// uniform steps.
SampleResult euler_sample(const VelocityField& field, std::span<const Condition> conds,
                          std::size_t input_dim, std::size_t n_steps, const GuidanceConfig& guidance,
                          Rng& rng);

struct TimedSequence {
  std::vector<Real> timestamps;
  ActionChunk values;
  Real step_seconds = 0;  // δt = T / N
};

// Re-times a chunk onto N executable steps over T seconds. Row j of the
// chunk sits at time j·T/T_h; output k at k·T/N is linearly interpolated
// (extrapolated past the last row).
TimedSequence chunk_discretize(const ActionChunk& chunk, Real horizon_seconds, std::size_t n_exec);

ActionChunk chunk_from_row(const Tensor& x, std::size_t row, std::size_t horizon_steps,
                           std::size_t action_dim);

}  // namespace elasticflow
