#pragma once

#include <span>
#include <utility>
#include <vector>

#include "elasticflow/rng.h"
#include "elasticflow/tensor.h"
#include "elasticflow/velocity_network.h"

// Linear conditional flow with data at t = 0 and noise at t = 1:
//   z_t = (1 − t)·x + t·ε,   v = dz_t/dt = ε − x.
// With this orientation the one-step rule x̂ = z₁ − u(z₁, 0, 1) is exact.
namespace elasticflow {

// T_h × D block of actions, stored row-major by step.
struct ActionChunk {
  std::size_t horizon_steps = 0;
  std::size_t action_dim = 0;
  std::vector<Real> values;

  ActionChunk() = default;
  ActionChunk(std::size_t steps, std::size_t dim, std::vector<Real> v);
  static ActionChunk zeros(std::size_t steps, std::size_t dim);

  Real& at(std::size_t step, std::size_t d) { return values[step * action_dim + d]; }
  Real at(std::size_t step, std::size_t d) const { return values[step * action_dim + d]; }
  std::span<const Real> step(std::size_t k) const { return std::span<const Real>(values).subspan(k * action_dim, action_dim); }
};

struct FlowTimes {
  Real r = 0;
  Real t = 0;
};

Tensor interpolate(const Tensor& x, const Tensor& noise, Real t);
// Batched: one t per row.
Tensor interpolate(const Tensor& x, const Tensor& noise, std::span<const Real> t);

Tensor conditional_velocity(const Tensor& x, const Tensor& noise);

// Two uniforms sorted into r ≤ t; then r ← t with probability rho_equal.
// Always consumes three uniform draws.
FlowTimes sample_times(Rng& rng, Real rho_equal);

// Null condition with probability p_drop. Always consumes one uniform draw.
Condition drop_condition(const Condition& cond, Real p_drop, Rng& rng);

// Everything random about one training batch, drawn in a fixed order so that
// different objectives see identical draws for the same seed.
struct FlowBatch {
  Tensor x;      // [B, n] data
  Tensor noise;  // [B, n] ε
  std::vector<Real> r;
  std::vector<Real> t;
  std::vector<Condition> conds;  // after condition dropout

  std::size_t size() const { return r.size(); }
};

FlowBatch draw_flow_batch(const Tensor& x, std::span<const Condition> conds, Rng& rng, Real rho_equal,
                          Real p_drop);

}  // namespace elasticflow
