#include "elasticflow/flow_paths.h"

#include <algorithm>

#include "elasticflow/error.h"
#include "elasticflow/ops.h"

namespace elasticflow {

ActionChunk::ActionChunk(std::size_t steps, std::size_t dim, std::vector<Real> v)
    : horizon_steps(steps), action_dim(dim), values(std::move(v)) {
  if (steps == 0 || dim == 0) throw PreconditionError("ActionChunk: T_h and D must be at least 1");
  if (values.size() != steps * dim) {
    throw ShapeError("ActionChunk", "expected " + std::to_string(steps * dim) + " values, got " +
                                        std::to_string(values.size()));
  }
}

ActionChunk ActionChunk::zeros(std::size_t steps, std::size_t dim) {
  return ActionChunk(steps, dim, std::vector<Real>(steps * dim, Real(0)));
}

namespace {

void check_unit(Real t) {
  if (!(t >= 0 && t <= 1)) throw PreconditionError("interpolate: t must lie in [0,1], got " + std::to_string(t));
}

}  // namespace

Tensor interpolate(const Tensor& x, const Tensor& noise, Real t) {
  check_unit(t);
  if (!x.same_shape(noise)) throw ShapeError("interpolate", x.shape(), noise.shape());
  Tensor z(x.shape());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = (Real(1) - t) * x[i] + t * noise[i];
  return z;
}

Tensor interpolate(const Tensor& x, const Tensor& noise, std::span<const Real> t) {
  if (!x.same_shape(noise)) throw ShapeError("interpolate", x.shape(), noise.shape());
  if (t.size() != x.rows()) throw ShapeError("interpolate", "need one t per row");
  Tensor z(x.shape());
  const std::size_t n = x.cols();
  for (std::size_t b = 0; b < x.rows(); ++b) {
    check_unit(t[b]);
    for (std::size_t j = 0; j < n; ++j) {
      z[b * n + j] = (Real(1) - t[b]) * x[b * n + j] + t[b] * noise[b * n + j];
    }
  }
  return z;
}

Tensor conditional_velocity(const Tensor& x, const Tensor& noise) {
  if (!x.same_shape(noise)) throw ShapeError("conditional_velocity", x.shape(), noise.shape());
  return sub(noise, x);
}

FlowTimes sample_times(Rng& rng, Real rho_equal) {
  if (!(rho_equal >= 0 && rho_equal <= 1)) throw PreconditionError("sample_times: rho_equal must lie in [0,1]");
  const Real a = uniform01(rng);
  const Real b = uniform01(rng);
  FlowTimes times{std::min(a, b), std::max(a, b)};
  if (bernoulli(rng, rho_equal)) times.r = times.t;
  return times;
}

Condition drop_condition(const Condition& cond, Real p_drop, Rng& rng) {
  if (!(p_drop >= 0 && p_drop <= 1)) throw PreconditionError("drop_condition: p_drop must lie in [0,1]");
  return bernoulli(rng, p_drop) ? Condition::null_condition() : cond;
}

FlowBatch draw_flow_batch(const Tensor& x, std::span<const Condition> conds, Rng& rng, Real rho_equal,
                          Real p_drop) {
  if (x.rank() != 2 || conds.size() != x.rows()) throw ShapeError("draw_flow_batch", "need one condition per row");
  FlowBatch batch;
  batch.x = x;
  batch.noise = normal_tensor(x.shape(), rng);
  const std::size_t n = x.rows();
  batch.r.resize(n);
  batch.t.resize(n);
  batch.conds.reserve(n);
  for (std::size_t b = 0; b < n; ++b) {
    FlowTimes times = sample_times(rng, rho_equal);
    batch.r[b] = times.r;
    batch.t[b] = times.t;
    batch.conds.push_back(drop_condition(conds[b], p_drop, rng));
  }
  return batch;
}

}  // namespace elasticflow
