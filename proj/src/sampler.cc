#include "elasticflow/sampler.h"

#include <cmath>

#include "elasticflow/error.h"
#include "elasticflow/ops.h"

namespace elasticflow {

VelocityField network_field(const VelocityNetwork& net, const ParameterStore& params) {
  return [&net, &params](const Tensor& z, Real r, Real t, std::span<const Condition> conds) {
    std::vector<Real> rs(z.rows(), r), ts(z.rows(), t);
    return net.forward(params, z, rs, ts, conds);
  };
}

Tensor cfg_combine(const Tensor& u_cond, const Tensor& u_uncond, Real w) {
  if (!u_cond.same_shape(u_uncond)) throw ShapeError("cfg_combine", u_cond.shape(), u_uncond.shape());
  if (w == Real(1)) return u_cond;
  if (w == Real(0)) return u_uncond;
  Tensor out(u_cond.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = u_uncond[i] + w * (u_cond[i] - u_uncond[i]);
  return out;
}

namespace {

// One (possibly guided) field query; bumps the NFE counters.
Tensor guided(const VelocityField& field, const Tensor& z, Real r, Real t, std::span<const Condition> conds,
              const std::vector<Condition>& nulls, const GuidanceConfig& guidance, SampleResult& counters) {
  Tensor u_cond = field(z, r, t, conds);
  ++counters.nfe_conditional;
  ++counters.nfe_total;
  if (!guidance.use_cfg) return u_cond;
  Tensor u_uncond = field(z, r, t, nulls);
  ++counters.nfe_total;
  return cfg_combine(u_cond, u_uncond, guidance.w);
}

std::vector<Condition> prepare_nulls(std::span<const Condition> conds, const GuidanceConfig& guidance) {
  if (!std::isfinite(guidance.w) || guidance.w < 0) throw PreconditionError("guidance scale w must be finite and >= 0");
  if (!guidance.use_cfg) return {};
  for (const Condition& c : conds) {
    if (c.is_null) throw PreconditionError("classifier-free guidance needs non-null conditions");
  }
  return std::vector<Condition>(conds.size(), Condition::null_condition());
}

}  // namespace

SampleResult one_step_sample(const VelocityField& field, std::span<const Condition> conds,
                             std::size_t input_dim, const GuidanceConfig& guidance, Rng& rng) {
  const std::vector<Condition> nulls = prepare_nulls(conds, guidance);
  SampleResult result;
  Tensor z = normal_tensor({conds.size(), input_dim}, rng);
  Tensor u = guided(field, z, Real(0), Real(1), conds, nulls, guidance, result);
  result.x = sub(z, u);
  return result;
}

SampleResult euler_sample(const VelocityField& field, std::span<const Condition> conds,
                          std::size_t input_dim, std::size_t n_steps, const GuidanceConfig& guidance,
                          Rng& rng) {
  if (n_steps == 0) throw PreconditionError("euler_sample: n_steps must be >= 1");
  const std::vector<Condition> nulls = prepare_nulls(conds, guidance);
  SampleResult result;
  Tensor z = normal_tensor({conds.size(), input_dim}, rng);
  for (std::size_t k = 0; k < n_steps; ++k) {
    const Real tau = Real(1) - Real(k) / Real(n_steps);
    const Real next = Real(1) - Real(k + 1) / Real(n_steps);
    Tensor u = guided(field, z, tau, tau, conds, nulls, guidance, result);
    const Real step = tau - next;
    for (std::size_t i = 0; i < z.size(); ++i) z[i] -= step * u[i];
  }
  result.x = std::move(z);
  return result;
}

TimedSequence chunk_discretize(const ActionChunk& chunk, Real horizon_seconds, std::size_t n_exec) {
  if (n_exec == 0) throw PreconditionError("chunk_discretize: N must be >= 1");
  if (!(horizon_seconds > 0)) throw PreconditionError("chunk_discretize: T must be > 0");
  const std::size_t rows = chunk.horizon_steps, dim = chunk.action_dim;
  TimedSequence out;
  out.step_seconds = horizon_seconds / Real(n_exec);
  out.timestamps.resize(n_exec);
  out.values = ActionChunk::zeros(n_exec, dim);
  for (std::size_t k = 0; k < n_exec; ++k) {
    out.timestamps[k] = Real(k) * horizon_seconds / Real(n_exec);
    if (n_exec == rows) {
      for (std::size_t d = 0; d < dim; ++d) out.values.at(k, d) = chunk.at(k, d);
      continue;
    }
    if (rows == 1) {
      for (std::size_t d = 0; d < dim; ++d) out.values.at(k, d) = chunk.at(0, d);
      continue;
    }
    const Real pos = Real(k) * Real(rows) / Real(n_exec);
    const std::size_t lo = std::min(static_cast<std::size_t>(pos), rows - 2);
    const Real frac = pos - Real(lo);
    for (std::size_t d = 0; d < dim; ++d) {
      out.values.at(k, d) = chunk.at(lo, d) + frac * (chunk.at(lo + 1, d) - chunk.at(lo, d));
    }
  }
  return out;
}

ActionChunk chunk_from_row(const Tensor& x, std::size_t row, std::size_t horizon_steps, std::size_t action_dim) {
  if (x.cols() != horizon_steps * action_dim) {
    throw ShapeError("chunk_from_row", x.shape(), Shape{horizon_steps, action_dim});
  }
  auto span = x.row_span(row);
  return ActionChunk(horizon_steps, action_dim, std::vector<Real>(span.begin(), span.end()));
}

}  // namespace elasticflow
