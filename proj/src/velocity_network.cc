#include "elasticflow/velocity_network.h"

#include <cmath>
#include <string>

#include "elasticflow/error.h"
#include "elasticflow/ops.h"
#include "elasticflow/rng.h"
#include "elasticflow/time_embedding_impl.h"

namespace elasticflow {

namespace {

std::string block_name(std::size_t i, const char* leaf) {
  return "block" + std::to_string(i) + "." + leaf;
}

Real fan_in_std(std::size_t fan_in) { return Real(1) / std::sqrt(Real(fan_in)); }

}  // namespace

void NetworkConfig::validate() const {
  if (horizon_steps == 0 || action_dim == 0 || hidden_dim == 0 || n_blocks == 0 || d_emb == 0 ||
      n_tasks == 0 || n_frequencies == 0) {
    throw PreconditionError("NetworkConfig: dimensions must be positive");
  }
  if (!(fourier_scale > 0)) throw PreconditionError("NetworkConfig: fourier_scale must be positive");
}

VelocityNetwork::VelocityNetwork(NetworkConfig config, TimeEncoder encoder)
    : config_(config), encoder_(std::move(encoder)) {
  config_.validate();
  if (encoder_.bank_t.size() != config_.n_frequencies || encoder_.bank_dt.size() != config_.n_frequencies ||
      encoder_.config.d_emb != config_.d_emb) {
    throw PreconditionError("VelocityNetwork: time encoder does not match network config");
  }
  const ParameterStore reference = init_parameters(0);
  for (const auto& [name, entry] : reference.entries()) layout_.emplace_back(name, entry.value.shape());
}

VelocityNetwork VelocityNetwork::create(const NetworkConfig& config, std::uint64_t seed) {
  config.validate();
  return VelocityNetwork(config, TimeEncoder::create(config.time_config(), seed));
}

ParameterStore VelocityNetwork::init_parameters(std::uint64_t seed) const {
  Rng rng(seed);
  ParameterStore p;
  const std::size_t n = config_.input_dim(), h = config_.hidden_dim, e = config_.d_emb;
  encoder_.init_parameters(p, rng);
  p.add("cond.task_table", normal_tensor({config_.n_tasks, e}, rng, Real(1)));
  p.add("cond.goal.w", normal_tensor({config_.cond_dim, e}, rng,
                                     config_.cond_dim ? fan_in_std(config_.cond_dim) : Real(1)));
  p.add("cond.goal.b", Tensor::matrix(1, e));
  p.add("cond.horizon.w", normal_tensor({2, e}, rng, fan_in_std(2)));
  p.add("cond.null", normal_tensor({1, e}, rng, Real(1)));
  p.add("in.w", normal_tensor({n, h}, rng, fan_in_std(n)));
  p.add("in.b", Tensor::matrix(1, h));
  for (std::size_t i = 0; i < config_.n_blocks; ++i) {
    p.add(block_name(i, "mod.w"), Tensor::matrix(e, 3 * h));
    p.add(block_name(i, "mod.b"), Tensor::matrix(1, 3 * h));
    p.add(block_name(i, "fc1.w"), normal_tensor({h, h}, rng, fan_in_std(h)));
    p.add(block_name(i, "fc1.b"), Tensor::matrix(1, h));
    p.add(block_name(i, "fc2.w"), normal_tensor({h, h}, rng, fan_in_std(h)));
    p.add(block_name(i, "fc2.b"), Tensor::matrix(1, h));
  }
  p.add("out.w", Tensor::matrix(h, n));
  p.add("out.b", Tensor::matrix(1, n));
  return p;
}

void VelocityNetwork::check_parameters(const ParameterStore& params) const {
  if (params.size() != layout_.size()) {
    throw PreconditionError("VelocityNetwork: parameter store has " + std::to_string(params.size()) +
                            " entries, expected " + std::to_string(layout_.size()) +
                            " (uninitialized params?)");
  }
  for (const auto& [name, shape] : layout_) {
    if (!params.contains(name)) throw PreconditionError("VelocityNetwork: missing parameter '" + name + "'");
    if (params.value(name).shape() != shape) {
      throw PreconditionError("VelocityNetwork: parameter '" + name + "' has shape " +
                              shape_string(params.value(name).shape()) + ", expected " +
                              shape_string(shape));
    }
  }
}

VelocityNetwork::Inputs VelocityNetwork::prepare(const Tensor& z, std::span<const Real> r,
                                                 std::span<const Real> t,
                                                 std::span<const Condition> conds) const {
  if (z.rank() != 2 || z.cols() != config_.input_dim()) {
    throw ShapeError("net_forward", z.shape(), Shape{z.rank() == 2 ? z.rows() : 0, config_.input_dim()});
  }
  const std::size_t batch = z.rows();
  if (r.size() != batch || t.size() != batch || conds.size() != batch) {
    throw ShapeError("net_forward", "batch of " + std::to_string(batch) + " rows needs as many r, t and conditions");
  }
  Inputs in;
  in.onehot = Tensor::matrix(batch, config_.n_tasks);
  in.goal = Tensor::matrix(batch, config_.cond_dim);
  in.horizon = Tensor::matrix(batch, 2);
  in.keep = Tensor::matrix(batch, 1);
  in.drop = Tensor::matrix(batch, 1);
  in.r = Tensor::column(r);
  in.t = Tensor::column(t);
  for (std::size_t b = 0; b < batch; ++b) {
    if (!(0 <= r[b] && r[b] <= t[b] && t[b] <= 1)) {
      throw PreconditionError("net_forward: need 0 <= r <= t <= 1, got r=" + std::to_string(r[b]) +
                              " t=" + std::to_string(t[b]));
    }
    const Condition& c = conds[b];
    if (c.is_null) {
      in.drop[b] = 1;
      continue;
    }
    if (c.goal.size() != config_.cond_dim) {
      throw ShapeError("net_forward", "condition goal has " + std::to_string(c.goal.size()) +
                                          " entries, expected " + std::to_string(config_.cond_dim));
    }
    if (c.task_id < 0 || static_cast<std::size_t>(c.task_id) >= config_.n_tasks) {
      throw PreconditionError("net_forward: task_id " + std::to_string(c.task_id) + " out of range");
    }
    if (!(c.horizon_seconds > 0)) throw PreconditionError("net_forward: horizon_seconds must be positive");
    in.keep[b] = 1;
    in.onehot.at(b, static_cast<std::size_t>(c.task_id)) = 1;
    for (std::size_t j = 0; j < config_.cond_dim; ++j) in.goal.at(b, j) = c.goal[j];
    in.horizon.at(b, 0) = c.horizon_seconds;
    in.horizon.at(b, 1) = std::log(c.horizon_seconds);
  }
  return in;
}

template <class Layer>
typename Layer::Value VelocityNetwork::apply(Layer& layer, const typename Layer::Value& z,
                                             const typename Layer::Value& r,
                                             const typename Layer::Value& t, const Inputs& in) const {
  using V = typename Layer::Value;
  const std::size_t h = config_.hidden_dim;

  V time_emb = time_embedding(layer, encoder_, r, t);

  V cond = add(add(matmul(layer.constant(in.onehot), layer.lift("cond.task_table")),
                   affine(layer.constant(in.goal), layer.param("cond.goal.w"), layer.param("cond.goal.b"))),
               matmul(layer.constant(in.horizon), layer.lift("cond.horizon.w")));
  cond = add(mul_col(cond, layer.constant(in.keep)),
             matmul(layer.constant(in.drop), layer.lift("cond.null")));

  V modulation_input = silu(add(time_emb, cond));

  V hidden = affine(z, layer.param("in.w"), layer.param("in.b"));
  for (std::size_t i = 0; i < config_.n_blocks; ++i) {
    V mod = affine(modulation_input, layer.param(block_name(i, "mod.w")), layer.param(block_name(i, "mod.b")));
    V scale_term = add_scalar(slice_cols(mod, 0, h), Real(1));
    V shift = slice_cols(mod, h, h);
    V gate = slice_cols(mod, 2 * h, h);
    V x = add(mul(layer_norm_rows(hidden), scale_term), shift);
    V f = silu(affine(x, layer.param(block_name(i, "fc1.w")), layer.param(block_name(i, "fc1.b"))));
    f = affine(f, layer.param(block_name(i, "fc2.w")), layer.param(block_name(i, "fc2.b")));
    hidden = add(hidden, mul(gate, f));
  }
  return affine(hidden, layer.param("out.w"), layer.param("out.b"));
}

Tensor VelocityNetwork::forward(const ParameterStore& params, const Tensor& z, std::span<const Real> r,
                                std::span<const Real> t, std::span<const Condition> conds) const {
  check_parameters(params);
  Inputs in = prepare(z, r, t, conds);
  PlainLayer layer{params};
  return apply(layer, z, in.r, in.t, in);
}

JvpResult VelocityNetwork::forward_jvp(const ParameterStore& params, const Tensor& z,
                                       std::span<const Real> r, std::span<const Real> t,
                                       std::span<const Condition> conds, const Tensor& tangent_z,
                                       Real tangent_t) const {
  check_parameters(params);
  if (!z.same_shape(tangent_z)) throw ShapeError("net_forward_jvp", z.shape(), tangent_z.shape());
  Inputs in = prepare(z, r, t, conds);
  DualLayer layer{params};
  DualTensor zd(z, tangent_z);
  DualTensor rd = DualTensor::constant(in.r);
  DualTensor td(in.t, Tensor(in.t.shape(), tangent_t));
  DualTensor out = apply(layer, zd, rd, td, in);
  return {std::move(out.primal), std::move(out.tangent)};
}

Var VelocityNetwork::forward(TapeLayer& layer, const Tensor& z, std::span<const Real> r,
                             std::span<const Real> t, std::span<const Condition> conds) const {
  Inputs in = prepare(z, r, t, conds);
  Var zv = layer.constant(z);
  Var rv = layer.constant(in.r);
  Var tv = layer.constant(in.t);
  return apply(layer, zv, rv, tv, in);
}

std::vector<Real> VelocityNetwork::forward(const ParameterStore& params, std::span<const Real> z, Real r,
                                           Real t, const Condition& cond) const {
  Tensor out = forward(params, Tensor::row(z), std::span<const Real>(&r, 1), std::span<const Real>(&t, 1),
                       std::span<const Condition>(&cond, 1));
  return {out.values().begin(), out.values().end()};
}

}  // namespace elasticflow
