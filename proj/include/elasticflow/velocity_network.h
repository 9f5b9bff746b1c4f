#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "elasticflow/dual.h"
#include "elasticflow/parameter_store.h"
#include "elasticflow/tape.h"
#include "elasticflow/tensor.h"
#include "elasticflow/time_encoding.h"
#include "elasticflow/value_layer.h"

namespace elasticflow {

// Generic conditioning input: goal vector, task index and physical horizon T
// (seconds). A null condition ignores all three and uses a learned embedding.
struct Condition {
  std::vector<Real> goal;
  int task_id = 0;
  Real horizon_seconds = Real(1);
  bool is_null = false;

  static Condition null_condition() {
    Condition c;
    c.is_null = true;
    return c;
  }
};

struct NetworkConfig {
  std::size_t horizon_steps = 1;  // T_h
  std::size_t action_dim = 2;     // D
  std::size_t hidden_dim = 128;
  std::size_t n_blocks = 2;
  std::size_t d_emb = 128;
  std::size_t cond_dim = 2;
  std::size_t n_tasks = 1;
  std::size_t n_frequencies = 32;
  Real fourier_scale = Real(16);

  std::size_t input_dim() const { return horizon_steps * action_dim; }
  TimeEncodingConfig time_config() const { return {n_frequencies, fourier_scale, d_emb}; }
  void validate() const;
};

// u_θ(z, r, t, c): residual MLP blocks h ← h + gate ⊙ F((1 + scale) ⊙ norm(h) + shift)
// where (scale, shift, gate) are linear in silu(Emb(r,t) + CondEmb(c)). The
// output projection and all modulation weights start at zero, so a fresh
// network outputs u ≡ 0.
class VelocityNetwork {
 public:
  VelocityNetwork(NetworkConfig config, TimeEncoder encoder);
  // Fourier banks are drawn from `seed`.
  static VelocityNetwork create(const NetworkConfig& config, std::uint64_t seed);

  const NetworkConfig& config() const { return config_; }
  const TimeEncoder& encoder() const { return encoder_; }

  ParameterStore init_parameters(std::uint64_t seed) const;
  // Throws PreconditionError if a parameter is missing or mis-shaped.
  void check_parameters(const ParameterStore& params) const;

  // Batched evaluation: z is [B, input_dim]; r, t and conds have B entries.
  Tensor forward(const ParameterStore& params, const Tensor& z, std::span<const Real> r,
                 std::span<const Real> t, std::span<const Condition> conds) const;

  // u and du = ∇_z u · tangent_z + ∂_t u · tangent_t with r held fixed.
  JvpResult forward_jvp(const ParameterStore& params, const Tensor& z, std::span<const Real> r,
                        std::span<const Real> t, std::span<const Condition> conds,
                        const Tensor& tangent_z, Real tangent_t) const;

  // Recorded evaluation for backprop into `layer`'s parameter store.
  Var forward(TapeLayer& layer, const Tensor& z, std::span<const Real> r, std::span<const Real> t,
              std::span<const Condition> conds) const;

  // Single-sample convenience.
  std::vector<Real> forward(const ParameterStore& params, std::span<const Real> z, Real r, Real t,
                            const Condition& cond) const;

 private:
  struct Inputs {
    Tensor onehot;
    Tensor goal;
    Tensor horizon;
    Tensor keep;  // [B,1], 1 for non-null rows
    Tensor drop;  // [B,1], 1 - keep
    Tensor r;
    Tensor t;
  };

  Inputs prepare(const Tensor& z, std::span<const Real> r, std::span<const Real> t,
                 std::span<const Condition> conds) const;

  template <class Layer>
  typename Layer::Value apply(Layer& layer, const typename Layer::Value& z,
                              const typename Layer::Value& r, const typename Layer::Value& t,
                              const Inputs& in) const;

  NetworkConfig config_;
  TimeEncoder encoder_;
  std::vector<std::pair<std::string, Shape>> layout_;
};

}  // namespace elasticflow
