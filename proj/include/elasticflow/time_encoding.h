#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "elasticflow/dual.h"
#include "elasticflow/parameter_store.h"
#include "elasticflow/rng.h"
#include "elasticflow/tape.h"
#include "elasticflow/tensor.h"

namespace elasticflow {

// Frozen Gaussian random frequencies for the Fourier feature map.
struct FourierBank {
  std::vector<Real> frequencies;
  Real scale = Real(16);

  // Frequencies drawn i.i.d. from N(0, scale²).
  static FourierBank gaussian(std::size_t m, Real scale, std::uint64_t seed);

  std::size_t size() const { return frequencies.size(); }
  // [1,m] row of 2π·f_i.
  Tensor angular_row() const;
};

// [sin(2π f_i s)..., cos(2π f_i s)...]. Values of s outside [0,1] are
// extrapolation and are not rejected.
std::vector<Real> ff_encode(Real s, const FourierBank& bank);

// Batched form on a [B,1] column; works on every value layer.
Tensor fourier_features(const Tensor& s, const FourierBank& bank);
DualTensor fourier_features(const DualTensor& s, const FourierBank& bank);
Var fourier_features(const Var& s, const FourierBank& bank);

struct TimeEncodingConfig {
  std::size_t n_frequencies = 32;
  Real fourier_scale = Real(16);
  std::size_t d_emb = 128;
};

// Separate banks for t and Δt = t − r.
struct TimeEncoder {
  TimeEncodingConfig config;
  FourierBank bank_t;
  FourierBank bank_dt;

  static TimeEncoder create(const TimeEncodingConfig& config, std::uint64_t seed);

  std::size_t feature_dim() const { return 2 * bank_t.size() + 2 * bank_dt.size(); }
  std::size_t hidden_dim() const { return 4 * config.d_emb; }

  // Adds time.w1 [4m, 4·d_emb], time.b1, time.w2 [4·d_emb, d_emb], time.b2.
  void init_parameters(ParameterStore& store, Rng& rng) const;
};

// MLP([FF(t), FF(t−r)]) for scalar inputs; requires 0 ≤ r ≤ t ≤ 1.
std::vector<Real> embed_time(Real r, Real t, const TimeEncoder& encoder, const ParameterStore& params);

// Concatenated Fourier features [FF(t), FF(t−r)] before the fusion MLP.
std::vector<Real> time_features(Real r, Real t, const TimeEncoder& encoder);

}  // namespace elasticflow
