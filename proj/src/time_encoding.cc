#include "elasticflow/time_encoding.h"

#include <cmath>
#include <numbers>

#include "elasticflow/error.h"
#include "elasticflow/ops.h"
#include "elasticflow/time_embedding_impl.h"
#include "elasticflow/value_layer.h"

namespace elasticflow {

FourierBank FourierBank::gaussian(std::size_t m, Real scale, std::uint64_t seed) {
  if (!(scale > 0)) throw PreconditionError("FourierBank: scale must be positive");
  Rng rng(seed);
  FourierBank bank;
  bank.scale = scale;
  bank.frequencies.resize(m);
  std::normal_distribution<Real> dist(0, scale);
  for (auto& f : bank.frequencies) f = dist(rng);
  return bank;
}

Tensor FourierBank::angular_row() const {
  Tensor row = Tensor::matrix(1, frequencies.size());
  for (std::size_t i = 0; i < frequencies.size(); ++i) {
    row[i] = Real(2) * std::numbers::pi_v<Real> * frequencies[i];
  }
  return row;
}

std::vector<Real> ff_encode(Real s, const FourierBank& bank) {
  Tensor col = Tensor::scalar(s);
  Tensor features = fourier_features(col, bank);
  return {features.values().begin(), features.values().end()};
}

Tensor fourier_features(const Tensor& s, const FourierBank& bank) {
  Tensor phase = matmul(s, bank.angular_row());
  return concat_cols(sin(phase), cos(phase));
}

DualTensor fourier_features(const DualTensor& s, const FourierBank& bank) {
  DualTensor phase = matmul(s, bank.angular_row());
  return concat_cols(sin(phase), cos(phase));
}

Var fourier_features(const Var& s, const FourierBank& bank) {
  Var phase = matmul(s, bank.angular_row());
  return concat_cols(sin(phase), cos(phase));
}

TimeEncoder TimeEncoder::create(const TimeEncodingConfig& config, std::uint64_t seed) {
  if (config.n_frequencies == 0 || config.d_emb == 0) {
    throw PreconditionError("TimeEncoder: n_frequencies and d_emb must be positive");
  }
  TimeEncoder enc;
  enc.config = config;
  enc.bank_t = FourierBank::gaussian(config.n_frequencies, config.fourier_scale, seed);
  enc.bank_dt = FourierBank::gaussian(config.n_frequencies, config.fourier_scale,
                                      seed ^ 0x9e3779b97f4a7c15ull);
  return enc;
}

void TimeEncoder::init_parameters(ParameterStore& store, Rng& rng) const {
  const std::size_t in = feature_dim(), hidden = hidden_dim(), out = config.d_emb;
  store.add("time.w1", normal_tensor({in, hidden}, rng, Real(1) / std::sqrt(Real(in))));
  store.add("time.b1", Tensor::matrix(1, hidden));
  store.add("time.w2", normal_tensor({hidden, out}, rng, Real(1) / std::sqrt(Real(hidden))));
  store.add("time.b2", Tensor::matrix(1, out));
}

namespace {

void check_times(Real r, Real t) {
  if (!(0 <= r && r <= t && t <= 1)) {
    throw PreconditionError("embed_time: need 0 <= r <= t <= 1, got r=" + std::to_string(r) +
                            " t=" + std::to_string(t));
  }
}

}  // namespace

std::vector<Real> time_features(Real r, Real t, const TimeEncoder& encoder) {
  check_times(r, t);
  Tensor f = concat_cols(fourier_features(Tensor::scalar(t), encoder.bank_t),
                         fourier_features(Tensor::scalar(t - r), encoder.bank_dt));
  return {f.values().begin(), f.values().end()};
}

std::vector<Real> embed_time(Real r, Real t, const TimeEncoder& encoder, const ParameterStore& params) {
  check_times(r, t);
  PlainLayer layer{params};
  Tensor e = time_embedding(layer, encoder, Tensor::scalar(r), Tensor::scalar(t));
  return {e.values().begin(), e.values().end()};
}

}  // namespace elasticflow
