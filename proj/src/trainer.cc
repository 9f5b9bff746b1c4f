#include "elasticflow/trainer.h"

#include <chrono>
#include <cmath>
#include <limits>

#include "elasticflow/error.h"

namespace elasticflow {

namespace {

constexpr Real kBeta1 = Real(0.9);
constexpr Real kBeta2 = Real(0.999);
constexpr Real kAdamEps = Real(1e-8);

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
  if (!(ema_decay >= 0 && ema_decay < 1)) throw ConfigError("ema_decay must lie in [0,1)");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (!(grad_clip >= 0) || !std::isfinite(grad_clip)) throw ConfigError("grad_clip must be finite and >= 0");
  if (!(p_drop >= 0 && p_drop <= 1)) throw ConfigError("p_drop must lie in [0,1]");
  if (!(rho_equal >= 0 && rho_equal <= 1)) throw ConfigError("rho_equal must lie in [0,1]");
}

TrainingAborted::TrainingAborted(std::size_t step, TrainResult last_good)
    : NumericError("training aborted: non-finite loss at step " + std::to_string(step)),
      step_(step),
      last_good_(std::move(last_good)) {}

Trainer::Trainer(const VelocityNetwork& net, TrainConfig config, ParameterStore initial)
    : net_(net), config_(config), params_(std::move(initial)), rng_(config.seed ^ 0x5851f42d4c957f2dull) {
  config_.validate();
  net_.check_parameters(params_);
  ema_ = params_;
  for (const auto& [name, entry] : params_.entries()) {
    first_moment_.emplace(name, Tensor(entry.value.shape()));
    second_moment_.emplace(name, Tensor(entry.value.shape()));
  }
}

Real Trainer::step(const Dataset& data) {
  if (data.size() == 0) throw PreconditionError("train: dataset is empty");
  const std::size_t n = data.x.cols();
  Tensor x = Tensor::matrix(config_.batch_size, n);
  std::vector<Condition> conds;
  conds.reserve(config_.batch_size);
  for (std::size_t b = 0; b < config_.batch_size; ++b) {
    const std::size_t idx = static_cast<std::size_t>(rng_() % data.size());
    for (std::size_t j = 0; j < n; ++j) x.at(b, j) = data.x.at(idx, j);
    conds.push_back(data.conds[idx]);
  }
  FlowBatch batch = draw_flow_batch(x, conds, rng_, config_.rho_equal, config_.p_drop);

  params_.zero_grad();
  const Real loss = evaluate_loss(config_.objective, net_, params_, batch, true);
  for (const auto& [name, entry] : params_.entries()) {
    if (!entry.grad.all_finite()) throw NumericError("non-finite gradient for '" + name + "'");
  }

  if (config_.grad_clip > 0) {
    Real sq = 0;
    for (const auto& [name, entry] : params_.entries()) {
      for (Real g : entry.grad.values()) sq += g * g;
    }
    const Real norm = std::sqrt(sq);
    if (norm > config_.grad_clip) {
      const Real scale = config_.grad_clip / norm;
      for (auto& [name, entry] : params_.entries()) {
        for (Real& g : entry.grad.values()) g *= scale;
      }
    }
  }

  ++step_;
  const Real k = Real(step_);
  const Real bias1 = Real(1) - std::pow(kBeta1, k);
  const Real bias2 = Real(1) - std::pow(kBeta2, k);
  const Real decay = std::min(config_.ema_decay, (Real(1) + k) / (Real(10) + k));
  for (auto& [name, entry] : params_.entries()) {
    Tensor& m = first_moment_.at(name);
    Tensor& v = second_moment_.at(name);
    Tensor& ema = ema_.value(name);
    for (std::size_t i = 0; i < entry.value.size(); ++i) {
      const Real g = entry.grad[i];
      m[i] = kBeta1 * m[i] + (Real(1) - kBeta1) * g;
      v[i] = kBeta2 * v[i] + (Real(1) - kBeta2) * g * g;
      const Real m_hat = m[i] / bias1;
      const Real v_hat = v[i] / bias2;
      entry.value[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + kAdamEps);
      ema[i] = decay * ema[i] + (Real(1) - decay) * entry.value[i];
    }
  }
  return loss;
}

TrainResult train(const TrainConfig& config, const Dataset& data, const VelocityNetwork& net) {
  if (data.size() == 0) throw PreconditionError("train: dataset is empty");
  const auto start = std::chrono::steady_clock::now();
  Trainer trainer(net, config, net.init_parameters(config.seed));
  TrainReport report;
  report.loss_trace.reserve(config.steps);
  for (std::size_t s = 0; s < config.steps; ++s) {
    try {
      report.loss_trace.push_back(trainer.step(data));
    } catch (const NumericError&) {
      // step() validates before touching the parameters, so they are still
      // the last good ones.
      report.checksum = trainer.params().checksum();
      report.ema_checksum = trainer.ema().checksum();
      throw TrainingAborted(s, TrainResult{trainer.params(), trainer.ema(), report});
    }
  }
  report.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report.checksum = trainer.params().checksum();
  report.ema_checksum = trainer.ema().checksum();
  return TrainResult{trainer.params(), trainer.ema(), std::move(report)};
}

}  // namespace elasticflow
