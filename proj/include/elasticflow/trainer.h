#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "elasticflow/error.h"
#include "elasticflow/objective.h"
#include "elasticflow/parameter_store.h"
#include "elasticflow/velocity_network.h"

namespace elasticflow {

struct TrainConfig {
  Objective objective = Objective::kMeanFlow;
  Real learning_rate = Real(1e-3);
  std::size_t batch_size = 64;
  std::size_t steps = 1000;
  Real p_drop = Real(0.1);
  Real rho_equal = Real(0.5);
  Real ema_decay = Real(0.999);
  Real grad_clip = 0;  // global gradient-norm cap; 0 disables
  std::uint64_t seed = 0;

  void validate() const;
};

// Training examples: x is [N, input_dim], one condition per row.
struct Dataset {
  Tensor x;
  std::vector<Condition> conds;

  std::size_t size() const { return conds.size(); }
};

struct TrainReport {
  std::vector<Real> loss_trace;  // one entry per step
  double wall_time_s = 0;
  std::uint64_t checksum = 0;      // trained parameters
  std::uint64_t ema_checksum = 0;  // EMA parameters
};

struct TrainResult {
  ParameterStore params;
  ParameterStore ema;
  TrainReport report;
};

// Raised when a step produces a non-finite loss. Carries the parameters from
// the last step that completed cleanly.
class TrainingAborted : public NumericError {
 public:
  TrainingAborted(std::size_t step, TrainResult last_good);

  std::size_t step() const { return step_; }
  const TrainResult& last_good() const { return last_good_; }

 private:
  std::size_t step_;
  TrainResult last_good_;
};

// Adam (β₁ = 0.9, β₂ = 0.999, ε = 1e-8) on minibatches drawn with replacement,
// with an exponential moving average of the parameters. The EMA uses the
// warm-up decay min(ema_decay, (1 + k)/(10 + k)) at step k.
class Trainer {
 public:
  Trainer(const VelocityNetwork& net, TrainConfig config, ParameterStore initial);

  // One optimizer step; returns the minibatch loss before the update. Throws
  // NumericError, leaving the parameters untouched, if the loss or any
  // gradient is not finite.
  Real step(const Dataset& data);

  std::size_t steps_taken() const { return step_; }
  const ParameterStore& params() const { return params_; }
  const ParameterStore& ema() const { return ema_; }
  ParameterStore& mutable_params() { return params_; }

 private:
  const VelocityNetwork& net_;
  TrainConfig config_;
  ParameterStore params_;
  ParameterStore ema_;
  std::map<std::string, Tensor> first_moment_;
  std::map<std::string, Tensor> second_moment_;
  Rng rng_;
  std::size_t step_ = 0;
};

// Runs config.steps optimizer steps from net.init_parameters(config.seed).
TrainResult train(const TrainConfig& config, const Dataset& data, const VelocityNetwork& net);

}  // namespace elasticflow
