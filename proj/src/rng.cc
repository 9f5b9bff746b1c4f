#include "elasticflow/rng.h"

namespace elasticflow {

Real uniform01(Rng& rng) { return std::uniform_real_distribution<Real>(0, 1)(rng); }

Real standard_normal(Rng& rng) { return std::normal_distribution<Real>(0, 1)(rng); }

// Always consumes exactly one uniform draw, whatever p is.
bool bernoulli(Rng& rng, Real p) { return uniform01(rng) < p; }

Tensor normal_tensor(Shape shape, Rng& rng, Real stddev) {
  Tensor out(std::move(shape));
  std::normal_distribution<Real> dist(0, stddev);
  for (auto& v : out.values()) v = dist(rng);
  return out;
}

}  // namespace elasticflow
