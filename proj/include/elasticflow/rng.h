#pragma once

#include <cstdint>
#include <random>

#include "elasticflow/tensor.h"

namespace elasticflow {

using Rng = std::mt19937_64;

Real uniform01(Rng& rng);
Real standard_normal(Rng& rng);
bool bernoulli(Rng& rng, Real p);
Tensor normal_tensor(Shape shape, Rng& rng, Real stddev = Real(1));

}  // namespace elasticflow
