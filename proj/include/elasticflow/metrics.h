#pragma once

#include <functional>
#include <span>
#include <vector>

#include "elasticflow/flow_paths.h"
#include "elasticflow/tensor.h"
#include "elasticflow/velocity_network.h"

namespace elasticflow {

// Mean over interior steps of ||x⃛||², with x⃛ from the forward third
// difference (x[k+3] − 3x[k+2] + 3x[k+1] − x[k]) / dt³, k = 0..T_h−4.
Real jerk(const ActionChunk& x, Real dt);

struct JerkReport {
  std::vector<Real> per_chunk;
  Real mean = 0;
};

JerkReport jerk_report(std::span<const ActionChunk> chunks, std::span<const Real> dt);

// 2·E||A − B|| − E||A − A'|| − E||B − B'|| over all pairs (V-statistic, so
// identical sets give exactly 0). Rows are samples.
Real energy_distance(const Tensor& a, const Tensor& b);

// Fraction of non-DC DFT power in bins k with min(k, T_h − k) > cutoff_bin,
// summed over action dimensions. Zero when there is no non-DC power.
Real spectral_energy_ratio(const ActionChunk& x, std::size_t cutoff_bin);

bool reach_success(const ActionChunk& x, const Condition& cond, Real tol);

struct LatencyPoint {
  std::size_t nfe = 0;
  std::vector<double> timings_ms;
  double median_ms = 0;
  double hz = 0;  // 1000 / median_ms
};

struct LatencyReport {
  std::vector<LatencyPoint> points;
};

// `sample(nfe)` produces one sample with the given number of steps. Each
// setting gets `warmup` untimed calls followed by `trials` timed ones.
LatencyReport bench_latency(const std::function<void(std::size_t nfe)>& sample, std::span<const std::size_t> nfe_list,
                            std::size_t trials, std::size_t warmup = 3);

}  // namespace elasticflow
