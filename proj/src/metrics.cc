#include "elasticflow/metrics.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

#include "elasticflow/error.h"

namespace elasticflow {

Real jerk(const ActionChunk& x, Real dt) {
  if (x.horizon_steps < 4) throw PreconditionError("jerk: need at least 4 steps");
  if (!(dt > 0)) throw PreconditionError("jerk: dt must be > 0");
  const Real inv = Real(1) / (dt * dt * dt);
  const std::size_t n = x.horizon_steps - 3;
  Real total = 0;
  for (std::size_t k = 0; k < n; ++k) {
    Real sq = 0;
    for (std::size_t d = 0; d < x.action_dim; ++d) {
      const Real third = (x.at(k + 3, d) - 3 * x.at(k + 2, d) + 3 * x.at(k + 1, d) - x.at(k, d)) * inv;
      sq += third * third;
    }
    total += sq;
  }
  return total / Real(n);
}

JerkReport jerk_report(std::span<const ActionChunk> chunks, std::span<const Real> dt) {
  if (chunks.size() != dt.size()) throw ShapeError("jerk_report", "one dt per chunk required");
  JerkReport report;
  report.per_chunk.reserve(chunks.size());
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    report.per_chunk.push_back(jerk(chunks[i], dt[i]));
    report.mean += report.per_chunk.back();
  }
  if (!chunks.empty()) report.mean /= Real(chunks.size());
  return report;
}

namespace {

Real mean_pair_distance(const Tensor& a, const Tensor& b) {
  const std::size_t d = a.cols();
  Real total = 0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      Real sq = 0;
      for (std::size_t k = 0; k < d; ++k) {
        const Real diff = a.at(i, k) - b.at(j, k);
        sq += diff * diff;
      }
      total += std::sqrt(sq);
    }
  }
  return total / (Real(a.rows()) * Real(b.rows()));
}

}  // namespace

Real energy_distance(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.cols()) throw ShapeError("energy_distance", a.shape(), b.shape());
  if (a.rows() == 0 || b.rows() == 0) throw PreconditionError("energy_distance: empty sample set");
  const Real value = 2 * mean_pair_distance(a, b) - mean_pair_distance(a, a) - mean_pair_distance(b, b);
  return std::max(value, Real(0));
}

Real spectral_energy_ratio(const ActionChunk& x, std::size_t cutoff_bin) {
  const std::size_t n = x.horizon_steps;
  if (n < 8) throw PreconditionError("spectral_energy_ratio: need at least 8 steps");
  Real high = 0, total = 0;
  for (std::size_t d = 0; d < x.action_dim; ++d) {
    for (std::size_t k = 1; k < n; ++k) {
      Real re = 0, im = 0;
      for (std::size_t j = 0; j < n; ++j) {
        const Real phase = 2 * std::numbers::pi_v<Real> * Real((k * j) % n) / Real(n);
        re += x.at(j, d) * std::cos(phase);
        im -= x.at(j, d) * std::sin(phase);
      }
      const Real power = re * re + im * im;
      total += power;
      if (std::min(k, n - k) > cutoff_bin) high += power;
    }
  }
  // Guard against round-off power in a constant signal.
  Real scale = 0;
  for (Real v : x.values) scale = std::max(scale, std::abs(v));
  if (total <= Real(1e-24) * Real(n * n) * scale * scale) return 0;
  return high / total;
}

bool reach_success(const ActionChunk& x, const Condition& cond, Real tol) {
  if (cond.is_null || cond.goal.size() != x.action_dim) {
    throw PreconditionError("reach_success: condition must carry a goal of the action dimension");
  }
  const auto last = x.step(x.horizon_steps - 1);
  Real sq = 0;
  for (std::size_t d = 0; d < x.action_dim; ++d) {
    const Real diff = last[d] - cond.goal[d];
    sq += diff * diff;
  }
  return std::sqrt(sq) <= tol;
}

LatencyReport bench_latency(const std::function<void(std::size_t nfe)>& sample, std::span<const std::size_t> nfe_list,
                            std::size_t trials, std::size_t warmup) {
  if (trials < 10) throw PreconditionError("bench_latency: trials must be >= 10");
  using Clock = std::chrono::steady_clock;
  LatencyReport report;
  for (std::size_t nfe : nfe_list) {
    if (nfe == 0) throw PreconditionError("bench_latency: nfe must be >= 1");
    for (std::size_t i = 0; i < warmup; ++i) sample(nfe);
    LatencyPoint point;
    point.nfe = nfe;
    point.timings_ms.reserve(trials);
    for (std::size_t i = 0; i < trials; ++i) {
      const auto start = Clock::now();
      sample(nfe);
      point.timings_ms.push_back(std::chrono::duration<double, std::milli>(Clock::now() - start).count());
    }
    std::vector<double> sorted = point.timings_ms;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t mid = sorted.size() / 2;
    point.median_ms = sorted.size() % 2 ? sorted[mid] : (sorted[mid - 1] + sorted[mid]) / 2;
    point.hz = 1000.0 / point.median_ms;
    report.points.push_back(std::move(point));
  }
  return report;
}

}  // namespace elasticflow
