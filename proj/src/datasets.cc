#include "elasticflow/datasets.h"

#include <cmath>
#include <numbers>

#include "elasticflow/error.h"

namespace elasticflow {

namespace {

constexpr Real kPi = std::numbers::pi_v<Real>;
constexpr Real kGaussianOffset = 1;
constexpr Real kGaussianStd = Real(0.1);
constexpr Real kMoonNoise = Real(0.05);

Real uniform(Rng& rng, Real lo, Real hi) { return lo + (hi - lo) * uniform01(rng); }

Real min_jerk(Real s) { return s * s * s * (10 + s * (-15 + 6 * s)); }

}  // namespace

std::string to_string(Dataset2D kind) {
  switch (kind) {
    case Dataset2D::kTwoGaussians: return "two_gaussians";
    case Dataset2D::kTwoMoons: return "two_moons";
    case Dataset2D::kCheckerboard: return "checkerboard";
  }
  return "unknown";
}

Dataset2D parse_dataset_2d(const std::string& name) {
  if (name == "two_gaussians") return Dataset2D::kTwoGaussians;
  if (name == "two_moons") return Dataset2D::kTwoMoons;
  if (name == "checkerboard") return Dataset2D::kCheckerboard;
  throw ConfigError("unknown dataset '" + name + "' (expected two_gaussians, two_moons or checkerboard)");
}

Tensor gen_2d_dataset(Dataset2D kind, std::size_t n, Rng& rng) {
  if (n == 0) throw PreconditionError("gen_2d_dataset: n must be >= 1");
  Tensor out = Tensor::matrix(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    switch (kind) {
      case Dataset2D::kTwoGaussians: {
        const Real sign = bernoulli(rng, Real(0.5)) ? Real(1) : Real(-1);
        out.at(i, 0) = sign * kGaussianOffset + kGaussianStd * standard_normal(rng);
        out.at(i, 1) = sign * kGaussianOffset + kGaussianStd * standard_normal(rng);
        break;
      }
      case Dataset2D::kTwoMoons: {
        const bool upper = bernoulli(rng, Real(0.5));
        const Real theta = kPi * uniform01(rng);
        const Real nx = kMoonNoise * standard_normal(rng);
        const Real ny = kMoonNoise * standard_normal(rng);
        if (upper) {
          out.at(i, 0) = std::cos(theta) - Real(0.5) + nx;
          out.at(i, 1) = std::sin(theta) - Real(0.25) + ny;
        } else {
          out.at(i, 0) = Real(0.5) - std::cos(theta) + nx;
          out.at(i, 1) = Real(0.25) - std::sin(theta) + ny;
        }
        break;
      }
      case Dataset2D::kCheckerboard: {
        // 4×4 board on [−2, 2]²; the 8 cells with even (col + row) are filled.
        const auto cell = static_cast<std::size_t>(rng() % 8);
        const std::size_t row = cell / 2;
        const std::size_t col = 2 * (cell % 2) + (row % 2);
        out.at(i, 0) = Real(col) - 2 + uniform01(rng);
        out.at(i, 1) = Real(row) - 2 + uniform01(rng);
        break;
      }
    }
  }
  return out;
}

std::optional<oracle::GMMSpec> dataset_spec(Dataset2D kind) {
  if (kind != Dataset2D::kTwoGaussians) return std::nullopt;
  const Real var = kGaussianStd * kGaussianStd;
  return oracle::GMMSpec{{
      {Real(0.5), {kGaussianOffset, kGaussianOffset}, var},
      {Real(0.5), {-kGaussianOffset, -kGaussianOffset}, var},
  }};
}

Dataset unconditional_dataset(Tensor x) {
  std::vector<Condition> conds(x.rows());
  return Dataset{std::move(x), std::move(conds)};
}

std::string to_string(HorizonLabel label) { return label == HorizonLabel::kShort ? "short" : "long"; }

HorizonLabel parse_horizon_label(const std::string& name) {
  if (name == "short") return HorizonLabel::kShort;
  if (name == "long") return HorizonLabel::kLong;
  throw ConfigError("unknown horizon '" + name + "' (expected short or long)");
}

void HorizonSpec::validate() const {
  if (horizon_steps < 4) throw PreconditionError("HorizonSpec: horizon_steps must be >= 4");
  if (!(band_lo >= 0 && band_lo <= band_hi)) throw PreconditionError("HorizonSpec: invalid band");
  if (!(horizon_seconds > 0)) throw PreconditionError("HorizonSpec: horizon_seconds must be > 0");
  if (!(goal_radius_lo >= 0 && goal_radius_lo <= goal_radius_hi)) {
    throw PreconditionError("HorizonSpec: invalid goal radius range");
  }
  if (!(sway_lo >= 0 && sway_lo <= sway_hi)) throw PreconditionError("HorizonSpec: invalid sway range");
}

HorizonSpec HorizonSpec::short_horizon() { return HorizonSpec{}; }

HorizonSpec HorizonSpec::long_horizon() {
  HorizonSpec spec;
  spec.label = HorizonLabel::kLong;
  spec.band_lo = Real(0.5);
  spec.band_hi = 1;
  spec.horizon_seconds = 2;
  spec.goal_radius_lo = Real(1.5);
  spec.goal_radius_hi = Real(2.5);
  spec.sway_lo = Real(0.1);
  spec.sway_hi = Real(0.3);
  return spec;
}

ChunkDataset gen_chunk_dataset(std::span<const HorizonSpec> horizons, std::size_t n_per, Rng& rng) {
  if (horizons.empty()) throw PreconditionError("gen_chunk_dataset: no horizon specs");
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    horizons[i].validate();
    if (horizons[i].horizon_steps != horizons[0].horizon_steps) {
      throw PreconditionError("gen_chunk_dataset: specs must share horizon_steps");
    }
    for (std::size_t j = 0; j < i; ++j) {
      const bool overlap = horizons[i].band_lo <= horizons[j].band_hi && horizons[j].band_lo <= horizons[i].band_hi;
      if (overlap) throw PreconditionError("gen_chunk_dataset: frequency bands overlap");
    }
  }
  const std::size_t steps = horizons[0].horizon_steps;
  ChunkDataset out;
  out.horizon_steps = steps;
  out.action_dim = 2;
  const std::size_t total = n_per * horizons.size();
  out.x = Tensor::matrix(total, steps * 2);
  out.conds.reserve(total);
  out.labels.reserve(total);

  std::size_t row = 0;
  for (std::size_t i = 0; i < n_per; ++i) {
    for (const HorizonSpec& spec : horizons) {
      const Real angle = uniform(rng, 0, 2 * kPi);
      const Real radius = uniform(rng, spec.goal_radius_lo, spec.goal_radius_hi);
      const Real freq = uniform(rng, spec.band_lo, spec.band_hi);
      const Real sway = uniform(rng, spec.sway_lo, spec.sway_hi) * (bernoulli(rng, Real(0.5)) ? 1 : -1);
      const Real ux = std::cos(angle), uy = std::sin(angle);
      const Real gx = radius * ux, gy = radius * uy;
      for (std::size_t k = 0; k < steps; ++k) {
        // Row k is the action at s = (k + 1)/T_h; the last row is the goal.
        const Real s = Real(k + 1) / Real(steps);
        const Real reach = min_jerk(s);
        const Real lateral = k + 1 == steps ? 0 : sway * std::sin(kPi * s) * std::sin(2 * kPi * freq * s);
        out.x.at(row, 2 * k) = gx * reach - uy * lateral;
        out.x.at(row, 2 * k + 1) = gy * reach + ux * lateral;
      }
      Condition cond;
      cond.goal = {gx, gy};
      cond.horizon_seconds = spec.horizon_seconds;
      out.conds.push_back(std::move(cond));
      out.labels.push_back(spec.label);
      ++row;
    }
  }
  return out;
}

}  // namespace elasticflow
