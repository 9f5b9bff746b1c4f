#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "elasticflow/analytic_oracle.h"
#include "elasticflow/rng.h"
#include "elasticflow/tensor.h"
#include "elasticflow/trainer.h"

namespace elasticflow {

enum class Dataset2D { kTwoGaussians, kTwoMoons, kCheckerboard };

std::string to_string(Dataset2D kind);
Dataset2D parse_dataset_2d(const std::string& name);

// [n, 2] samples. two_gaussians: equal mixture of N(±(1,1), 0.1² I).
Tensor gen_2d_dataset(Dataset2D kind, std::size_t n, Rng& rng);

// Analytic law of the generator, where one exists (two_gaussians only).
std::optional<oracle::GMMSpec> dataset_spec(Dataset2D kind);

// Unconditional samples wrapped for the trainer (empty goal vectors).
Dataset unconditional_dataset(Tensor x);

enum class HorizonLabel { kShort, kLong };

std::string to_string(HorizonLabel label);
HorizonLabel parse_horizon_label(const std::string& name);

// One family of reaching chunks. Every chunk is a minimum-jerk reach from
// the origin to a goal at distance [goal_radius_lo, goal_radius_hi] plus a
// sinusoidal sway perpendicular to the reach, windowed by sin(πs) so both
// ends stay pinned. The sway frequency is drawn from
// [band_lo, band_hi] cycles per chunk and its amplitude from
// [sway_lo, sway_hi].
struct HorizonSpec {
  HorizonLabel label = HorizonLabel::kShort;
  std::size_t horizon_steps = 16;
  Real band_lo = 4;
  Real band_hi = 6;
  Real horizon_seconds = Real(0.5);
  Real goal_radius_lo = Real(0.3);
  Real goal_radius_hi = Real(0.8);
  Real sway_lo = Real(0.15);
  Real sway_hi = Real(0.3);

  void validate() const;
  static HorizonSpec short_horizon();
  static HorizonSpec long_horizon();
};

struct ChunkDataset {
  std::size_t horizon_steps = 0;
  std::size_t action_dim = 2;
  Tensor x;  // [N, T_h·2]
  std::vector<Condition> conds;
  std::vector<HorizonLabel> labels;

  std::size_t size() const { return conds.size(); }
  Dataset as_training_set() const { return Dataset{x, conds}; }
};

// n_per chunks for each spec, interleaved spec by spec. Specs must share
// T_h and have pairwise disjoint bands. Conditions carry the goal, task id 0
// and the spec's horizon_seconds.
ChunkDataset gen_chunk_dataset(std::span<const HorizonSpec> horizons, std::size_t n_per, Rng& rng);

}  // namespace elasticflow
