#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "elasticflow/sampler.h"
#include "elasticflow/trainer.h"
#include "elasticflow/velocity_network.h"

namespace elasticflow {

// Which training data to generate. "chunks" is the mixed short/long reaching
// task; every other kind names a 2-D toy set. For chunks, n counts examples
// per horizon.
struct DatasetConfig {
  std::string kind = "two_gaussians";
  std::size_t n = 4096;
  std::uint64_t seed = 0;
  std::size_t horizon_steps = 16;  // chunks only

  bool is_chunks() const { return kind == "chunks"; }
};

// Whole-run settings. The network's input and condition shapes are not set
// here: horizon_steps, action_dim and cond_dim follow from the dataset.
struct RunConfig {
  DatasetConfig dataset;
  NetworkConfig network;
  TrainConfig train;
  GuidanceConfig guidance;

  // Copy of `network` with the data-dependent shapes filled in.
  NetworkConfig resolved_network() const;
  void validate() const;
};

// Strict JSON: every section and field is optional, but unknown keys, wrong
// types and out-of-range values raise ConfigError naming the line and the
// dotted field path.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

// Canonical form (fixed key order, every field present).
std::string to_json(const RunConfig& config);

}  // namespace elasticflow
