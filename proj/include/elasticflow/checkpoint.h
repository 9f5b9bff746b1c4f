#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "elasticflow/parameter_store.h"
#include "elasticflow/run_config.h"
#include "elasticflow/time_encoding.h"
#include "elasticflow/velocity_network.h"

// Binary layout, all integers and floats little-endian:
//   "EFCK" | u32 version | u64 n | n bytes of JSON run config | u32 count |
//   count × (u32 name length | name | u32 rank | rank × u64 dim | f64 values)
// Tensors are named "param/…", "ema/…", "fourier/t" and "fourier/dt".
namespace elasticflow {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  RunConfig config;
  FourierBank bank_t;
  FourierBank bank_dt;
  ParameterStore params;
  ParameterStore ema;

  // Rebuilds the network with the stored banks.
  VelocityNetwork network() const;
  static Checkpoint from_training(const RunConfig& config, const VelocityNetwork& net, ParameterStore params,
                                  ParameterStore ema);
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
// FormatError on malformed input, VersionError on a version mismatch.
Checkpoint deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Whole-file helpers shared by the commands.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace elasticflow
