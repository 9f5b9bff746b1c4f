#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "elasticflow/checkpoint.h"
#include "elasticflow/datasets.h"
#include "elasticflow/error.h"
#include "elasticflow/objective.h"

// Library side of the command-line tool. Every command writes its artifacts
// to the paths it is given, prints a short summary to `log`, and reports
// failures by exception; exit_code_for() maps those to process exit codes.
namespace elasticflow {

// oracle-check found a residual above the requested tolerance.
class ToleranceError : public Error {
 public:
  using Error::Error;
};

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitConfig = 2,
  kExitNumeric = 3,
  kExitVersion = 4,
  kExitTolerance = 5,
};

int exit_code_for(const std::exception& e);

// ELASTICFLOW_THREADS, validated; 1 when unset. All commands run on one
// thread, so the value only caps (never raises) the worker count.
std::size_t worker_limit();

// Training data described by a run config. `chunks` is set for the chunk task.
struct TrainingData {
  Dataset train;
  std::optional<ChunkDataset> chunks;
};
TrainingData build_training_data(const DatasetConfig& config);

struct TrainOptions {
  std::filesystem::path config;
  std::filesystem::path out;
  std::optional<std::filesystem::path> report;  // default: <out>.report.json
  std::optional<std::uint64_t> seed;
  std::optional<Objective> objective;
};
// On a non-finite loss the last good parameters go to <out>.last_good and a
// NumericError is raised.
void cmd_train(const TrainOptions& options, std::ostream& log);

struct SampleOptions {
  std::filesystem::path ckpt;
  std::filesystem::path out;
  std::size_t n = 1;
  std::optional<double> w;  // default: the checkpoint's guidance.w
  bool no_cfg = false;
  bool unconditional = false;  // null condition only; implies no_cfg
  int task = 0;
  std::vector<double> goal;
  std::optional<std::string> horizon;  // seconds, or "short" / "long"
  std::size_t nfe = 1;
  std::uint64_t seed = 0;
  bool raw_params = false;  // sample from the raw weights instead of the EMA
};
// CSV with header step,dim0,...; chunk i occupies rows i·T_h .. i·T_h + T_h − 1.
void cmd_sample(const SampleOptions& options, std::ostream& log);

struct EvalOptions {
  std::filesystem::path ckpt;
  std::filesystem::path report;
  std::string task = "all";  // short, long or all; 2-D sets accept only all
  std::vector<std::string> metrics;
  std::optional<std::string> force_horizon;
  std::size_t n = 200;  // trials per task
  std::optional<double> w;
  bool no_cfg = false;
  std::size_t nfe = 1;
  double success_tol = 0.1;
  std::size_t cutoff_bin = 3;
  std::uint64_t seed = 0;
};
void cmd_eval(const EvalOptions& options, std::ostream& log);

struct BenchOptions {
  std::filesystem::path ckpt;
  std::optional<std::filesystem::path> report;
  std::vector<std::size_t> nfe{1, 10};
  std::size_t trials = 50;
  std::uint64_t seed = 0;
};
void cmd_bench(const BenchOptions& options, std::ostream& log);

struct OracleCheckOptions {
  std::string oracle_case = "delta";  // delta, gaussian or gmm
  double tol = 1e-6;
  std::size_t grid = 10;
  double h = 1e-4;
  std::size_t n_steps = 256;
  std::optional<std::filesystem::path> report;  // JSON also goes to `log`
};
// Throws ToleranceError naming the worst grid point when the max residual
// exceeds tol.
void cmd_oracle_check(const OracleCheckOptions& options, std::ostream& log);

struct CfgSweepOptions {
  std::filesystem::path ckpt;
  std::filesystem::path report;
  std::vector<double> w_list{1.0, 1.5, 2.0, 2.5, 3.0, 4.0};
  std::string task = "all";
  std::size_t n = 200;
  double success_tol = 0.1;
  std::uint64_t seed = 0;
};
void cmd_cfg_sweep(const CfgSweepOptions& options, std::ostream& log);

}  // namespace elasticflow
