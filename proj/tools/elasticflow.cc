#include <iostream>

#include "CLI11.hpp"
#include "elasticflow/commands.h"

using namespace elasticflow;

namespace {

void add_seed(CLI::App* cmd, std::uint64_t& seed) {
  cmd->add_option("--seed", seed, "RNG seed for every random draw in the command");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"One-step average-velocity flow models for action chunks"};
  app.require_subcommand(1);

  TrainOptions train;
  std::string objective;
  std::uint64_t train_seed = 0;
  auto* train_cmd = app.add_subcommand("train", "Train a model from a JSON run config");
  train_cmd->add_option("--config", train.config, "Run config (JSON)")->required();
  train_cmd->add_option("--out", train.out, "Checkpoint path")->required();
  auto* train_report = train_cmd->add_option("--report", "Train report path (default <out>.report.json)");
  auto* train_seed_opt = train_cmd->add_option("--seed", train_seed, "Override train.seed");
  train_cmd->add_option("--objective", objective, "Override train.objective")
      ->check(CLI::IsMember({"meanflow", "cfm"}));

  SampleOptions sample;
  std::string horizon;
  auto* sample_cmd = app.add_subcommand("sample", "Draw action chunks from a checkpoint into a CSV file");
  sample_cmd->add_option("--ckpt", sample.ckpt, "Checkpoint path")->required();
  sample_cmd->add_option("--out", sample.out, "Output CSV")->required();
  sample_cmd->add_option("--n", sample.n, "Number of chunks");
  auto* sample_w = sample_cmd->add_option("--w", "Guidance scale (default: from the checkpoint)");
  sample_cmd->add_flag("--no-cfg", sample.no_cfg, "Conditional branch only");
  sample_cmd->add_flag("--unconditional", sample.unconditional, "Null condition only (the w = 0 branch)");
  sample_cmd->add_option("--task", sample.task, "Task id");
  sample_cmd->add_option("--goal", sample.goal, "Goal vector, e.g. 1.5,-0.2")->delimiter(',');
  auto* sample_horizon = sample_cmd->add_option("--horizon", horizon, "Horizon: seconds, short or long");
  sample_cmd->add_option("--nfe", sample.nfe, "Steps: 1 for the one-step rule, more for Euler");
  sample_cmd->add_flag("--raw", sample.raw_params, "Use raw weights instead of the EMA");
  add_seed(sample_cmd, sample.seed);

  EvalOptions eval;
  std::string metrics;
  std::string force;
  auto* eval_cmd = app.add_subcommand("eval", "Sample on held-out conditions and report metrics as JSON");
  eval_cmd->add_option("--ckpt", eval.ckpt, "Checkpoint path")->required();
  eval_cmd->add_option("--report", eval.report, "Report path")->required();
  eval_cmd->add_option("--task", eval.task, "short, long or all");
  eval_cmd->add_option("--metrics", metrics, "Comma-separated subset of jerk,energy,spectral,success");
  auto* eval_force = eval_cmd->add_option("--force-horizon", force, "Condition every trial on this horizon");
  eval_cmd->add_option("--n", eval.n, "Trials per task");
  auto* eval_w = eval_cmd->add_option("--w", "Guidance scale (default: from the checkpoint)");
  eval_cmd->add_flag("--no-cfg", eval.no_cfg, "Conditional branch only");
  eval_cmd->add_option("--nfe", eval.nfe, "Sampling steps");
  eval_cmd->add_option("--tol", eval.success_tol, "Reach tolerance for success");
  eval_cmd->add_option("--cutoff", eval.cutoff_bin, "Spectral cutoff bin");
  add_seed(eval_cmd, eval.seed);

  BenchOptions bench;
  auto* bench_cmd = app.add_subcommand("bench", "Median single-sample latency per NFE setting");
  bench_cmd->add_option("--ckpt", bench.ckpt, "Checkpoint path")->required();
  bench_cmd->add_option("--nfe", bench.nfe, "Comma-separated NFE settings")->delimiter(',');
  bench_cmd->add_option("--trials", bench.trials, "Timed calls per setting (>= 10)");
  auto* bench_report = bench_cmd->add_option("--report", "Report path");
  add_seed(bench_cmd, bench.seed);

  OracleCheckOptions oracle;
  auto* oracle_cmd = app.add_subcommand("oracle-check", "Check the average-velocity identity on analytic fields");
  oracle_cmd->add_option("--case", oracle.oracle_case, "delta, gaussian or gmm");
  oracle_cmd->add_option("--tol", oracle.tol, "Largest accepted residual");
  oracle_cmd->add_option("--grid", oracle.grid, "Points per axis of the (z, r, t) grid");
  oracle_cmd->add_option("--fd-step", oracle.h, "Finite-difference step h");
  oracle_cmd->add_option("--steps", oracle.n_steps, "RK4 steps for the brute-force field");
  auto* oracle_report = oracle_cmd->add_option("--report", "Also write the JSON report here");
  std::uint64_t oracle_seed = 0;
  add_seed(oracle_cmd, oracle_seed);  // accepted for uniformity; the check draws nothing

  CfgSweepOptions sweep;
  auto* sweep_cmd = app.add_subcommand("cfg-sweep", "Evaluate one-step samples over a list of guidance scales");
  sweep_cmd->add_option("--ckpt", sweep.ckpt, "Checkpoint path")->required();
  sweep_cmd->add_option("--report", sweep.report, "Report path")->required();
  sweep_cmd->add_option("--w-list", sweep.w_list, "Comma-separated guidance scales")->delimiter(',');
  sweep_cmd->add_option("--task", sweep.task, "short, long or all");
  sweep_cmd->add_option("--n", sweep.n, "Trials per task and scale");
  sweep_cmd->add_option("--tol", sweep.success_tol, "Reach tolerance for success");
  add_seed(sweep_cmd, sweep.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*train_cmd) {
      if (*train_report) train.report = train_report->as<std::string>();
      if (*train_seed_opt) train.seed = train_seed;
      if (!objective.empty()) train.objective = parse_objective(objective);
      cmd_train(train, std::cout);
    } else if (*sample_cmd) {
      if (*sample_w) sample.w = sample_w->as<double>();
      if (*sample_horizon) sample.horizon = horizon;
      cmd_sample(sample, std::cout);
    } else if (*eval_cmd) {
      if (*eval_w) eval.w = eval_w->as<double>();
      if (*eval_force) eval.force_horizon = force;
      std::size_t start = 0;
      while (start < metrics.size()) {
        std::size_t comma = metrics.find(',', start);
        if (comma == std::string::npos) comma = metrics.size();
        if (comma > start) eval.metrics.push_back(metrics.substr(start, comma - start));
        start = comma + 1;
      }
      cmd_eval(eval, std::cout);
    } else if (*bench_cmd) {
      if (*bench_report) bench.report = bench_report->as<std::string>();
      cmd_bench(bench, std::cout);
    } else if (*oracle_cmd) {
      if (*oracle_report) oracle.report = oracle_report->as<std::string>();
      cmd_oracle_check(oracle, std::cout);
    } else if (*sweep_cmd) {
      cmd_cfg_sweep(sweep, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kExitOk;
}
