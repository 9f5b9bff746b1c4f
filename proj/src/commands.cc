#include "elasticflow/commands.h"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <sstream>

#include "elasticflow/analytic_oracle.h"
#include "elasticflow/metrics.h"
#include "elasticflow/sampler.h"
#include "elasticflow/trainer.h"
#include "json.hpp"

namespace elasticflow {

namespace {

using Json = nlohmann::ordered_json;

constexpr std::uint64_t kEvalDataSalt = 0xe7037ed1a0b428dbull;
constexpr std::uint64_t kEvalReferenceSalt = 0x589965cc75374cc3ull;
constexpr std::uint64_t kSampleSalt = 0x8ebc6af09c88c6e3ull;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, v);
  return buf;
}

void write_json(const std::filesystem::path& path, const Json& doc) { write_file(path, doc.dump(2) + "\n"); }

Real horizon_seconds_for(const std::string& text) {
  if (text == "short") return HorizonSpec::short_horizon().horizon_seconds;
  if (text == "long") return HorizonSpec::long_horizon().horizon_seconds;
  double value = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size() || !(value > 0)) {
    throw ConfigError("horizon must be short, long or a positive number of seconds, got '" + text + "'");
  }
  return static_cast<Real>(value);
}

struct LoadedModel {
  Checkpoint ckpt;
  VelocityNetwork net;
  const ParameterStore& params(bool raw) const { return raw ? ckpt.params : ckpt.ema; }
};

LoadedModel load_model(const std::filesystem::path& path) {
  Checkpoint ckpt = load_checkpoint(path);
  VelocityNetwork net = ckpt.network();
  return LoadedModel{std::move(ckpt), std::move(net)};
}

GuidanceConfig guidance_for(const Checkpoint& ckpt, std::optional<double> w, bool no_cfg) {
  GuidanceConfig g = ckpt.config.guidance;
  if (w) g.w = static_cast<Real>(*w);
  if (no_cfg) g.use_cfg = false;
  if (!std::isfinite(g.w) || g.w < 0) throw ConfigError("w must be finite and >= 0");
  return g;
}

// Average-velocity models jump straight from noise to data for one NFE; a
// flow-matching model only knows the diagonal r = t, so it always takes Euler
// steps (a single step for one NFE).
SampleResult draw(const LoadedModel& model, const ParameterStore& params, std::span<const Condition> conds,
                  const GuidanceConfig& guidance, std::size_t nfe, Rng& rng) {
  if (nfe == 0) throw ConfigError("nfe must be >= 1");
  const VelocityField field = network_field(model.net, params);
  const std::size_t dim = model.net.config().input_dim();
  if (nfe == 1 && model.ckpt.config.train.objective == Objective::kMeanFlow) {
    return one_step_sample(field, conds, dim, guidance, rng);
  }
  return euler_sample(field, conds, dim, nfe, guidance, rng);
}

Json latency_json(const LatencyPoint& p) {
  return Json{{"median_ms", p.median_ms}, {"hz", p.hz}, {"timings_ms", p.timings_ms}};
}

struct EvalGroup {
  std::string name;
  std::vector<Condition> conds;
  Tensor reference;  // held-out data for the same group, [n, input_dim]
};

std::vector<std::size_t> rows_with(const ChunkDataset& data, HorizonLabel label) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.labels[i] == label) rows.push_back(i);
  }
  return rows;
}

Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& rows) {
  Tensor out = Tensor::matrix(rows.size(), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = x.row_span(rows[i]);
    std::copy(src.begin(), src.end(), out.row_span(i).begin());
  }
  return out;
}

std::vector<EvalGroup> eval_groups(const Checkpoint& ckpt, const std::string& task, std::size_t n,
                                   std::uint64_t seed) {
  if (n == 0) throw ConfigError("n must be >= 1");
  const DatasetConfig& ds = ckpt.config.dataset;
  std::vector<EvalGroup> groups;
  if (!ds.is_chunks()) {
    if (task != "all" && task != ds.kind) {
      throw ConfigError("task '" + task + "' does not exist for dataset " + ds.kind + " (use all)");
    }
    Rng rng(seed ^ kEvalReferenceSalt);
    groups.push_back({ds.kind, std::vector<Condition>(n), gen_2d_dataset(parse_dataset_2d(ds.kind), n, rng)});
    return groups;
  }
  if (task != "all" && task != "short" && task != "long") {
    throw ConfigError("task must be short, long or all, got '" + task + "'");
  }
  std::vector<HorizonSpec> specs{HorizonSpec::short_horizon(), HorizonSpec::long_horizon()};
  for (auto& s : specs) s.horizon_steps = ds.horizon_steps;
  Rng data_rng(seed ^ kEvalDataSalt);
  Rng ref_rng(seed ^ kEvalReferenceSalt);
  const ChunkDataset data = gen_chunk_dataset(specs, n, data_rng);
  const ChunkDataset reference = gen_chunk_dataset(specs, n, ref_rng);
  for (HorizonLabel label : {HorizonLabel::kShort, HorizonLabel::kLong}) {
    if (task != "all" && task != to_string(label)) continue;
    EvalGroup g;
    g.name = to_string(label);
    for (std::size_t row : rows_with(data, label)) g.conds.push_back(data.conds[row]);
    g.reference = gather_rows(reference.x, rows_with(reference, label));
    groups.push_back(std::move(g));
  }
  return groups;
}

Json evaluate_group(const LoadedModel& model, const EvalGroup& group, std::span<const std::string> metrics,
                    const GuidanceConfig& guidance, std::size_t nfe, const std::optional<std::string>& force,
                    double success_tol, std::size_t cutoff_bin, Rng& rng) {
  std::vector<Condition> conds = group.conds;
  if (force) {
    const Real seconds = horizon_seconds_for(*force);
    for (auto& c : conds) c.horizon_seconds = seconds;
  }
  const SampleResult sample = draw(model, model.ckpt.ema, conds, guidance, nfe, rng);
  const std::size_t steps = model.net.config().horizon_steps;
  const std::size_t dim = model.net.config().action_dim;

  Json out = Json::object();
  for (const std::string& metric : metrics) {
    if (metric == "energy") {
      out["energy"] = energy_distance(sample.x, group.reference);
      continue;
    }
    if (steps == 1) throw ConfigError("metric '" + metric + "' needs a chunk model");
    double total = 0;
    for (std::size_t i = 0; i < conds.size(); ++i) {
      const ActionChunk chunk = chunk_from_row(sample.x, i, steps, dim);
      if (metric == "jerk") {
        // δt = T/N with N = T_h executable steps over the conditioned horizon.
        total += jerk(chunk, conds[i].horizon_seconds / Real(steps));
      } else if (metric == "spectral") {
        total += spectral_energy_ratio(chunk, cutoff_bin);
      } else if (metric == "success") {
        total += reach_success(chunk, group.conds[i], static_cast<Real>(success_tol)) ? 1 : 0;
      }
    }
    out[metric] = total / double(conds.size());
  }
  out["nfe_conditional"] = sample.nfe_conditional;
  out["nfe_total"] = sample.nfe_total;
  return out;
}

void check_metrics(std::span<const std::string> metrics) {
  for (const auto& m : metrics) {
    if (m != "jerk" && m != "energy" && m != "spectral" && m != "success") {
      throw ConfigError("unknown metric '" + m + "' (expected jerk, energy, spectral or success)");
    }
  }
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const VersionError*>(&e)) return kExitVersion;
  if (dynamic_cast<const FormatError*>(&e)) return kExitConfig;
  if (dynamic_cast<const ConfigError*>(&e)) return kExitConfig;
  if (dynamic_cast<const ToleranceError*>(&e)) return kExitTolerance;
  if (dynamic_cast<const NumericError*>(&e)) return kExitNumeric;
  return kExitFailure;
}

std::size_t worker_limit() {
  const char* raw = std::getenv("ELASTICFLOW_THREADS");
  if (raw == nullptr || *raw == '\0') return 1;
  const std::string text(raw);
  std::size_t value = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size() || value == 0) {
    throw ConfigError("ELASTICFLOW_THREADS must be a positive integer, got '" + text + "'");
  }
  return std::min<std::size_t>(value, 1);
}

TrainingData build_training_data(const DatasetConfig& config) {
  Rng rng(config.seed);
  TrainingData out;
  if (config.is_chunks()) {
    std::vector<HorizonSpec> specs{HorizonSpec::short_horizon(), HorizonSpec::long_horizon()};
    for (auto& s : specs) s.horizon_steps = config.horizon_steps;
    out.chunks = gen_chunk_dataset(specs, config.n, rng);
    out.train = out.chunks->as_training_set();
  } else {
    out.train = unconditional_dataset(gen_2d_dataset(parse_dataset_2d(config.kind), config.n, rng));
  }
  return out;
}

void cmd_train(const TrainOptions& options, std::ostream& log) {
  worker_limit();
  RunConfig config = load_run_config(options.config);
  if (options.seed) config.train.seed = *options.seed;
  if (options.objective) config.train.objective = *options.objective;
  config.validate();

  const TrainingData data = build_training_data(config.dataset);
  const VelocityNetwork net = VelocityNetwork::create(config.resolved_network(), config.train.seed);
  TrainResult result;
  try {
    result = train(config.train, data.train, net);
  } catch (const TrainingAborted& e) {
    std::filesystem::path last_good = options.out;
    last_good += ".last_good";
    const TrainResult& good = e.last_good();
    save_checkpoint(last_good, Checkpoint::from_training(config, net, good.params, good.ema));
    throw NumericError(std::string(e.what()) + "; last good parameters saved to " + last_good.string());
  }

  save_checkpoint(options.out, Checkpoint::from_training(config, net, result.params, result.ema));
  Json report{{"objective", to_string(config.train.objective)},
              {"steps", config.train.steps},
              {"seed", config.train.seed},
              {"final_loss", result.report.loss_trace.empty() ? Json(nullptr) : Json(result.report.loss_trace.back())},
              {"checksum", hex64(result.report.checksum)},
              {"ema_checksum", hex64(result.report.ema_checksum)},
              {"loss_trace", result.report.loss_trace}};
  std::filesystem::path report_path = options.report.value_or(std::filesystem::path(options.out) += ".report.json");
  write_json(report_path, report);
  log << "trained " << config.train.steps << " steps (" << to_string(config.train.objective) << ") in "
      << result.report.wall_time_s << " s; checksum " << hex64(result.report.checksum) << "\n";
}

void cmd_sample(const SampleOptions& options, std::ostream& log) {
  worker_limit();
  const LoadedModel model = load_model(options.ckpt);
  const NetworkConfig& nc = model.net.config();
  const GuidanceConfig guidance = guidance_for(model.ckpt, options.w, options.no_cfg || options.unconditional);

  Condition cond;
  cond.task_id = options.task;
  if (options.unconditional) {
    if (!options.goal.empty() || options.horizon) throw ConfigError("--unconditional takes no --goal or --horizon");
    cond = Condition::null_condition();
  } else if (nc.cond_dim > 0) {
    if (options.goal.size() != nc.cond_dim) {
      throw ConfigError("--goal needs " + std::to_string(nc.cond_dim) + " comma-separated values");
    }
    for (double g : options.goal) cond.goal.push_back(static_cast<Real>(g));
  } else if (!options.goal.empty()) {
    throw ConfigError("this model takes no goal");
  }
  if (options.horizon) cond.horizon_seconds = horizon_seconds_for(*options.horizon);
  if (options.task < 0 || static_cast<std::size_t>(options.task) >= nc.n_tasks) {
    throw ConfigError("--task must lie in [0, " + std::to_string(nc.n_tasks) + ")");
  }

  std::ostringstream csv;
  csv << "step";
  for (std::size_t d = 0; d < nc.action_dim; ++d) csv << ",dim" << d;
  csv << "\n";
  std::size_t nfe_cond = 0, nfe_total = 0;
  if (options.n > 0) {
    const std::vector<Condition> conds(options.n, cond);
    Rng rng(options.seed ^ kSampleSalt);
    const SampleResult result = draw(model, model.params(options.raw_params), conds, guidance, options.nfe, rng);
    nfe_cond = result.nfe_conditional;
    nfe_total = result.nfe_total;
    char buf[32];
    for (std::size_t i = 0; i < options.n; ++i) {
      for (std::size_t k = 0; k < nc.horizon_steps; ++k) {
        csv << i * nc.horizon_steps + k;
        for (std::size_t d = 0; d < nc.action_dim; ++d) {
          std::snprintf(buf, sizeof(buf), "%.17g", static_cast<double>(result.x.at(i, k * nc.action_dim + d)));
          csv << ',' << buf;
        }
        csv << "\n";
      }
    }
  }
  write_file(options.out, csv.str());
  log << "sampled " << options.n << " chunk(s); nfe_conditional=" << nfe_cond << " nfe_total=" << nfe_total << "\n";
}

void cmd_eval(const EvalOptions& options, std::ostream& log) {
  worker_limit();
  check_metrics(options.metrics);
  const LoadedModel model = load_model(options.ckpt);
  const GuidanceConfig guidance = guidance_for(model.ckpt, options.w, options.no_cfg);
  if (options.force_horizon) horizon_seconds_for(*options.force_horizon);

  Json report;
  report["metadata"] = {{"dataset", model.ckpt.config.dataset.kind},
                        {"task", options.task},
                        {"metrics", options.metrics},
                        {"n", options.n},
                        {"seed", options.seed},
                        {"w", guidance.w},
                        {"use_cfg", guidance.use_cfg},
                        {"nfe", options.nfe},
                        {"force_horizon", options.force_horizon ? Json(*options.force_horizon) : Json(nullptr)},
                        {"success_tol", options.success_tol},
                        {"cutoff_bin", options.cutoff_bin}};
  if (!options.metrics.empty()) {
    Json results = Json::object();
    Rng rng(options.seed ^ kSampleSalt);
    for (const EvalGroup& group : eval_groups(model.ckpt, options.task, options.n, options.seed)) {
      results[group.name] = evaluate_group(model, group, options.metrics, guidance, options.nfe, options.force_horizon,
                                           options.success_tol, options.cutoff_bin, rng);
    }
    report["results"] = results;
  }
  write_json(options.report, report);
  log << (report.contains("results") ? report["results"].dump() : std::string("{}")) << "\n";
}

void cmd_bench(const BenchOptions& options, std::ostream& log) {
  worker_limit();
  if (options.nfe.empty()) throw ConfigError("--nfe needs at least one value");
  if (options.trials < 10) throw ConfigError("--trials must be >= 10");
  const LoadedModel model = load_model(options.ckpt);
  const NetworkConfig& nc = model.net.config();
  Condition cond;
  if (nc.cond_dim > 0) {
    cond.goal.assign(nc.cond_dim, Real(0));
    cond.goal[0] = 1;
  }
  const std::vector<Condition> conds{cond};

  Json points = Json::array();
  for (bool use_cfg : {false, true}) {
    GuidanceConfig g = model.ckpt.config.guidance;
    g.use_cfg = use_cfg;
    Rng rng(options.seed ^ kSampleSalt);
    const LatencyReport report = bench_latency(
        [&](std::size_t nfe) { draw(model, model.ckpt.ema, conds, g, nfe, rng); }, options.nfe, options.trials);
    for (const LatencyPoint& p : report.points) {
      Json entry = latency_json(p);
      entry["nfe"] = p.nfe;
      entry["use_cfg"] = use_cfg;
      entry["forward_passes"] = p.nfe * (use_cfg ? 2 : 1);
      points.push_back(entry);
      log << "nfe=" << p.nfe << (use_cfg ? " cfg   " : " no-cfg") << " median " << p.median_ms << " ms ("
          << p.hz << " Hz)\n";
    }
  }
  Json report{{"trials", options.trials}, {"threads", 1}, {"points", points}};
  if (options.report) write_json(*options.report, report);
}

void cmd_oracle_check(const OracleCheckOptions& options, std::ostream& log) {
  if (options.grid < 2) throw ConfigError("--grid must be >= 2");
  if (!(options.h > 0 && options.h <= 1e-2)) throw ConfigError("--fd-step must lie in (0, 1e-2]");
  if (!(options.tol >= 0)) throw ConfigError("--tol must be >= 0");
  if (options.n_steps == 0) throw ConfigError("--steps must be >= 1");

  oracle::GMMSpec spec;
  oracle::AverageField field;
  if (options.oracle_case == "delta") {
    const oracle::Vector x0{Real(0.5), Real(-0.3)};
    spec = oracle::GMMSpec::dirac(x0);
    field = oracle::dirac_average_field(x0);
  } else if (options.oracle_case == "gaussian") {
    spec = oracle::GMMSpec::gaussian({Real(0.5), Real(-0.5)}, Real(0.25));
    field = oracle::brute_force_average_field(spec, options.n_steps);
  } else if (options.oracle_case == "gmm") {
    spec = *dataset_spec(Dataset2D::kTwoGaussians);
    field = oracle::brute_force_average_field(spec, options.n_steps);
  } else {
    throw ConfigError("--case must be delta, gaussian or gmm, got '" + options.oracle_case + "'");
  }

  // z walks the segment s·(1, 0.5) − (0, 0.25), s ∈ [−2, 2]; t ∈ [0.4, 0.95];
  // r = f·t with f ∈ [0, 0.9].
  const std::size_t g = options.grid;
  const Real h = static_cast<Real>(options.h);
  double worst = -1;
  Json worst_point;
  for (std::size_t i = 0; i < g; ++i) {
    const Real s = Real(-2) + Real(4) * Real(i) / Real(g - 1);
    const oracle::Vector z{s, Real(0.5) * s - Real(0.25)};
    for (std::size_t j = 0; j < g; ++j) {
      const Real t = Real(0.4) + Real(0.55) * Real(j) / Real(g - 1);
      for (std::size_t k = 0; k < g; ++k) {
        const Real r = Real(0.9) * Real(k) / Real(g - 1) * t;
        const double res = oracle::identity_residual(field, spec, z, r, t, h);
        if (!std::isfinite(res)) throw NumericError("oracle-check: non-finite residual");
        if (res > worst) {
          worst = res;
          worst_point = {{"z", z}, {"r", r}, {"t", t}};
        }
      }
    }
  }
  Json report{{"case", options.oracle_case},
              {"grid", g},
              {"h", options.h},
              {"n_steps", options.n_steps},
              {"tol", options.tol},
              {"max_residual", worst},
              {"worst_point", worst_point},
              {"pass", worst <= options.tol}};
  if (options.report) write_json(*options.report, report);
  log << report.dump() << "\n";
  if (!(worst <= options.tol)) {
    throw ToleranceError("oracle-check: max residual " + Json(worst).dump() + " exceeds tol " +
                         Json(options.tol).dump() + " at worst point " + worst_point.dump());
  }
}

void cmd_cfg_sweep(const CfgSweepOptions& options, std::ostream& log) {
  worker_limit();
  if (options.w_list.empty()) throw ConfigError("--w-list needs at least one value");
  const LoadedModel model = load_model(options.ckpt);
  const bool chunks = model.ckpt.config.dataset.is_chunks();
  std::vector<std::string> metrics{"energy"};
  if (chunks) metrics = {"success", "jerk", "spectral", "energy"};

  Json rows = Json::array();
  for (double w : options.w_list) {
    const GuidanceConfig guidance = guidance_for(model.ckpt, w, false);
    Json row{{"w", w}};
    Rng rng(options.seed ^ kSampleSalt);
    for (const EvalGroup& group : eval_groups(model.ckpt, options.task, options.n, options.seed)) {
      row[group.name] = evaluate_group(model, group, metrics, guidance, 1, std::nullopt, options.success_tol, 3, rng);
    }
    log << row.dump() << "\n";
    rows.push_back(row);
  }
  Json report{{"task", options.task}, {"n", options.n}, {"seed", options.seed}, {"metrics", metrics}, {"sweep", rows}};
  write_json(options.report, report);
}

}  // namespace elasticflow
