#include "elasticflow/run_config.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "elasticflow/datasets.h"
#include "elasticflow/error.h"
#include "json.hpp"

namespace elasticflow {

namespace {

using Json = nlohmann::ordered_json;

// Line of the first `"key":` occurrence, for diagnostics only.
std::size_t line_of_key(const std::string& text, const std::string& key) {
  const std::string quoted = "\"" + key + "\"";
  std::size_t pos = 0;
  while ((pos = text.find(quoted, pos)) != std::string::npos) {
    std::size_t after = pos + quoted.size();
    while (after < text.size() && std::isspace(static_cast<unsigned char>(text[after]))) ++after;
    if (after < text.size() && text[after] == ':') {
      return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n'));
    }
    pos = after;
  }
  return 0;
}

class Reader {
 public:
  explicit Reader(const std::string& text) : text_(text) {}

  [[noreturn]] void fail(const std::string& path, const std::string& message) const {
    const auto dot = path.rfind('.');
    const std::size_t line = line_of_key(text_, dot == std::string::npos ? path : path.substr(dot + 1));
    std::string where = line ? "line " + std::to_string(line) + ", " : "";
    throw ConfigError("config: " + where + "field '" + path + "': " + message);
  }

  void check_keys(const Json& obj, const std::string& prefix, std::initializer_list<const char*> allowed) const {
    if (!obj.is_object()) fail(prefix.empty() ? "<root>" : prefix, "expected an object");
    for (const auto& item : obj.items()) {
      bool known = false;
      for (const char* name : allowed) known = known || item.key() == name;
      if (!known) fail(prefix.empty() ? item.key() : prefix + "." + item.key(), "unknown field");
    }
  }

  void read(const Json& obj, const std::string& prefix, const char* key, std::size_t& out) const {
    if (!obj.contains(key)) return;
    const Json& v = obj.at(key);
    if (!v.is_number_unsigned()) fail(prefix + "." + key, "expected a non-negative integer");
    out = v.get<std::size_t>();
  }
  void read(const Json& obj, const std::string& prefix, const char* key, Real& out) const {
    if (!obj.contains(key)) return;
    const Json& v = obj.at(key);
    if (!v.is_number()) fail(prefix + "." + key, "expected a number");
    out = static_cast<Real>(v.get<double>());
  }
  void read(const Json& obj, const std::string& prefix, const char* key, bool& out) const {
    if (!obj.contains(key)) return;
    const Json& v = obj.at(key);
    if (!v.is_boolean()) fail(prefix + "." + key, "expected true or false");
    out = v.get<bool>();
  }
  void read(const Json& obj, const std::string& prefix, const char* key, std::string& out) const {
    if (!obj.contains(key)) return;
    const Json& v = obj.at(key);
    if (!v.is_string()) fail(prefix + "." + key, "expected a string");
    out = v.get<std::string>();
  }

  template <class F>
  void check(const std::string& path, F&& f) const {
    try {
      f();
    } catch (const Error& e) {
      fail(path, e.what());
    }
  }

 private:
  const std::string& text_;
};

}  // namespace

NetworkConfig RunConfig::resolved_network() const {
  NetworkConfig net = network;
  if (dataset.is_chunks()) {
    net.horizon_steps = dataset.horizon_steps;
    net.action_dim = 2;
    net.cond_dim = 2;
  } else {
    net.horizon_steps = 1;
    net.action_dim = 2;
    net.cond_dim = 0;
  }
  return net;
}

void RunConfig::validate() const {
  if (!dataset.is_chunks()) parse_dataset_2d(dataset.kind);
  if (dataset.n == 0) throw ConfigError("dataset.n must be >= 1");
  if (dataset.is_chunks() && dataset.horizon_steps < 8) throw ConfigError("dataset.horizon_steps must be >= 8");
  const std::pair<const char*, std::size_t> dims[] = {{"network.hidden_dim", network.hidden_dim},
                                                      {"network.n_blocks", network.n_blocks},
                                                      {"network.d_emb", network.d_emb},
                                                      {"network.n_tasks", network.n_tasks},
                                                      {"network.n_frequencies", network.n_frequencies}};
  for (const auto& [name, value] : dims) {
    if (value == 0) throw ConfigError(std::string(name) + " must be >= 1");
  }
  if (!(network.fourier_scale > 0)) throw ConfigError("network.fourier_scale must be > 0");
  if (!(train.learning_rate > 0)) throw ConfigError("train.learning_rate must be > 0");
  if (train.batch_size == 0) throw ConfigError("train.batch_size must be >= 1");
  if (!(train.p_drop >= 0 && train.p_drop <= 1)) throw ConfigError("train.p_drop must lie in [0,1]");
  if (!(train.rho_equal >= 0 && train.rho_equal <= 1)) throw ConfigError("train.rho_equal must lie in [0,1]");
  if (!(train.ema_decay >= 0 && train.ema_decay < 1)) throw ConfigError("train.ema_decay must lie in [0,1)");
  if (!(train.grad_clip >= 0) || !std::isfinite(train.grad_clip)) {
    throw ConfigError("train.grad_clip must be finite and >= 0");
  }
  if (!std::isfinite(guidance.w) || guidance.w < 0) throw ConfigError("guidance.w must be finite and >= 0");
}

RunConfig parse_run_config(const std::string& text) {
  Json root;
  try {
    root = Json::parse(text);
  } catch (const Json::parse_error& e) {
    const std::size_t byte = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<long>(byte ? byte - 1 : 0), '\n');
    throw ConfigError("config: line " + std::to_string(line) + ": malformed JSON (" + e.what() + ")");
  }
  const Reader in(text);
  in.check_keys(root, "", {"dataset", "network", "train", "guidance"});

  RunConfig cfg;
  if (root.contains("dataset")) {
    const Json& d = root.at("dataset");
    in.check_keys(d, "dataset", {"kind", "n", "seed", "horizon_steps"});
    in.read(d, "dataset", "kind", cfg.dataset.kind);
    in.read(d, "dataset", "n", cfg.dataset.n);
    in.read(d, "dataset", "seed", cfg.dataset.seed);
    in.read(d, "dataset", "horizon_steps", cfg.dataset.horizon_steps);
    if (!cfg.dataset.is_chunks()) in.check("dataset.kind", [&] { parse_dataset_2d(cfg.dataset.kind); });
  }
  if (root.contains("network")) {
    const Json& n = root.at("network");
    in.check_keys(n, "network", {"hidden_dim", "n_blocks", "d_emb", "n_tasks", "n_frequencies", "fourier_scale"});
    in.read(n, "network", "hidden_dim", cfg.network.hidden_dim);
    in.read(n, "network", "n_blocks", cfg.network.n_blocks);
    in.read(n, "network", "d_emb", cfg.network.d_emb);
    in.read(n, "network", "n_tasks", cfg.network.n_tasks);
    in.read(n, "network", "n_frequencies", cfg.network.n_frequencies);
    in.read(n, "network", "fourier_scale", cfg.network.fourier_scale);
  }
  if (root.contains("train")) {
    const Json& t = root.at("train");
    in.check_keys(t, "train", {"objective", "learning_rate", "batch_size", "steps", "p_drop", "rho_equal",
                               "ema_decay", "grad_clip", "seed"});
    std::string objective = to_string(cfg.train.objective);
    in.read(t, "train", "objective", objective);
    in.check("train.objective", [&] { cfg.train.objective = parse_objective(objective); });
    in.read(t, "train", "learning_rate", cfg.train.learning_rate);
    in.read(t, "train", "batch_size", cfg.train.batch_size);
    in.read(t, "train", "steps", cfg.train.steps);
    in.read(t, "train", "p_drop", cfg.train.p_drop);
    in.read(t, "train", "rho_equal", cfg.train.rho_equal);
    in.read(t, "train", "ema_decay", cfg.train.ema_decay);
    in.read(t, "train", "grad_clip", cfg.train.grad_clip);
    in.read(t, "train", "seed", cfg.train.seed);
  }
  if (root.contains("guidance")) {
    const Json& g = root.at("guidance");
    in.check_keys(g, "guidance", {"w", "use_cfg"});
    in.read(g, "guidance", "w", cfg.guidance.w);
    in.read(g, "guidance", "use_cfg", cfg.guidance.use_cfg);
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    const auto space = msg.find(' ');
    in.fail(msg.substr(0, space), msg.substr(space + 1));
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw ConfigError("config: cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << file.rdbuf();
  return parse_run_config(buf.str());
}

std::string to_json(const RunConfig& c) {
  Json root;
  root["dataset"] = {{"kind", c.dataset.kind},
                     {"n", c.dataset.n},
                     {"seed", c.dataset.seed},
                     {"horizon_steps", c.dataset.horizon_steps}};
  root["network"] = {{"hidden_dim", c.network.hidden_dim},
                     {"n_blocks", c.network.n_blocks},
                     {"d_emb", c.network.d_emb},
                     {"n_tasks", c.network.n_tasks},
                     {"n_frequencies", c.network.n_frequencies},
                     {"fourier_scale", static_cast<double>(c.network.fourier_scale)}};
  root["train"] = {{"objective", to_string(c.train.objective)},
                   {"learning_rate", static_cast<double>(c.train.learning_rate)},
                   {"batch_size", c.train.batch_size},
                   {"steps", c.train.steps},
                   {"p_drop", static_cast<double>(c.train.p_drop)},
                   {"rho_equal", static_cast<double>(c.train.rho_equal)},
                   {"ema_decay", static_cast<double>(c.train.ema_decay)},
                   {"grad_clip", static_cast<double>(c.train.grad_clip)},
                   {"seed", c.train.seed}};
  root["guidance"] = {{"w", static_cast<double>(c.guidance.w)}, {"use_cfg", c.guidance.use_cfg}};
  return root.dump(2);
}

}  // namespace elasticflow
