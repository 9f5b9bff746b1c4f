#include "elasticflow/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "elasticflow/error.h"

namespace elasticflow {

namespace {

constexpr char kMagic[4] = {'E', 'F', 'C', 'K'};
constexpr std::uint32_t kMaxRank = 8;

template <class T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double value) { put_le(out, std::bit_cast<std::uint64_t>(value)); }

void put_tensor(std::string& out, const std::string& name, const Tensor& t) {
  put_le(out, static_cast<std::uint32_t>(name.size()));
  out += name;
  put_le(out, static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) put_le(out, static_cast<std::uint64_t>(d));
  for (Real v : t.values()) put_f64(out, static_cast<double>(v));
}

class Cursor {
 public:
  explicit Cursor(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(std::size_t n) {
    if (n > bytes_.size() - pos_) throw FormatError("checkpoint: truncated at byte " + std::to_string(pos_));
    const std::string_view out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  template <class T>
  T get_le() {
    const std::string_view raw = take(sizeof(T));
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      value |= static_cast<T>(static_cast<unsigned char>(raw[i])) << (8 * i);
    }
    return value;
  }

  double get_f64() { return std::bit_cast<double>(get_le<std::uint64_t>()); }
  bool done() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

Tensor bank_tensor(const FourierBank& bank) { return Tensor({1, bank.size()}, bank.frequencies); }

}  // namespace

VelocityNetwork Checkpoint::network() const {
  const NetworkConfig net = config.resolved_network();
  TimeEncoder encoder{net.time_config(), bank_t, bank_dt};
  return VelocityNetwork(net, std::move(encoder));
}

Checkpoint Checkpoint::from_training(const RunConfig& config, const VelocityNetwork& net, ParameterStore params,
                                     ParameterStore ema) {
  return Checkpoint{config, net.encoder().bank_t, net.encoder().bank_dt, std::move(params), std::move(ema)};
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::string out(kMagic, sizeof(kMagic));
  put_le(out, kCheckpointVersion);
  const std::string config = to_json(ckpt.config);
  put_le(out, static_cast<std::uint64_t>(config.size()));
  out += config;
  const std::size_t count = ckpt.params.names().size() + ckpt.ema.names().size() + 2;
  put_le(out, static_cast<std::uint32_t>(count));
  put_tensor(out, "fourier/t", bank_tensor(ckpt.bank_t));
  put_tensor(out, "fourier/dt", bank_tensor(ckpt.bank_dt));
  for (const auto& [name, entry] : ckpt.params.entries()) put_tensor(out, "param/" + name, entry.value);
  for (const auto& [name, entry] : ckpt.ema.entries()) put_tensor(out, "ema/" + name, entry.value);
  return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  Cursor in(bytes);
  if (bytes.size() < 4 || std::memcmp(in.take(4).data(), kMagic, 4) != 0) {
    throw FormatError("checkpoint: bad magic (not an EFCK file)");
  }
  const auto version = in.get_le<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint: format version " + std::to_string(version) + ", this build reads version " +
                       std::to_string(kCheckpointVersion));
  }
  const auto config_len = in.get_le<std::uint64_t>();
  if (config_len > in.remaining()) throw FormatError("checkpoint: config length exceeds file size");
  Checkpoint ckpt;
  try {
    ckpt.config = parse_run_config(std::string(in.take(config_len)));
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint: embedded ") + e.what());
  }
  const Real scale = ckpt.config.network.fourier_scale;
  ckpt.bank_t.scale = scale;
  ckpt.bank_dt.scale = scale;

  const auto count = in.get_le<std::uint32_t>();
  bool have_t = false, have_dt = false;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = in.get_le<std::uint32_t>();
    const std::string name(in.take(name_len));
    const auto rank = in.get_le<std::uint32_t>();
    if (rank > kMaxRank) throw FormatError("checkpoint: tensor '" + name + "' has rank " + std::to_string(rank));
    Shape shape(rank);
    std::size_t size = 1;
    for (auto& d : shape) {
      d = static_cast<std::size_t>(in.get_le<std::uint64_t>());
      if (d != 0 && size > in.remaining() / d) throw FormatError("checkpoint: tensor '" + name + "' too large");
      size *= d;
    }
    if (size > in.remaining() / 8) throw FormatError("checkpoint: tensor '" + name + "' truncated");
    std::vector<Real> values(size);
    for (auto& v : values) v = static_cast<Real>(in.get_f64());
    Tensor tensor(shape, std::move(values));

    if (name == "fourier/t" || name == "fourier/dt") {
      const auto freqs = tensor.values();
      (name == "fourier/t" ? ckpt.bank_t : ckpt.bank_dt).frequencies.assign(freqs.begin(), freqs.end());
      (name == "fourier/t" ? have_t : have_dt) = true;
    } else if (name.starts_with("param/")) {
      ckpt.params.add(name.substr(6), std::move(tensor));
    } else if (name.starts_with("ema/")) {
      ckpt.ema.add(name.substr(4), std::move(tensor));
    } else {
      throw FormatError("checkpoint: unexpected tensor '" + name + "'");
    }
  }
  if (!in.done()) throw FormatError("checkpoint: trailing bytes after last tensor");
  if (!have_t || !have_dt) throw FormatError("checkpoint: missing Fourier banks");
  try {
    const VelocityNetwork net = ckpt.network();
    net.check_parameters(ckpt.params);
    net.check_parameters(ckpt.ema);
  } catch (const PreconditionError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  return ckpt;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw FormatError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << file.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw Error("cannot write '" + path.string() + "'");
  file.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!file) throw Error("write failed for '" + path.string() + "'");
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return deserialize_checkpoint(read_file(path)); }

}  // namespace elasticflow
