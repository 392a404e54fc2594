#include "ppoue/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ppoue {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes a little-endian host");

constexpr char kMagic[8] = {'P', 'P', 'U', 'E', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  template <typename T>
  void put(T v) {
    char raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    out_.append(raw, sizeof(T));
  }
  void bytes(const char* p, std::size_t n) { out_.append(p, n); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  [[nodiscard]] bool at_end() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw std::runtime_error("checkpoint: truncated data");
  }
  const std::string& in_;
  std::size_t pos_ = 0;
};

void write_net(Writer& w, const DenseNet& net) {
  w.put<std::uint32_t>(static_cast<std::uint32_t>(net.layers().size()));
  for (const Layer& l : net.layers()) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(l.activation));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(l.weight.rows()));
    w.put<std::uint32_t>(static_cast<std::uint32_t>(l.weight.cols()));
    for (Eigen::Index i = 0; i < l.weight.rows(); ++i)
      for (Eigen::Index j = 0; j < l.weight.cols(); ++j) w.put<double>(l.weight(i, j));
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) w.put<double>(l.bias[i]);
  }
}

DenseNet read_net(Reader& r) {
  const auto count = r.get<std::uint32_t>();
  if (count > 64) throw std::runtime_error("checkpoint: implausible layer count");
  std::vector<Layer> layers;
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto act = r.get<std::uint32_t>();
    if (act > 1) throw std::runtime_error("checkpoint: unknown activation");
    const auto rows = r.get<std::uint32_t>();
    const auto cols = r.get<std::uint32_t>();
    if (rows == 0 || cols == 0 || rows > 1u << 16 || cols > 1u << 16)
      throw std::runtime_error("checkpoint: implausible layer shape");
    Layer l{Mat(rows, cols), Vec(rows), static_cast<Activation>(act)};
    for (Eigen::Index i = 0; i < l.weight.rows(); ++i)
      for (Eigen::Index j = 0; j < l.weight.cols(); ++j) l.weight(i, j) = r.get<double>();
    for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = r.get<double>();
    layers.push_back(std::move(l));
  }
  try {
    return DenseNet(std::move(layers));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("checkpoint: ") + e.what());
  }
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.env_name.size()));
  w.bytes(ckpt.env_name.data(), ckpt.env_name.size());
  w.put<std::uint64_t>(ckpt.step);
  w.put<double>(ckpt.log_std);
  write_net(w, ckpt.actor);
  write_net(w, ckpt.critic);
  return w.take();
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic)))
    throw std::runtime_error("checkpoint: bad magic");
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  Checkpoint c;
  const auto name_len = r.get<std::uint32_t>();
  c.env_name = r.bytes(name_len);
  c.step = r.get<std::uint64_t>();
  c.log_std = r.get<double>();
  c.actor = read_net(r);
  c.critic = read_net(r);
  if (!r.at_end()) throw std::runtime_error("checkpoint: trailing bytes");
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const std::string bytes = serialize_checkpoint(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace ppoue
