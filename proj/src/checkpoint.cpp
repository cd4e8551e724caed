#include "tsc/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace tsc {

namespace {

constexpr std::array<std::uint8_t, 8> kMagic = {'T', 'S', 'C', 'Q', 'N', 'E', 'T', 0};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n)
      throw CheckpointError(CheckpointError::Kind::Truncated,
                            std::string("checkpoint truncated while reading ") + what);
  }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  double f64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string to_string(const MlpSpec& spec) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < spec.layer_dims.size(); ++i) os << (i ? "," : "") << spec.layer_dims[i];
  os << ']';
  return os.str();
}

std::vector<std::uint8_t> save_checkpoint(const QNetwork& net) {
  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(net.spec.layer_dims.size()));
  for (int d : net.spec.layer_dims) put_u32(out, static_cast<std::uint32_t>(d));
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    const auto& w = net.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) put_f64(out, w(r, c));
    for (Eigen::Index r = 0; r < net.biases[l].rows(); ++r) put_f64(out, net.biases[l](r));
  }
  return out;
}

QNetwork load_checkpoint(std::span<const std::uint8_t> bytes, const std::optional<MlpSpec>& expected) {
  using Kind = CheckpointError::Kind;
  Reader in(bytes);
  const auto magic = in.take(kMagic.size(), "magic");
  if (!std::equal(magic.begin(), magic.end(), kMagic.begin()))
    throw CheckpointError(Kind::VersionMismatch, "not a checkpoint (bad magic)");
  const std::uint32_t version = in.u32("version");
  if (version != kCheckpointVersion)
    throw CheckpointError(Kind::VersionMismatch, "checkpoint format version " + std::to_string(version) +
                                                     ", expected " + std::to_string(kCheckpointVersion));

  const std::uint32_t ndims = in.u32("dim count");
  if (ndims < 2 || ndims > 64) throw CheckpointError(Kind::ShapeMismatch, "implausible layer count");
  MlpSpec spec;
  for (std::uint32_t i = 0; i < ndims; ++i) {
    const std::uint32_t d = in.u32("layer dims");
    if (d == 0 || d > (1u << 20)) throw CheckpointError(Kind::ShapeMismatch, "implausible layer dim");
    spec.layer_dims.push_back(static_cast<int>(d));
  }
  if (expected && *expected != spec)
    throw CheckpointError(Kind::ShapeMismatch,
                          "checkpoint has dims " + to_string(spec) + ", expected " + to_string(*expected));

  QNetwork net = zero_network<double>(spec);
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    auto& w = net.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = in.f64("weights");
    for (Eigen::Index r = 0; r < net.biases[l].rows(); ++r) net.biases[l](r) = in.f64("biases");
  }
  if (in.remaining() != 0)
    throw CheckpointError(Kind::ShapeMismatch, "trailing bytes after declared layers");
  if (!all_finite(net)) throw CheckpointError(Kind::ShapeMismatch, "non-finite parameter in checkpoint");
  return net;
}

void write_checkpoint(const std::filesystem::path& path, const QNetwork& net) {
  const auto bytes = save_checkpoint(net);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(CheckpointError::Kind::Io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError(CheckpointError::Kind::Io, "write failed: " + path.string());
}

QNetwork read_checkpoint(const std::filesystem::path& path, const std::optional<MlpSpec>& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointError::Kind::Io, "cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return load_checkpoint(bytes, expected);
}

}  // namespace tsc
