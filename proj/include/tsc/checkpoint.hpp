#pragma once

#include "tsc/mlp.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace tsc {

// Layout, all little-endian:
//   8 bytes   magic "TSCQNET\0"
//   u32       format version
//   u32       number of layer dims n
//   n * u32   layer dims
//   per layer: (out x in) weights row-major, then out biases, as f64
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { VersionMismatch, Truncated, ShapeMismatch, Io };

  CheckpointError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::vector<std::uint8_t> save_checkpoint(const QNetwork& net);

/// Parses a checkpoint. If `expected` is given the stored dims must match it.
/// Nothing is returned unless the whole buffer validates.
QNetwork load_checkpoint(std::span<const std::uint8_t> bytes,
                         const std::optional<MlpSpec>& expected = std::nullopt);

void write_checkpoint(const std::filesystem::path& path, const QNetwork& net);
QNetwork read_checkpoint(const std::filesystem::path& path,
                         const std::optional<MlpSpec>& expected = std::nullopt);

}  // namespace tsc
