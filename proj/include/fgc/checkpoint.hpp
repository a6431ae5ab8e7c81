#pragma once

// Model checkpoint, version 1 (little-endian):
//
//   offset  size     field
//   0       4        magic "FGCK"
//   4       2        u16 format version (1)
//   6       1        u8 float width in bytes (8 = f64)
//   7       1        u8 model kind (0 fgc, 1 mlp, 2 sage)
//   8       4        u32 in_dim
//   12      4        u32 hidden
//   16      4        u32 depth
//   20      4        u32 parameter count P
//   24      8·P      shape table: (u32 rows, u32 cols) per parameter
//           ...      payload: every parameter's values, row-major f64, in table order
//   end−4   4        u32 CRC32 of the payload
//
// Parameter order is Model::parameters(). Optimizer state is not stored.

#include <filesystem>
#include <stdexcept>
#include <string>

#include "fgc/model.hpp"

namespace fgc {

inline constexpr std::uint16_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  enum class Kind { Io, BadMagic, VersionMismatch, WidthMismatch, ShapeMismatch, Truncated,
                    CrcMismatch };
  CheckpointError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

void save_checkpoint(Model& model, const std::filesystem::path& path);
/// Loads values into an already-configured model. The stored kind, widths,
/// depth, and every shape must match `model` exactly.
void load_checkpoint(Model& model, const std::filesystem::path& path);

}  // namespace fgc
