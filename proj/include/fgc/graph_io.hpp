#pragma once

// GraphFileV1 container (all integers little-endian):
//
//   offset  size          field
//   0       4             magic "FGCG"
//   4       2             u16 format version (1)
//   6       8             u64 num_nodes      (n)
//   14      8             u64 num_entries    (e, stored directed entries = 2 × edges)
//   22      8             u64 feature_dim    (d)
//   30      8·(n+1)       u64 csr_offsets
//           4·e           u32 csr_neighbors
//           4·n·d         f32 features, row-major
//           n             u8 labels
//   end−4   4             u32 CRC32 (zlib/IEEE) of every payload byte from
//                         csr_offsets through labels
//
// Features are promoted to double on load, so a save/load round trip is exact
// for feature values representable in f32.

#include <filesystem>
#include <stdexcept>
#include <string>

#include "fgc/graph.hpp"

namespace fgc {

inline constexpr std::uint16_t kGraphFileVersion = 1;

class GraphFileError : public std::runtime_error {
 public:
  enum class Kind { Io, BadMagic, VersionMismatch, Truncated, CrcMismatch, InvalidGraph };

  GraphFileError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

void save_graph(const Graph& g, const std::filesystem::path& path);
Graph load_graph(const std::filesystem::path& path);

/// In-memory encode/decode behind save_graph/load_graph.
std::vector<std::uint8_t> encode_graph(const Graph& g);
Graph decode_graph(std::span<const std::uint8_t> bytes);

}  // namespace fgc
