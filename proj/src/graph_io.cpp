#include "fgc/graph_io.hpp"

#include <fstream>
#include <iterator>

#include "binary_io.hpp"

namespace fgc {

namespace {

constexpr std::uint8_t kMagic[4] = {'F', 'G', 'C', 'G'};
constexpr std::size_t kHeaderSize = 4 + 2 + 8 + 8 + 8;

using Kind = GraphFileError::Kind;

}  // namespace

std::vector<std::uint8_t> encode_graph(const Graph& g) {
  const std::size_t n = g.num_nodes();
  const std::size_t d = g.feature_dim();
  detail::ByteWriter w;
  w.bytes(kMagic);
  w.le<std::uint16_t>(kGraphFileVersion);
  w.le<std::uint64_t>(n);
  w.le<std::uint64_t>(g.num_entries());
  w.le<std::uint64_t>(d);
  for (std::size_t off : g.csr_offsets()) w.le<std::uint64_t>(off);
  for (std::uint32_t j : g.csr_neighbors()) w.le<std::uint32_t>(j);
  for (double x : g.features().data()) w.le<float>(static_cast<float>(x));
  for (std::uint8_t y : g.labels()) w.le<std::uint8_t>(y);
  const auto payload = std::span<const std::uint8_t>(w.buffer()).subspan(kHeaderSize);
  w.le<std::uint32_t>(detail::crc32_of(payload));
  return std::move(w.buffer());
}

Graph decode_graph(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  if (!r.has(4)) throw GraphFileError(Kind::Truncated, "file shorter than the magic bytes");
  const auto magic = r.take(4);
  if (!std::equal(magic.begin(), magic.end(), std::begin(kMagic))) {
    throw GraphFileError(Kind::BadMagic, "not a graph file (bad magic)");
  }
  if (!r.has(2)) throw GraphFileError(Kind::Truncated, "truncated header");
  const auto version = r.le<std::uint16_t>();
  if (version != kGraphFileVersion) {
    throw GraphFileError(Kind::VersionMismatch,
                         "unsupported graph file version " + std::to_string(version));
  }
  if (!r.has(24)) throw GraphFileError(Kind::Truncated, "truncated header");
  const auto n = r.le<std::uint64_t>();
  const auto e = r.le<std::uint64_t>();
  const auto d = r.le<std::uint64_t>();

  // Guard the size arithmetic against absurd header counts before multiplying.
  const std::uint64_t limit = bytes.size();
  if (n >= limit || e > limit || (d != 0 && n * d > limit)) {
    throw GraphFileError(Kind::Truncated, "header counts exceed the file length");
  }
  const std::uint64_t payload_size = 8 * (n + 1) + 4 * e + 4 * n * d + n;
  if (r.remaining() != payload_size + 4) {
    throw GraphFileError(Kind::Truncated, "file length " + std::to_string(bytes.size()) +
                                              " does not match header counts");
  }
  const auto payload = bytes.subspan(kHeaderSize, payload_size);
  detail::ByteReader crc_reader(bytes.subspan(kHeaderSize + payload_size));
  if (crc_reader.le<std::uint32_t>() != detail::crc32_of(payload)) {
    throw GraphFileError(Kind::CrcMismatch, "payload CRC32 mismatch");
  }

  std::vector<std::size_t> offsets(n + 1);
  for (auto& off : offsets) off = static_cast<std::size_t>(r.le<std::uint64_t>());
  std::vector<std::uint32_t> neighbors(e);
  for (auto& j : neighbors) j = r.le<std::uint32_t>();
  nd::Matrix features(n, d);
  for (auto& x : features.data()) x = static_cast<double>(r.le<float>());
  std::vector<std::uint8_t> labels(n);
  for (auto& y : labels) y = r.le<std::uint8_t>();
  try {
    return Graph::from_csr(std::move(offsets), std::move(neighbors), std::move(features),
                           std::move(labels));
  } catch (const GraphError& err) {
    throw GraphFileError(Kind::InvalidGraph, std::string("invalid graph: ") + err.what());
  }
}

void save_graph(const Graph& g, const std::filesystem::path& path) {
  const auto bytes = encode_graph(g);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw GraphFileError(Kind::Io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw GraphFileError(Kind::Io, "write failed for " + path.string());
}

Graph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw GraphFileError(Kind::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_graph(bytes);
}

}  // namespace fgc
