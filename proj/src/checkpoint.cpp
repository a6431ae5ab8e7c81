#include "fgc/checkpoint.hpp"

#include <fstream>
#include <iterator>

#include "binary_io.hpp"

namespace fgc {

namespace {

constexpr std::uint8_t kMagic[4] = {'F', 'G', 'C', 'K'};
using Kind = CheckpointError::Kind;

std::uint8_t kind_code(ModelKind k) {
  switch (k) {
    case ModelKind::FgcComp: return 0;
    case ModelKind::Mlp: return 1;
    case ModelKind::SageMean: return 2;
  }
  return 255;
}

void expect(bool ok, Kind kind, const std::string& what) {
  if (!ok) throw CheckpointError(kind, what);
}

}  // namespace

void save_checkpoint(Model& model, const std::filesystem::path& path) {
  const auto params = model.parameters();
  const ModelConfig& cfg = model.config();
  detail::ByteWriter w;
  w.bytes(kMagic);
  w.le<std::uint16_t>(kCheckpointVersion);
  w.le<std::uint8_t>(sizeof(nd::Scalar));
  w.le<std::uint8_t>(kind_code(cfg.kind));
  w.le<std::uint32_t>(static_cast<std::uint32_t>(cfg.in_dim));
  w.le<std::uint32_t>(static_cast<std::uint32_t>(cfg.hidden));
  w.le<std::uint32_t>(static_cast<std::uint32_t>(cfg.depth));
  w.le<std::uint32_t>(static_cast<std::uint32_t>(params.size()));
  for (const nd::Parameter* p : params) {
    w.le<std::uint32_t>(static_cast<std::uint32_t>(p->value.rows()));
    w.le<std::uint32_t>(static_cast<std::uint32_t>(p->value.cols()));
  }
  const std::size_t payload_start = w.size();
  for (const nd::Parameter* p : params)
    for (double x : p->value.data()) w.le<double>(x);
  const auto payload = std::span<const std::uint8_t>(w.buffer()).subspan(payload_start);
  w.le<std::uint32_t>(detail::crc32_of(payload));

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  expect(static_cast<bool>(out), Kind::Io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(w.buffer().data()),
            static_cast<std::streamsize>(w.size()));
  expect(static_cast<bool>(out), Kind::Io, "write failed for " + path.string());
}

void load_checkpoint(Model& model, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  expect(static_cast<bool>(in), Kind::Io, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  detail::ByteReader r(bytes);
  expect(r.has(24), Kind::Truncated, "checkpoint header truncated");
  const auto magic = r.take(4);
  expect(std::equal(magic.begin(), magic.end(), std::begin(kMagic)), Kind::BadMagic,
         "not a checkpoint (bad magic)");
  const auto version = r.le<std::uint16_t>();
  expect(version == kCheckpointVersion, Kind::VersionMismatch,
         "unsupported checkpoint version " + std::to_string(version));
  const auto width = r.le<std::uint8_t>();
  expect(width == sizeof(nd::Scalar), Kind::WidthMismatch,
         "checkpoint float width " + std::to_string(width) + " bytes is not supported");

  const ModelConfig& cfg = model.config();
  const auto kind = r.le<std::uint8_t>();
  const auto in_dim = r.le<std::uint32_t>();
  const auto hidden = r.le<std::uint32_t>();
  const auto depth = r.le<std::uint32_t>();
  const auto count = r.le<std::uint32_t>();
  auto describe = [](std::uint64_t k, std::uint64_t i, std::uint64_t h, std::uint64_t dp) {
    return "kind " + std::to_string(k) + ", in " + std::to_string(i) + ", hidden " +
           std::to_string(h) + ", depth " + std::to_string(dp);
  };
  expect(kind == kind_code(cfg.kind) && in_dim == cfg.in_dim && hidden == cfg.hidden &&
             depth == cfg.depth,
         Kind::ShapeMismatch,
         "checkpoint model (" + describe(kind, in_dim, hidden, depth) +
             ") does not match requested model (" +
             describe(kind_code(cfg.kind), cfg.in_dim, cfg.hidden, cfg.depth) + ")");

  const auto params = model.parameters();
  expect(count == params.size(), Kind::ShapeMismatch,
         "checkpoint has " + std::to_string(count) + " parameters, model has " +
             std::to_string(params.size()));
  expect(r.has(8ull * count), Kind::Truncated, "shape table truncated");
  std::size_t values = 0;
  for (const nd::Parameter* p : params) {
    const auto rows = r.le<std::uint32_t>();
    const auto cols = r.le<std::uint32_t>();
    expect(rows == p->value.rows() && cols == p->value.cols(), Kind::ShapeMismatch,
           "parameter " + p->name + " is " + p->value.shape_string() + " in the model but " +
               std::to_string(rows) + "x" + std::to_string(cols) + " in the checkpoint");
    values += p->value.size();
  }
  expect(r.remaining() == 8 * values + 4, Kind::Truncated, "checkpoint payload length mismatch");
  const auto payload = std::span<const std::uint8_t>(bytes).subspan(r.position(), 8 * values);
  detail::ByteReader crc_reader(std::span<const std::uint8_t>(bytes).subspan(r.position() + 8 * values));
  expect(crc_reader.le<std::uint32_t>() == detail::crc32_of(payload), Kind::CrcMismatch,
         "checkpoint payload CRC32 mismatch");
  for (nd::Parameter* p : params) {
    for (auto& x : p->value.data()) x = r.le<double>();
    p->zero_grad();
  }
}

}  // namespace fgc
