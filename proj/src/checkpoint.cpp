#include "gfs/checkpoint.hpp"

#include <fstream>
#include <iterator>

#include "binary_io.hpp"

namespace gfs {

namespace detail {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::IoError, "read failed for " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

}  // namespace detail

std::vector<std::uint8_t> encode_checkpoint(const PrototypeBank& bank,
                                            const EdgeWeightMatrix& weights) {
  const std::size_t n = bank.num_classes();
  if (weights.size() != n || weights.weights.cols() != n) {
    throw Error(ErrorCode::ShapeMismatch, "edge weights do not match the bank");
  }
  detail::ByteWriter w;
  w.magic("GFSP");
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(n));
  w.u32(static_cast<std::uint32_t>(bank.dim()));
  w.u32(static_cast<std::uint32_t>(bank.base_count()));
  w.u64(bank.iteration());
  for (double v : bank.current().data()) w.f64(v);
  for (double v : bank.previous().data()) w.f64(v);
  for (double v : weights.weights.data()) w.f64(v);
  for (const auto& name : bank.class_names()) w.string(name);
  return w.take();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  r.expect_magic("GFSP");
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion) r.fail("unsupported version " + std::to_string(version));
  const std::size_t n = r.u32("N");
  const std::size_t dim = r.u32("D");
  const std::size_t base = r.u32("b");
  const std::uint64_t t = r.u64("t");
  if (n == 0 || dim == 0 || base == 0 || base > n) r.fail("invalid N/D/b header");
  // Reject absurd headers before allocating.
  const std::size_t cells = r.remaining() / 8;
  if (n * dim > cells / 2 || n * n > cells - 2 * n * dim) {
    r.fail("payload shorter than header implies");
  }

  Matrix current(n, dim), previous(n, dim), edges(n, n);
  for (double& v : current.data()) v = r.f64("current prototypes");
  for (double& v : previous.data()) v = r.f64("previous prototypes");
  for (double& v : edges.data()) v = r.f64("edge weights");
  std::vector<std::string> names;
  names.reserve(n);
  for (std::size_t i = 0; i < n; ++i) names.push_back(r.string("class name"));
  if (r.remaining() != 0) r.fail("trailing bytes after class names");

  return {PrototypeBank::from_state(base, t, std::move(names), std::move(current),
                                    std::move(previous)),
          EdgeWeightMatrix{std::move(edges), false}};
}

void save_checkpoint(const std::filesystem::path& path, const PrototypeBank& bank,
                     const EdgeWeightMatrix& weights) {
  detail::write_file(path, encode_checkpoint(bank, weights));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(detail::read_file(path));
}

}  // namespace gfs
