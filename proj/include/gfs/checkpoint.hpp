#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "gfs/graph.hpp"
#include "gfs/prototypes.hpp"

namespace gfs {

// GFSP checkpoint, little-endian:
//   "GFSP" | version u32 = 1 | N u32 | D u32 | b u32 | t u64
//   | N*D f64 current | N*D f64 previous | N*N f64 edge weights
//   | N x (u32 byte length, UTF-8 name)
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  PrototypeBank bank;
  EdgeWeightMatrix weights;
};

std::vector<std::uint8_t> encode_checkpoint(const PrototypeBank& bank,
                                            const EdgeWeightMatrix& weights);
// MalformedFile (with byte offset) on truncation, bad magic/version or trailing bytes.
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const std::filesystem::path& path, const PrototypeBank& bank,
                     const EdgeWeightMatrix& weights);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace gfs
