#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "gfs/feature_map.hpp"
#include "gfs/numerics.hpp"

namespace gfs {

inline constexpr std::size_t kNumFolds = 4;
inline constexpr double kMaxCenterCosine = 0.99;

/// Novel/base partition of dataset class ids for one cross-validation fold.
struct FoldSplit {
  std::size_t fold_id = 0;
  std::vector<std::size_t> base_class_ids;
  std::vector<std::size_t> novel_class_ids;

  std::size_t num_classes() const { return base_class_ids.size() + novel_class_ids.size(); }
  // Dataset class id per bank slot: base ids first, then novel ids.
  std::vector<std::size_t> slot_classes() const;
  // The same partition expressed in bank-slot space: base [0, b), novel [b, N).
  FoldSplit in_slot_space() const;
};

/// Fold f holds the contiguous block [f*N/4, (f+1)*N/4) as novel classes.
/// IndivisibleClassCount unless N is a positive multiple of 4.
std::array<FoldSplit, kNumFolds> make_fold_splits(std::size_t num_classes);
FoldSplit make_fold_split(std::size_t num_classes, std::size_t fold_id);

struct EpisodeSpec {
  std::size_t num_classes = 8;
  std::size_t dim = 16;
  std::size_t shots = 5;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t num_query = 4;
  double noise_sigma = 0.2;
  std::uint64_t seed = 0;
  bool border_void = false;
  // Unit vectors indexed by dataset class id.
  Matrix cluster_centers;
};

/// Random unit centers, resampled until every pairwise cosine is below 0.99.
Matrix make_cluster_centers(std::size_t num_classes, std::size_t dim, std::uint64_t seed);

/// Spec with centers drawn from `seed`.
EpisodeSpec make_episode_spec(std::size_t num_classes, std::size_t dim, std::size_t shots,
                              std::size_t height, std::size_t width, double noise_sigma,
                              std::uint64_t seed);

struct Episode {
  std::vector<Sample> support;
  std::vector<Sample> query;

  bool operator==(const Episode&) const = default;
};

/// Synthetic episode with labels in bank-slot space (see FoldSplit::slot_classes).
/// Support: `shots` samples per novel class, each tiled with axis-aligned
/// rectangles of that class and base classes. Query: `num_query` samples
/// mixing base and novel classes. Features are the class center plus
/// Gaussian noise, renormalized when noise_sigma > 0.
Episode sample_episode(const EpisodeSpec& spec, const FoldSplit& split);

// GFSE episode file, little-endian:
//   "GFSE" | version u32 = 1 | num_support u32 | num_query u32
//   | per sample: H u32 | W u32 | D u32 | H*W*D f64 | H*W i32 labels (-1 = ignore)
inline constexpr std::uint32_t kEpisodeVersion = 1;

std::vector<std::uint8_t> encode_episode(const Episode& episode);
// MalformedFile with byte offset on truncation or corrupt fields; ShapeMismatch
// when the declared shapes disagree with the payload or with each other.
Episode decode_episode(std::span<const std::uint8_t> bytes);

void save_episode(const std::filesystem::path& path, const Episode& episode);
Episode load_feature_episode(const std::filesystem::path& path);

}  // namespace gfs
