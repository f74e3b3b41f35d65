#include "gfs/episodes.hpp"

#include <algorithm>
#include <random>
#include <string>

#include "binary_io.hpp"
#include "gfs/error.hpp"

namespace gfs {

std::vector<std::size_t> FoldSplit::slot_classes() const {
  std::vector<std::size_t> ids = base_class_ids;
  ids.insert(ids.end(), novel_class_ids.begin(), novel_class_ids.end());
  return ids;
}

FoldSplit FoldSplit::in_slot_space() const {
  FoldSplit s;
  s.fold_id = fold_id;
  for (std::size_t i = 0; i < base_class_ids.size(); ++i) s.base_class_ids.push_back(i);
  for (std::size_t i = 0; i < novel_class_ids.size(); ++i) {
    s.novel_class_ids.push_back(base_class_ids.size() + i);
  }
  return s;
}

FoldSplit make_fold_split(std::size_t num_classes, std::size_t fold_id) {
  if (num_classes == 0 || num_classes % kNumFolds != 0) {
    throw Error(ErrorCode::IndivisibleClassCount,
                std::to_string(num_classes) + " classes cannot form 4 equal folds");
  }
  if (fold_id >= kNumFolds) {
    throw Error(ErrorCode::InvalidConfig, "fold " + std::to_string(fold_id) + " not in 0..3");
  }
  const std::size_t block = num_classes / kNumFolds;
  FoldSplit split;
  split.fold_id = fold_id;
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (c >= fold_id * block && c < (fold_id + 1) * block) {
      split.novel_class_ids.push_back(c);
    } else {
      split.base_class_ids.push_back(c);
    }
  }
  return split;
}

std::array<FoldSplit, kNumFolds> make_fold_splits(std::size_t num_classes) {
  std::array<FoldSplit, kNumFolds> folds;
  for (std::size_t f = 0; f < kNumFolds; ++f) folds[f] = make_fold_split(num_classes, f);
  return folds;
}

Matrix make_cluster_centers(std::size_t num_classes, std::size_t dim, std::uint64_t seed) {
  if (num_classes == 0 || dim == 0) {
    throw Error(ErrorCode::InvalidConfig, "cluster centers need N >= 1 and D >= 1");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix centers(num_classes, dim);
  constexpr int kMaxAttempts = 10000;
  for (std::size_t c = 0; c < num_classes; ++c) {
    int attempts = 0;
    for (;;) {
      if (++attempts > kMaxAttempts) {
        throw Error(ErrorCode::InvalidConfig, "cannot place " + std::to_string(num_classes) +
                                                  " separable centers in " +
                                                  std::to_string(dim) + " dimensions");
      }
      auto row = centers.row(c);
      for (double& v : row) v = normal(rng);
      const double norm = l2_norm(row);
      if (norm < 1e-6) continue;
      for (double& v : row) v /= norm;
      bool separated = true;
      for (std::size_t o = 0; o < c && separated; ++o) {
        separated = cosine_similarity(row, centers.row(o)) < kMaxCenterCosine;
      }
      if (separated) break;
    }
  }
  return centers;
}

EpisodeSpec make_episode_spec(std::size_t num_classes, std::size_t dim, std::size_t shots,
                              std::size_t height, std::size_t width, double noise_sigma,
                              std::uint64_t seed) {
  EpisodeSpec spec;
  spec.num_classes = num_classes;
  spec.dim = dim;
  spec.shots = shots;
  spec.height = height;
  spec.width = width;
  spec.noise_sigma = noise_sigma;
  spec.seed = seed;
  spec.cluster_centers = make_cluster_centers(num_classes, dim, seed);
  return spec;
}

namespace {

// splitmix64 finalizer over (seed, fold) so each fold draws an independent stream.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t fold) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (fold + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct Tile {
  std::size_t y0, y1, x0, x1;
  std::size_t area() const { return (y1 - y0) * (x1 - x0); }
};

std::vector<std::size_t> random_cuts(std::size_t extent, std::mt19937_64& rng) {
  std::vector<std::size_t> cuts{0};
  const std::size_t max_parts = std::min<std::size_t>(3, extent);
  const std::size_t parts = std::uniform_int_distribution<std::size_t>(1, max_parts)(rng);
  std::vector<std::size_t> interior;
  for (std::size_t p = 1; p < extent; ++p) interior.push_back(p);
  std::shuffle(interior.begin(), interior.end(), rng);
  interior.resize(parts - 1);
  std::sort(interior.begin(), interior.end());
  cuts.insert(cuts.end(), interior.begin(), interior.end());
  cuts.push_back(extent);
  return cuts;
}

std::vector<Tile> random_tiling(std::size_t h, std::size_t w, std::mt19937_64& rng) {
  const auto ys = random_cuts(h, rng);
  const auto xs = random_cuts(w, rng);
  std::vector<Tile> tiles;
  for (std::size_t r = 0; r + 1 < ys.size(); ++r) {
    for (std::size_t c = 0; c + 1 < xs.size(); ++c) {
      tiles.push_back({ys[r], ys[r + 1], xs[c], xs[c + 1]});
    }
  }
  return tiles;
}

std::size_t pick(std::span<const std::size_t> pool, std::mt19937_64& rng) {
  return pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
}

class SampleFactory {
 public:
  SampleFactory(const EpisodeSpec& spec, const FoldSplit& split)
      : spec_(spec),
        slot_to_class_(split.slot_classes()),
        rng_(mix_seed(spec.seed, split.fold_id)) {}

  std::mt19937_64& rng() { return rng_; }

  // Assigns a slot to every tile; `forced` slots are placed on distinct tiles first.
  Sample make(std::span<const std::size_t> pool, std::span<const std::size_t> forced) {
    auto tiles = random_tiling(spec_.height, spec_.width, rng_);
    // Largest tiles first so forced classes survive the border-void frame.
    std::stable_sort(tiles.begin(), tiles.end(),
                     [](const Tile& a, const Tile& b) { return a.area() > b.area(); });
    std::vector<std::size_t> slots(tiles.size());
    for (std::size_t t = 0; t < tiles.size(); ++t) slots[t] = pick(pool, rng_);
    std::vector<std::size_t> order(tiles.size());
    for (std::size_t t = 0; t < order.size(); ++t) order[t] = t;
    std::shuffle(order.begin() + static_cast<std::ptrdiff_t>(std::min(forced.size(), order.size())),
                 order.end(), rng_);
    for (std::size_t k = 0; k < forced.size() && k < tiles.size(); ++k) slots[order[k]] = forced[k];

    MaskStack labels(spec_.height, spec_.width, kIgnoreLabel);
    for (std::size_t t = 0; t < tiles.size(); ++t) {
      for (std::size_t y = tiles[t].y0; y < tiles[t].y1; ++y) {
        for (std::size_t x = tiles[t].x0; x < tiles[t].x1; ++x) {
          labels.at(y, x) = static_cast<std::int32_t>(slots[t]);
        }
      }
    }
    if (spec_.border_void) apply_border_void(labels, forced);
    return {render(labels), std::move(labels)};
  }

 private:
  void apply_border_void(MaskStack& labels, std::span<const std::size_t> forced) {
    const std::size_t h = labels.height(), w = labels.width();
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        if (y == 0 || x == 0 || y + 1 == h || x + 1 == w) labels.at(y, x) = kIgnoreLabel;
      }
    }
    // A forced class squeezed out by the frame reclaims the central pixel.
    if (h >= 3 && w >= 3 && !forced.empty() && labels.count(forced.front()) == 0) {
      labels.at(h / 2, w / 2) = static_cast<std::int32_t>(forced.front());
    }
  }

  FeatureMap render(const MaskStack& labels) {
    std::normal_distribution<double> noise(0.0, 1.0);
    FeatureMap features(spec_.height, spec_.width, spec_.dim, 0.0);
    for (std::size_t i = 0; i < labels.pixels(); ++i) {
      auto f = features.pixel(i);
      const std::int32_t slot = labels.label(i);
      // Ignored pixels still carry a feature (a random center) so the map has no zero vectors.
      const std::size_t cls = slot == kIgnoreLabel
                                  ? pick(slot_to_class_, rng_)
                                  : slot_to_class_[static_cast<std::size_t>(slot)];
      const auto center = spec_.cluster_centers.row(cls);
      std::copy(center.begin(), center.end(), f.begin());
      if (spec_.noise_sigma > 0.0) {
        for (double& v : f) v += spec_.noise_sigma * noise(rng_);
        const double norm = l2_norm(f);
        for (double& v : f) v /= norm;
      }
    }
    return features;
  }

  const EpisodeSpec& spec_;
  std::vector<std::size_t> slot_to_class_;
  std::mt19937_64 rng_;
};

void validate_spec(const EpisodeSpec& spec, const FoldSplit& split) {
  if (spec.shots < 1) throw Error(ErrorCode::InvalidConfig, "shots must be >= 1");
  if (spec.height == 0 || spec.width == 0 || spec.dim == 0) {
    throw Error(ErrorCode::InvalidConfig, "episode grid and feature dim must be positive");
  }
  if (spec.noise_sigma < 0.0) throw Error(ErrorCode::InvalidConfig, "noise sigma < 0");
  if (split.num_classes() != spec.num_classes || split.base_class_ids.empty()) {
    throw Error(ErrorCode::InvalidPartition, "fold split does not cover the episode classes");
  }
  if (spec.cluster_centers.rows() != spec.num_classes ||
      spec.cluster_centers.cols() != spec.dim) {
    throw Error(ErrorCode::ShapeMismatch, "cluster centers do not match N x D");
  }
  for (std::size_t i = 0; i < spec.num_classes; ++i) {
    for (std::size_t j = i + 1; j < spec.num_classes; ++j) {
      if (cosine_similarity(spec.cluster_centers.row(i), spec.cluster_centers.row(j)) >=
          kMaxCenterCosine) {
        throw Error(ErrorCode::InvalidConfig, "cluster centers " + std::to_string(i) + " and " +
                                                  std::to_string(j) + " are not separable");
      }
    }
  }
}

void write_sample(detail::ByteWriter& w, const Sample& s) {
  require_matching_shape(s.features, s.labels);
  w.u32(static_cast<std::uint32_t>(s.features.height()));
  w.u32(static_cast<std::uint32_t>(s.features.width()));
  w.u32(static_cast<std::uint32_t>(s.features.dim()));
  for (double v : s.features.values()) w.f64(v);
  for (std::int32_t l : s.labels.labels()) w.i32(l);
}

Sample read_sample(detail::ByteReader& r, std::size_t& dim) {
  const std::size_t h = r.u32("sample height");
  const std::size_t w = r.u32("sample width");
  const std::size_t d = r.u32("sample dim");
  if (h == 0 || w == 0 || d == 0) {
    throw Error(ErrorCode::ShapeMismatch, "zero extent in sample header before byte offset " +
                                              std::to_string(r.offset()));
  }
  if (dim != 0 && d != dim) {
    throw Error(ErrorCode::ShapeMismatch, "feature dim " + std::to_string(d) +
                                              " differs from earlier samples (" +
                                              std::to_string(dim) + ")");
  }
  dim = d;
  // h * w fits in 64 bits; d is checked by division to avoid overflow.
  const std::size_t pixels = h * w;
  const std::size_t rem = r.remaining();
  if (pixels > rem / 4 || d > (rem - pixels * 4) / (pixels * 8)) {
    r.fail("unexpected end of file: sample of " + std::to_string(h) + "x" + std::to_string(w) +
           "x" + std::to_string(d) + " needs more than the " + std::to_string(rem) +
           " bytes that remain");
  }
  std::vector<double> values(h * w * d);
  for (double& v : values) v = r.f64("features");
  std::vector<std::int32_t> labels(h * w);
  for (std::int32_t& l : labels) {
    l = r.i32("labels");
    if (l < kIgnoreLabel) r.fail("negative label " + std::to_string(l));
  }
  return {FeatureMap(h, w, d, std::move(values)), MaskStack(h, w, std::move(labels))};
}

}  // namespace

Episode sample_episode(const EpisodeSpec& spec, const FoldSplit& split) {
  validate_spec(spec, split);
  const std::size_t b = split.base_class_ids.size();
  const std::size_t n = spec.num_classes;
  std::vector<std::size_t> base_slots, novel_slots, all_slots;
  for (std::size_t s = 0; s < n; ++s) {
    (s < b ? base_slots : novel_slots).push_back(s);
    all_slots.push_back(s);
  }

  SampleFactory factory(spec, split);
  Episode ep;
  for (std::size_t novel : novel_slots) {
    std::vector<std::size_t> pool = base_slots;
    pool.push_back(novel);
    const std::size_t forced[] = {novel};
    for (std::size_t k = 0; k < spec.shots; ++k) ep.support.push_back(factory.make(pool, forced));
  }
  // Forced novel classes cycle so every novel class is scored once
  // num_query >= |novel|.
  for (std::size_t q = 0; q < spec.num_query; ++q) {
    std::vector<std::size_t> forced;
    if (!novel_slots.empty()) forced.push_back(novel_slots[q % novel_slots.size()]);
    forced.push_back(pick(base_slots, factory.rng()));
    ep.query.push_back(factory.make(all_slots, forced));
  }
  return ep;
}

std::vector<std::uint8_t> encode_episode(const Episode& episode) {
  detail::ByteWriter w;
  w.magic("GFSE");
  w.u32(kEpisodeVersion);
  w.u32(static_cast<std::uint32_t>(episode.support.size()));
  w.u32(static_cast<std::uint32_t>(episode.query.size()));
  for (const Sample& s : episode.support) write_sample(w, s);
  for (const Sample& s : episode.query) write_sample(w, s);
  return w.take();
}

Episode decode_episode(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  r.expect_magic("GFSE");
  const std::uint32_t version = r.u32("version");
  if (version != kEpisodeVersion) r.fail("unsupported version " + std::to_string(version));
  const std::size_t num_support = r.u32("num_support");
  const std::size_t num_query = r.u32("num_query");
  Episode ep;
  std::size_t dim = 0;
  for (std::size_t i = 0; i < num_support; ++i) ep.support.push_back(read_sample(r, dim));
  for (std::size_t i = 0; i < num_query; ++i) ep.query.push_back(read_sample(r, dim));
  if (r.remaining() != 0) {
    throw Error(ErrorCode::ShapeMismatch,
                std::to_string(r.remaining()) + " bytes beyond the declared samples at offset " +
                    std::to_string(r.offset()));
  }
  return ep;
}

void save_episode(const std::filesystem::path& path, const Episode& episode) {
  detail::write_file(path, encode_episode(episode));
}

Episode load_feature_episode(const std::filesystem::path& path) {
  return decode_episode(detail::read_file(path));
}

}  // namespace gfs
