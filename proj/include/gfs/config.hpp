#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gfs/grad.hpp"

namespace gfs {

enum class Head {
  Plain,  // cosine classifier on the current prototypes
  Graph,  // cosine classifier on message-passed prototypes
};

std::string_view to_string(Head head);
Head parse_head(std::string_view text);

/// Everything a command needs. Keys of the flat config file are the long flag
/// names without the leading dashes.
struct RunConfig {
  TrainConfig train;

  std::size_t classes = 8;
  std::size_t dim = 16;
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t shots = 5;
  std::size_t queries = 4;
  double sigma = 0.2;
  bool border_void = false;
  std::size_t fold = 0;

  bool enrich = false;
  Head head = Head::Graph;

  std::filesystem::path out = ".";
  std::filesystem::path checkpoint;
  std::filesystem::path episode;
  std::filesystem::path report;

  std::size_t instances = 20;
  double fd_step = kDefaultFiniteDifferenceStep;
  double tolerance = 1e-5;
  GradientFault fault = GradientFault::None;

  // Throws InvalidConfig (or GammaOutOfRange) for anything out of range.
  void validate() const;
};

/// Names accepted by apply_setting, in documentation order.
const std::vector<std::string>& config_keys();

/// Applies one key=value pair. InvalidConfig for unknown keys or unparsable values.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);

/// Flat "key = value" lines; '#' starts a comment; blank lines ignored.
void apply_config_text(RunConfig& cfg, std::string_view text);
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

}  // namespace gfs
