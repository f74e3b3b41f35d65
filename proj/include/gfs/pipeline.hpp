#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include "gfs/config.hpp"
#include "gfs/episodes.hpp"
#include "gfs/eval.hpp"
#include "gfs/grad.hpp"

namespace gfs {

/// Sub-seeds drawn in a fixed order from one generator seeded with the run seed.
struct SeedPlan {
  std::uint64_t centers = 0;
  std::uint64_t train_episode = 0;
  std::uint64_t test_episode = 0;
  std::uint64_t bank = 0;
};
SeedPlan plan_seeds(std::uint64_t seed);

EpisodeSpec episode_spec(const RunConfig& cfg);
FoldSplit fold_split(const RunConfig& cfg);
Episode make_train_episode(const RunConfig& cfg);
Episode make_test_episode(const RunConfig& cfg);
/// Random unit prototypes; class names are the dataset ids in slot order.
PrototypeBank make_initial_bank(const RunConfig& cfg);
/// Cluster centers in slot order: the generating oracle of the synthetic data.
PrototypeBank make_oracle_bank(const RunConfig& cfg);
EdgeWeightMatrix make_edges(const RunConfig& cfg);

struct TrainResult {
  PrototypeBank bank;
  EdgeWeightMatrix weights;
  std::vector<LossReport> history;
};

/// Per step: EMA update from the support set, optional query enrichment, then
/// one gradient step on the total loss over the query set.
TrainResult train_on_episode(const Episode& episode, PrototypeBank bank,
                             EdgeWeightMatrix weights, const TrainConfig& cfg, bool enrich);

struct EvalOptions {
  Head head = Head::Graph;
  Eq10Mode eq10_mode = Eq10Mode::Neighbor;
  double alpha = kDefaultAlpha;
  bool enrich = false;  // query enrichment from ground-truth query masks
  double gamma = kDefaultGamma;
};

std::vector<std::int32_t> classify(const FeatureMap& features, const PrototypeBank& bank,
                                   const EdgeWeightMatrix& weights, const EvalOptions& opts);
ConfusionMatrix evaluate(std::span<const Sample> query, const PrototypeBank& bank,
                         const EdgeWeightMatrix& weights, const EvalOptions& opts);

struct GradcheckInstance {
  std::vector<Sample> samples;
  PrototypeBank bank;
  EdgeWeightMatrix weights;
};
/// N in 2..5, D in 2..4, H = W in 2..6, random features, labels, history and
/// edge weights in [0.5, 1.5].
GradcheckInstance random_gradcheck_instance(std::mt19937_64& rng);

struct GradcheckTermResult {
  LossTerm term = LossTerm::Total;
  double max_relative_error = 0.0;
  std::size_t instance = 0;
  GradientDiscrepancy worst;
};
struct GradcheckSummary {
  std::vector<GradcheckTermResult> terms;
  bool passed = false;
};
GradcheckSummary run_gradcheck(const RunConfig& cfg);

// Commands. Each validates the config before touching the filesystem, throws
// gfs::Error on failure and returns the process exit code otherwise.
int cmd_synth(const RunConfig& cfg, std::ostream& log);
int cmd_train(const RunConfig& cfg, std::ostream& log);
int cmd_eval(const RunConfig& cfg, std::ostream& log);
int cmd_gradcheck(const RunConfig& cfg, std::ostream& log);

}  // namespace gfs
