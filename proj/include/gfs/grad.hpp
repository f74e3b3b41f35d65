#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

#include "gfs/feature_map.hpp"
#include "gfs/graph.hpp"
#include "gfs/losses.hpp"
#include "gfs/numerics.hpp"
#include "gfs/prototypes.hpp"

namespace gfs {

inline constexpr double kDefaultFiniteDifferenceStep = 1e-5;

struct TrainConfig {
  std::int64_t steps = 500;
  double learning_rate = 0.01;
  double alpha = kDefaultAlpha;
  double lambda1 = kDefaultLambda;
  double lambda2 = kDefaultLambda;
  double gamma = kDefaultGamma;
  std::uint64_t seed = 0;
  EdgeMode edge_mode = EdgeMode::Learnable;
  Eq10Mode eq10_mode = Eq10Mode::Neighbor;
  // When false, prototypes change only through EMA updates.
  bool train_prototypes = true;

  LossConfig loss_config() const { return {alpha, lambda1, lambda2, eq10_mode}; }
  void validate() const;
};

enum class LossTerm { Segmentation, Contrastive, CrossClass, SelfSimilarity, Total };

std::string_view to_string(LossTerm term);

struct GradientBundle {
  Matrix d_protos;   // N x D, d objective / d current prototypes
  Matrix d_weights;  // N x N, zero for frozen edges; diagonal always zero
  double loss_at_point = 0.0;
};

// Test hook for verifying that the gradient checker catches a broken backward pass.
enum class GradientFault { None, FlipContrastiveSign };

/// Chain-rule gradient of the selected objective. Previous prototypes are
/// constants. Edge gradients are zero when the edges are frozen or the config
/// selects fixed edges.
GradientBundle analytic_gradient(std::span<const Sample> samples, const PrototypeBank& bank,
                                 const EdgeWeightMatrix& weights, const TrainConfig& cfg,
                                 LossTerm term = LossTerm::Total,
                                 GradientFault fault = GradientFault::None);

/// Value of a single objective. Total matches total_loss().total.
double evaluate_objective(std::span<const Sample> samples, const PrototypeBank& bank,
                          const EdgeWeightMatrix& weights, const TrainConfig& cfg,
                          LossTerm term);

/// Central differences of the selected objective, one parameter at a time,
/// evaluated at quad precision from the same forward code.
GradientBundle finite_difference_gradient(std::span<const Sample> samples,
                                          const PrototypeBank& bank,
                                          const EdgeWeightMatrix& weights,
                                          const TrainConfig& cfg,
                                          double h = kDefaultFiniteDifferenceStep,
                                          LossTerm term = LossTerm::Total);

/// |a - b| / max(|a|, |b|, 1e-8), maximised over both parameter blocks.
struct GradientDiscrepancy {
  double max_relative_error = 0.0;
  bool in_weights = false;
  std::size_t row = 0;
  std::size_t col = 0;
};
GradientDiscrepancy compare_gradients(const GradientBundle& analytic,
                                      const GradientBundle& numeric);

/// One gradient-descent step on the total loss. Returns the report evaluated
/// before the step.
LossReport train_step(std::span<const Sample> samples, PrototypeBank& bank,
                      EdgeWeightMatrix& weights, const TrainConfig& cfg);

}  // namespace gfs
