#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gfs/feature_map.hpp"
#include "gfs/graph.hpp"
#include "gfs/numerics.hpp"
#include "gfs/prototypes.hpp"

namespace gfs {

inline constexpr double kDefaultAlpha = 10.0;
inline constexpr double kDefaultLambda = 1.0;
inline constexpr double kDenominatorFloor = 1e-12;

struct LossConfig {
  double alpha = kDefaultAlpha;
  double lambda1 = kDefaultLambda;  // weight of the class contrastive loss
  double lambda2 = kDefaultLambda;  // weight of the class relationship loss
  Eq10Mode eq10_mode = Eq10Mode::Neighbor;
};

struct LossReport {
  double L_s = 0.0;
  double L_C = 0.0;
  double L_B = 0.0;
  double L_W = 0.0;
  double L_R = 0.0;
  double total = 0.0;
  double d_W = 0.0;
  double d_B = 0.0;
  double lambda1 = kDefaultLambda;
  double lambda2 = kDefaultLambda;
  double alpha = kDefaultAlpha;
};

/// H x W x N grid of classifier scores, class index fastest.
struct LogitGrid {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t classes = 0;
  std::vector<double> values;

  std::span<const double> pixel(std::size_t index) const {
    return {values.data() + index * classes, classes};
  }
};

// Sum over base classes of ||current - previous||^2.
double within_class_distance(const PrototypeBank& bank);
// Sum over ordered pairs i != j of ||current_i - current_j||^2.
double between_class_distance(const Matrix& prototypes);
double between_class_distance(const PrototypeBank& bank);
// d^W / d^B; DegenerateDenominator when d^B < 1e-12.
double class_contrastive_loss(const PrototypeBank& bank);

/// logit(pixel, i) = alpha * cos(F(pixel), protos[i]).
LogitGrid classifier_logits(const FeatureMap& features, const Matrix& protos, double alpha);
/// Per-pixel argmax class (lowest index on ties).
std::vector<std::int32_t> predict(const LogitGrid& logits);

/// Mean softmax cross entropy over non-ignored pixels. NoLabeledPixels if none.
double cross_entropy_map(const LogitGrid& logits, const MaskStack& labels);

/// Cross entropy pooled over every labeled pixel of a batch (one mean, not a
/// mean of per-sample means).
double batch_cross_entropy(std::span<const Sample> samples, const Matrix& protos, double alpha);

double segmentation_loss(std::span<const Sample> samples, const PrototypeBank& bank,
                         double alpha);
double cross_class_similarity_loss(std::span<const Sample> samples, const PrototypeBank& bank,
                                   const EdgeWeightMatrix& weights, double alpha,
                                   Eq10Mode mode = Eq10Mode::Neighbor);
double self_similarity_loss(std::span<const Sample> samples, const PrototypeBank& bank,
                            double alpha);

LossReport total_loss(std::span<const Sample> samples, const PrototypeBank& bank,
                      const EdgeWeightMatrix& weights, const LossConfig& cfg);

std::string loss_csv_header();
std::string loss_csv_row(std::uint64_t step, const LossReport& report);

}  // namespace gfs
