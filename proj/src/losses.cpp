#include "gfs/losses.hpp"

#include <cmath>
#include <cstdio>

#include "forward.hpp"
#include "gfs/error.hpp"

namespace gfs {

namespace {

struct CrossEntropySum {
  double sum = 0.0;
  std::size_t count = 0;
};

CrossEntropySum cross_entropy_sum(const LogitGrid& logits, const MaskStack& labels) {
  if (logits.height != labels.height() || logits.width != labels.width()) {
    throw Error(ErrorCode::ShapeMismatch, "logit grid and label grid differ in shape");
  }
  CrossEntropySum acc;
  for (std::size_t i = 0; i < labels.pixels(); ++i) {
    const std::int32_t y = labels.label(i);
    if (y == kIgnoreLabel) continue;
    if (y < 0 || static_cast<std::size_t>(y) >= logits.classes) {
      throw Error(ErrorCode::ShapeMismatch, "label " + std::to_string(y) + " outside logits");
    }
    const auto z = logits.pixel(i);
    acc.sum += log_sum_exp(z) - z[static_cast<std::size_t>(y)];
    ++acc.count;
  }
  return acc;
}

}  // namespace

double within_class_distance(const PrototypeBank& bank) {
  return forward::within_distance(bank.current(), bank.previous(), bank.base_count());
}

double between_class_distance(const Matrix& prototypes) {
  return forward::between_distance(prototypes);
}

double between_class_distance(const PrototypeBank& bank) {
  return between_class_distance(bank.current());
}

double class_contrastive_loss(const PrototypeBank& bank) {
  return forward::contrastive(bank.current(), bank.previous(), bank.base_count());
}

LogitGrid classifier_logits(const FeatureMap& features, const Matrix& protos, double alpha) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::InvalidConfig, "alpha must be positive");
  if (features.dim() != protos.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "feature dim " + std::to_string(features.dim()) +
                                                  " vs prototype dim " +
                                                  std::to_string(protos.cols()));
  }
  const std::size_t n = protos.rows();
  const Vector inv_norm = forward::inverse_norms(protos);
  LogitGrid grid{features.height(), features.width(), n,
                 std::vector<double>(features.pixels() * n)};
  for (std::size_t i = 0; i < features.pixels(); ++i) {
    forward::pixel_logits(features.pixel(i), protos, inv_norm, alpha, i,
                          std::span<double>(grid.values).subspan(i * n, n));
  }
  return grid;
}

std::vector<std::int32_t> predict(const LogitGrid& logits) {
  std::vector<std::int32_t> out(logits.height * logits.width, 0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto z = logits.pixel(i);
    std::size_t best = 0;
    for (std::size_t c = 1; c < z.size(); ++c) {
      if (z[c] > z[best]) best = c;
    }
    out[i] = static_cast<std::int32_t>(best);
  }
  return out;
}

double cross_entropy_map(const LogitGrid& logits, const MaskStack& labels) {
  const CrossEntropySum acc = cross_entropy_sum(logits, labels);
  if (acc.count == 0) throw Error(ErrorCode::NoLabeledPixels, "every pixel is ignored");
  return acc.sum / static_cast<double>(acc.count);
}

double batch_cross_entropy(std::span<const Sample> samples, const Matrix& protos, double alpha) {
  return forward::batch_cross_entropy(samples, protos, alpha);
}

double segmentation_loss(std::span<const Sample> samples, const PrototypeBank& bank,
                         double alpha) {
  return batch_cross_entropy(samples, bank.current(), alpha);
}

double cross_class_similarity_loss(std::span<const Sample> samples, const PrototypeBank& bank,
                                   const EdgeWeightMatrix& weights, double alpha,
                                   Eq10Mode mode) {
  const Matrix norm = normalize_between(between_class_similarities(bank));
  return batch_cross_entropy(samples, message_passing(bank, norm, weights, mode), alpha);
}

double self_similarity_loss(std::span<const Sample> samples, const PrototypeBank& bank,
                            double alpha) {
  const Vector s_w = normalize_within(within_class_similarities(bank));
  return batch_cross_entropy(samples, self_similarity_prototypes(bank.current(), s_w), alpha);
}

LossReport total_loss(std::span<const Sample> samples, const PrototypeBank& bank,
                      const EdgeWeightMatrix& weights, const LossConfig& cfg) {
  LossReport r;
  r.alpha = cfg.alpha;
  r.lambda1 = cfg.lambda1;
  r.lambda2 = cfg.lambda2;
  r.d_W = within_class_distance(bank);
  r.d_B = between_class_distance(bank);
  r.L_C = class_contrastive_loss(bank);
  r.L_s = segmentation_loss(samples, bank, cfg.alpha);
  r.L_B = cross_class_similarity_loss(samples, bank, weights, cfg.alpha, cfg.eq10_mode);
  r.L_W = self_similarity_loss(samples, bank, cfg.alpha);
  r.L_R = r.L_B + r.L_W;
  r.total = r.L_s + cfg.lambda1 * r.L_C + cfg.lambda2 * r.L_R;
  return r;
}

std::string loss_csv_header() { return "step,L_s,L_C,L_B,L_W,L_R,total,d_W,d_B"; }

std::string loss_csv_row(std::uint64_t step, const LossReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%llu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                static_cast<unsigned long long>(step), r.L_s, r.L_C, r.L_B, r.L_W, r.L_R,
                r.total, r.d_W, r.d_B);
  return buf;
}

}  // namespace gfs
