#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gfs/episodes.hpp"
#include "gfs/feature_map.hpp"

namespace gfs {

/// counts(truth, prediction) over scored (non-ignored) pixels.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t num_classes)
      : n_(num_classes), counts_(num_classes * num_classes, 0) {}

  std::size_t num_classes() const noexcept { return n_; }
  std::uint64_t operator()(std::size_t truth, std::size_t pred) const {
    return counts_[truth * n_ + pred];
  }
  std::uint64_t total() const;

  // Throws ShapeMismatch for mismatched grids or labels outside [0, N).
  void accumulate(std::span<const std::int32_t> prediction, const MaskStack& truth);
  // Elementwise sum; associative and commutative.
  void merge(const ConfusionMatrix& other);

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t n_;
  std::vector<std::uint64_t> counts_;
};

struct MIoUReport {
  std::size_t fold_id = 0;
  // nullopt marks a class absent from both truth and prediction.
  std::vector<std::optional<double>> per_class_iou;
  // NaN when the group has no present class.
  double novel_miou = 0.0;
  double base_miou = 0.0;
  double average_miou = 0.0;
};

/// IoU_c = TP / (TP + FP + FN). Group means run over present classes only; the
/// split's ids index the confusion matrix directly. NoScoredPixels if empty.
MIoUReport miou(const ConfusionMatrix& cm, const FoldSplit& split);

/// "fold,novel_miou,base_miou,average_miou,<per-class columns>", values as
/// percentages with two decimals, NA for absent classes. `column_names`
/// labels per-class columns in confusion-matrix order.
std::string miou_csv_header(std::span<const std::string> column_names);
std::string miou_csv_row(const MIoUReport& report);

}  // namespace gfs
