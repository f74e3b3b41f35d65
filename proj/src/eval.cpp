#include "gfs/eval.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "gfs/error.hpp"

namespace gfs {

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

void ConfusionMatrix::accumulate(std::span<const std::int32_t> prediction,
                                 const MaskStack& truth) {
  if (prediction.size() != truth.pixels()) {
    throw Error(ErrorCode::ShapeMismatch, "prediction has " + std::to_string(prediction.size()) +
                                              " pixels, truth " + std::to_string(truth.pixels()));
  }
  truth.validate(n_);
  for (std::int32_t p : prediction) {
    if (p < 0 || static_cast<std::size_t>(p) >= n_) {
      throw Error(ErrorCode::ShapeMismatch, "predicted class " + std::to_string(p));
    }
  }
  for (std::size_t i = 0; i < prediction.size(); ++i) {
    const std::int32_t t = truth.label(i);
    if (t == kIgnoreLabel) continue;
    ++counts_[static_cast<std::size_t>(t) * n_ + static_cast<std::size_t>(prediction[i])];
  }
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.n_ != n_) throw Error(ErrorCode::ShapeMismatch, "confusion matrix sizes differ");
  for (std::size_t k = 0; k < counts_.size(); ++k) counts_[k] += other.counts_[k];
}

namespace {

double group_mean(const std::vector<std::optional<double>>& iou,
                  std::span<const std::size_t> ids) {
  double sum = 0.0;
  std::size_t present = 0;
  for (std::size_t c : ids) {
    if (c < iou.size() && iou[c]) {
      sum += *iou[c];
      ++present;
    }
  }
  return present == 0 ? std::nan("") : sum / static_cast<double>(present);
}

}  // namespace

MIoUReport miou(const ConfusionMatrix& cm, const FoldSplit& split) {
  if (cm.total() == 0) throw Error(ErrorCode::NoScoredPixels, "confusion matrix is empty");
  const std::size_t n = cm.num_classes();
  for (std::size_t c : split.slot_classes()) {
    if (c >= n) throw Error(ErrorCode::ShapeMismatch, "split class " + std::to_string(c));
  }
  MIoUReport r;
  r.fold_id = split.fold_id;
  r.per_class_iou.resize(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::uint64_t row = 0, col = 0;
    for (std::size_t k = 0; k < n; ++k) {
      row += cm(c, k);
      col += cm(k, c);
    }
    const std::uint64_t tp = cm(c, c);
    const std::uint64_t uni = row + col - tp;  // TP + FN + FP
    if (uni > 0) r.per_class_iou[c] = static_cast<double>(tp) / static_cast<double>(uni);
  }
  r.novel_miou = group_mean(r.per_class_iou, split.novel_class_ids);
  r.base_miou = group_mean(r.per_class_iou, split.base_class_ids);
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  r.average_miou = group_mean(r.per_class_iou, all);
  return r;
}

namespace {

std::string percent(double v) {
  if (std::isnan(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

}  // namespace

std::string miou_csv_header(std::span<const std::string> column_names) {
  std::string h = "fold,novel_miou,base_miou,average_miou";
  for (const auto& name : column_names) h += ",iou_" + name;
  return h;
}

std::string miou_csv_row(const MIoUReport& r) {
  std::string row = std::to_string(r.fold_id) + "," + percent(r.novel_miou) + "," +
                    percent(r.base_miou) + "," + percent(r.average_miou);
  for (const auto& iou : r.per_class_iou) row += "," + (iou ? percent(*iou) : std::string("NA"));
  return row;
}

}  // namespace gfs
