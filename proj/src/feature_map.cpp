#include "gfs/feature_map.hpp"

#include <string>

#include "gfs/error.hpp"

namespace gfs {

FeatureMap::FeatureMap(std::size_t height, std::size_t width, std::size_t dim, double fill)
    : height_(height), width_(width), dim_(dim), values_(height * width * dim, fill) {}

FeatureMap::FeatureMap(std::size_t height, std::size_t width, std::size_t dim,
                       std::vector<double> values)
    : height_(height), width_(width), dim_(dim), values_(std::move(values)) {
  if (values_.size() != height * width * dim) {
    throw Error(ErrorCode::ShapeMismatch,
                "feature payload of " + std::to_string(values_.size()) + " values for " +
                    std::to_string(height) + "x" + std::to_string(width) + "x" +
                    std::to_string(dim));
  }
}

MaskStack::MaskStack(std::size_t height, std::size_t width, std::int32_t fill)
    : height_(height), width_(width), labels_(height * width, fill) {}

MaskStack::MaskStack(std::size_t height, std::size_t width, std::vector<std::int32_t> labels)
    : height_(height), width_(width), labels_(std::move(labels)) {
  if (labels_.size() != height * width) {
    throw Error(ErrorCode::ShapeMismatch,
                "label payload of " + std::to_string(labels_.size()) + " values for " +
                    std::to_string(height) + "x" + std::to_string(width));
  }
}

std::vector<std::uint8_t> MaskStack::binary_mask(std::size_t class_id) const {
  std::vector<std::uint8_t> mask(labels_.size(), 0);
  for (std::size_t i = 0; i < labels_.size(); ++i) mask[i] = selects(i, class_id) ? 1 : 0;
  return mask;
}

std::size_t MaskStack::count(std::size_t class_id) const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < labels_.size(); ++i) n += selects(i, class_id) ? 1 : 0;
  return n;
}

void MaskStack::validate(std::size_t num_classes) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    const std::int32_t l = labels_[i];
    if (l == kIgnoreLabel) continue;
    if (l < 0 || static_cast<std::size_t>(l) >= num_classes) {
      throw Error(ErrorCode::ShapeMismatch, "label " + std::to_string(l) + " at pixel " +
                                                std::to_string(i) + " outside [0, " +
                                                std::to_string(num_classes) + ")");
    }
  }
}

void require_matching_shape(const FeatureMap& features, const MaskStack& labels) {
  if (features.height() != labels.height() || features.width() != labels.width()) {
    throw Error(ErrorCode::ShapeMismatch,
                "features " + std::to_string(features.height()) + "x" +
                    std::to_string(features.width()) + " vs labels " +
                    std::to_string(labels.height()) + "x" + std::to_string(labels.width()));
  }
}

}  // namespace gfs
