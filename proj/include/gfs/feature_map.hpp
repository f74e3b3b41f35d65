#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace gfs {

inline constexpr std::int32_t kIgnoreLabel = -1;

/// Dense H x W grid of D-dimensional feature vectors, stored row-major with the
/// feature index fastest.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(std::size_t height, std::size_t width, std::size_t dim, double fill = 0.0);
  FeatureMap(std::size_t height, std::size_t width, std::size_t dim, std::vector<double> values);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t pixels() const noexcept { return height_ * width_; }

  std::span<double> pixel(std::size_t index) { return {values_.data() + index * dim_, dim_}; }
  std::span<const double> pixel(std::size_t index) const {
    return {values_.data() + index * dim_, dim_};
  }
  std::span<double> at(std::size_t y, std::size_t x) { return pixel(y * width_ + x); }
  std::span<const double> at(std::size_t y, std::size_t x) const { return pixel(y * width_ + x); }

  const std::vector<double>& values() const noexcept { return values_; }

  bool operator==(const FeatureMap&) const = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

/// Ground-truth label grid. Per-class binary masks are derived from it; pixels
/// labeled kIgnoreLabel belong to no class.
class MaskStack {
 public:
  MaskStack() = default;
  MaskStack(std::size_t height, std::size_t width, std::int32_t fill = kIgnoreLabel);
  MaskStack(std::size_t height, std::size_t width, std::vector<std::int32_t> labels);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t pixels() const noexcept { return height_ * width_; }

  std::int32_t label(std::size_t index) const { return labels_[index]; }
  std::int32_t& label(std::size_t index) { return labels_[index]; }
  std::int32_t at(std::size_t y, std::size_t x) const { return labels_[y * width_ + x]; }
  std::int32_t& at(std::size_t y, std::size_t x) { return labels_[y * width_ + x]; }

  bool selects(std::size_t index, std::size_t class_id) const {
    return labels_[index] >= 0 && static_cast<std::size_t>(labels_[index]) == class_id;
  }
  std::vector<std::uint8_t> binary_mask(std::size_t class_id) const;
  std::size_t count(std::size_t class_id) const;

  const std::vector<std::int32_t>& labels() const noexcept { return labels_; }

  // Throws ShapeMismatch unless every label is kIgnoreLabel or below num_classes.
  void validate(std::size_t num_classes) const;

  bool operator==(const MaskStack&) const = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<std::int32_t> labels_;
};

struct Sample {
  FeatureMap features;
  MaskStack labels;

  bool operator==(const Sample&) const = default;
};

// Throws ShapeMismatch if the feature map and label grid disagree on H x W.
void require_matching_shape(const FeatureMap& features, const MaskStack& labels);

}  // namespace gfs
