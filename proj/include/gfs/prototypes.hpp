#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gfs/feature_map.hpp"
#include "gfs/numerics.hpp"

namespace gfs {

inline constexpr double kDefaultGamma = 0.9;

/// Per-class prototypes with a one-step history.
///
/// Rows [0, base_count) are base classes and [base_count, num_classes) are
/// novel. `previous` row c is the value `current` row c held before the most
/// recent EMA update of class c; at construction previous == current.
/// Gradient steps write `current` directly through prototype() and do not
/// touch the history.
class PrototypeBank {
 public:
  PrototypeBank(std::size_t num_classes, std::size_t dim, std::size_t base_count,
                std::vector<std::string> class_names = {});

  // Rebuilds a bank from stored state (checkpoints, tests). Throws
  // InvalidPartition / ShapeMismatch on inconsistent input.
  static PrototypeBank from_state(std::size_t base_count, std::uint64_t iteration,
                                  std::vector<std::string> class_names, Matrix current,
                                  Matrix previous);

  std::size_t num_classes() const noexcept { return current_.rows(); }
  std::size_t dim() const noexcept { return current_.cols(); }
  std::size_t base_count() const noexcept { return base_count_; }
  std::size_t novel_count() const noexcept { return num_classes() - base_count_; }
  bool is_base(std::size_t class_id) const noexcept { return class_id < base_count_; }
  std::uint64_t iteration() const noexcept { return iteration_; }
  const std::vector<std::string>& class_names() const noexcept { return class_names_; }

  const Matrix& current() const noexcept { return current_; }
  const Matrix& previous() const noexcept { return previous_; }

  std::span<const double> prototype(std::size_t class_id) const { return current_.row(class_id); }
  std::span<double> prototype(std::size_t class_id) { return current_.row(class_id); }
  std::span<const double> previous_prototype(std::size_t class_id) const {
    return previous_.row(class_id);
  }

  // previous[c] := current[c]; current[c] := value.
  void record_update(std::size_t class_id, std::span<const double> value);
  // Replaces the whole history with the current values (t=0 convention).
  void reset_history() { previous_ = current_; }
  void advance_iteration() noexcept { ++iteration_; }

  bool operator==(const PrototypeBank&) const = default;

 private:
  PrototypeBank() = default;

  std::size_t base_count_ = 0;
  std::uint64_t iteration_ = 0;
  std::vector<std::string> class_names_;
  Matrix current_;
  Matrix previous_;
};

// Mixing coefficient for one class update: receives the class id, the bank
// before the update and the pooled update vector.
using GammaPolicy =
    std::function<double(std::size_t class_id, const PrototypeBank&, std::span<const double>)>;

GammaPolicy constant_gamma(double gamma);

/// Mean feature over the pixels labeled `class_id`. Throws EmptyMask if none.
Vector masked_average_pool(const FeatureMap& features, const MaskStack& mask,
                           std::size_t class_id);

/// Joint pooling over a sample set: summed masked features over all samples
/// divided by the summed mask counts. Returns an empty vector when the class
/// has no pixels in any sample.
Vector pool_class(std::span<const Sample> samples, std::size_t class_id);

/// current[c] := gamma * current[c] + (1 - gamma) * delta, recording history.
void ema_update(PrototypeBank& bank, std::size_t class_id, std::span<const double> delta,
                double gamma);

/// EMA-updates every class present in the support set; returns the updated
/// class ids in ascending order. Absent classes are left bit-identical.
std::vector<std::size_t> update_from_support(PrototypeBank& bank,
                                             std::span<const Sample> support, double gamma);
std::vector<std::size_t> update_from_support(PrototypeBank& bank,
                                             std::span<const Sample> support,
                                             const GammaPolicy& gamma);

/// Query-side enrichment: EMA-updates base classes present in the query set.
/// Novel classes are never touched. Returns the updated base class ids.
std::vector<std::size_t> enrich_from_query(PrototypeBank& bank, std::span<const Sample> query,
                                           double gamma);
std::vector<std::size_t> enrich_from_query(PrototypeBank& bank, std::span<const Sample> query,
                                           const GammaPolicy& gamma);

/// N unit-norm prototypes drawn from a seeded generator, previous == current.
PrototypeBank init_bank(std::size_t num_classes, std::size_t dim, std::size_t base_count,
                        std::uint64_t seed);

}  // namespace gfs
