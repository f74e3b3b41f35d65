#include "gfs/prototypes.hpp"

#include <cmath>
#include <random>
#include <string>

#include "gfs/error.hpp"

namespace gfs {

namespace {

void check_partition(std::size_t num_classes, std::size_t dim, std::size_t base_count) {
  if (num_classes == 0 || dim == 0 || base_count == 0 || base_count > num_classes) {
    throw Error(ErrorCode::InvalidPartition,
                "need 1 <= b <= N and D >= 1, got N=" + std::to_string(num_classes) +
                    " D=" + std::to_string(dim) + " b=" + std::to_string(base_count));
  }
}

std::vector<std::string> default_names(std::size_t n) {
  std::vector<std::string> names;
  names.reserve(n);
  for (std::size_t i = 0; i < n; ++i) names.push_back("class_" + std::to_string(i));
  return names;
}

void check_gamma(double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw Error(ErrorCode::GammaOutOfRange, "gamma " + std::to_string(gamma));
  }
}

void check_samples(std::span<const Sample> samples, std::size_t num_classes, std::size_t dim) {
  for (const Sample& s : samples) {
    require_matching_shape(s.features, s.labels);
    if (s.features.dim() != dim) {
      throw Error(ErrorCode::DimensionMismatch, "feature dim " +
                                                    std::to_string(s.features.dim()) +
                                                    " vs prototype dim " + std::to_string(dim));
    }
    s.labels.validate(num_classes);
  }
}

std::vector<std::size_t> update_classes(PrototypeBank& bank, std::span<const Sample> samples,
                                        std::size_t class_end, const GammaPolicy& gamma) {
  check_samples(samples, bank.num_classes(), bank.dim());
  // Pool everything against the pre-update bank so policies see a consistent state.
  std::vector<std::pair<std::size_t, Vector>> deltas;
  for (std::size_t c = 0; c < class_end; ++c) {
    Vector delta = pool_class(samples, c);
    if (!delta.empty()) deltas.emplace_back(c, std::move(delta));
  }
  std::vector<double> gammas;
  gammas.reserve(deltas.size());
  for (const auto& [c, delta] : deltas) {
    gammas.push_back(gamma(c, bank, delta));
    check_gamma(gammas.back());
  }

  std::vector<std::size_t> updated;
  for (std::size_t k = 0; k < deltas.size(); ++k) {
    ema_update(bank, deltas[k].first, deltas[k].second, gammas[k]);
    updated.push_back(deltas[k].first);
  }
  if (!updated.empty()) bank.advance_iteration();
  return updated;
}

}  // namespace

PrototypeBank::PrototypeBank(std::size_t num_classes, std::size_t dim, std::size_t base_count,
                             std::vector<std::string> class_names)
    : base_count_(base_count),
      class_names_(std::move(class_names)),
      current_(num_classes, dim),
      previous_(num_classes, dim) {
  check_partition(num_classes, dim, base_count);
  if (class_names_.empty()) class_names_ = default_names(num_classes);
  if (class_names_.size() != num_classes) {
    throw Error(ErrorCode::ShapeMismatch, "class name table length " +
                                              std::to_string(class_names_.size()) +
                                              " for N=" + std::to_string(num_classes));
  }
}

PrototypeBank PrototypeBank::from_state(std::size_t base_count, std::uint64_t iteration,
                                        std::vector<std::string> class_names, Matrix current,
                                        Matrix previous) {
  check_partition(current.rows(), current.cols(), base_count);
  if (previous.rows() != current.rows() || previous.cols() != current.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "previous snapshot shape differs from current");
  }
  if (class_names.size() != current.rows()) {
    throw Error(ErrorCode::ShapeMismatch, "class name table length mismatch");
  }
  PrototypeBank bank;
  bank.base_count_ = base_count;
  bank.iteration_ = iteration;
  bank.class_names_ = std::move(class_names);
  bank.current_ = std::move(current);
  bank.previous_ = std::move(previous);
  return bank;
}

void PrototypeBank::record_update(std::size_t class_id, std::span<const double> value) {
  if (value.size() != dim()) {
    throw Error(ErrorCode::DimensionMismatch, "update of dim " + std::to_string(value.size()) +
                                                  " for prototype dim " + std::to_string(dim()));
  }
  auto cur = current_.row(class_id);
  auto prev = previous_.row(class_id);
  std::copy(cur.begin(), cur.end(), prev.begin());
  std::copy(value.begin(), value.end(), cur.begin());
}

GammaPolicy constant_gamma(double gamma) {
  check_gamma(gamma);
  return [gamma](std::size_t, const PrototypeBank&, std::span<const double>) { return gamma; };
}

Vector masked_average_pool(const FeatureMap& features, const MaskStack& mask,
                           std::size_t class_id) {
  require_matching_shape(features, mask);
  Vector sum(features.dim(), 0.0);
  std::size_t count = 0;
  for (std::size_t i = 0; i < features.pixels(); ++i) {
    if (!mask.selects(i, class_id)) continue;
    axpy(1.0, features.pixel(i), sum);
    ++count;
  }
  if (count == 0) {
    throw Error(ErrorCode::EmptyMask, "class " + std::to_string(class_id) + " has no pixels");
  }
  for (double& v : sum) v /= static_cast<double>(count);
  return sum;
}

Vector pool_class(std::span<const Sample> samples, std::size_t class_id) {
  if (samples.empty()) return {};
  const std::size_t dim = samples.front().features.dim();
  Vector sum(dim, 0.0);
  std::size_t count = 0;
  for (const Sample& s : samples) {
    require_matching_shape(s.features, s.labels);
    for (std::size_t i = 0; i < s.features.pixels(); ++i) {
      if (!s.labels.selects(i, class_id)) continue;
      axpy(1.0, s.features.pixel(i), sum);
      ++count;
    }
  }
  if (count == 0) return {};
  for (double& v : sum) v /= static_cast<double>(count);
  return sum;
}

void ema_update(PrototypeBank& bank, std::size_t class_id, std::span<const double> delta,
                double gamma) {
  check_gamma(gamma);
  if (class_id >= bank.num_classes()) {
    throw Error(ErrorCode::DimensionMismatch, "class id " + std::to_string(class_id) +
                                                  " outside bank of " +
                                                  std::to_string(bank.num_classes()));
  }
  if (delta.size() != bank.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "delta dim " + std::to_string(delta.size()) +
                                                  " vs prototype dim " +
                                                  std::to_string(bank.dim()));
  }
  const auto old = bank.prototype(class_id);
  Vector blended(bank.dim());
  for (std::size_t k = 0; k < blended.size(); ++k) {
    blended[k] = gamma * old[k] + (1.0 - gamma) * delta[k];
  }
  bank.record_update(class_id, blended);
}

std::vector<std::size_t> update_from_support(PrototypeBank& bank,
                                             std::span<const Sample> support, double gamma) {
  return update_from_support(bank, support, constant_gamma(gamma));
}

std::vector<std::size_t> update_from_support(PrototypeBank& bank,
                                             std::span<const Sample> support,
                                             const GammaPolicy& gamma) {
  if (support.empty()) throw Error(ErrorCode::EmptySupportSet, "support set is empty");
  return update_classes(bank, support, bank.num_classes(), gamma);
}

std::vector<std::size_t> enrich_from_query(PrototypeBank& bank, std::span<const Sample> query,
                                           double gamma) {
  return enrich_from_query(bank, query, constant_gamma(gamma));
}

std::vector<std::size_t> enrich_from_query(PrototypeBank& bank, std::span<const Sample> query,
                                           const GammaPolicy& gamma) {
  if (query.empty()) throw Error(ErrorCode::EmptyQuerySet, "query set is empty");
  return update_classes(bank, query, bank.base_count(), gamma);
}

PrototypeBank init_bank(std::size_t num_classes, std::size_t dim, std::size_t base_count,
                        std::uint64_t seed) {
  PrototypeBank bank(num_classes, dim, base_count);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t c = 0; c < num_classes; ++c) {
    auto row = bank.prototype(c);
    double norm = 0.0;
    while (norm < 1e-6) {
      for (double& v : row) v = normal(rng);
      norm = l2_norm(row);
    }
    for (double& v : row) v /= norm;
  }
  bank.reset_history();
  return bank;
}

}  // namespace gfs
