#pragma once

// Forward evaluation of every loss term, generic over the scalar type. The
// public double API wraps these kernels; the finite-difference oracle runs the
// same kernels at quad precision.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include <quadmath.h>

#include "gfs/error.hpp"
#include "gfs/feature_map.hpp"
#include "gfs/graph.hpp"
#include "gfs/losses.hpp"
#include "gfs/numerics.hpp"

namespace gfs::forward {

using Quad = __float128;

template <typename T>
T sqrt_(T x) {
  if constexpr (std::is_same_v<T, Quad>) return sqrtq(x);
  else return std::sqrt(x);
}

template <typename T>
T exp_(T x) {
  if constexpr (std::is_same_v<T, Quad>) return expq(x);
  else return std::exp(x);
}

template <typename T>
T log_(T x) {
  if constexpr (std::is_same_v<T, Quad>) return logq(x);
  else return std::log(x);
}

template <typename T>
T dot(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "vector dims " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  T s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

template <typename T>
T norm(std::span<const T> a) {
  T s = 0;
  for (T v : a) s += v * v;
  return sqrt_(s);
}

template <typename T>
T cosine(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "vector dims " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  const T na = norm(a);
  const T nb = norm(b);
  if (na < T(kNormFloor) || nb < T(kNormFloor)) {
    throw Error(ErrorCode::ZeroNormVector, "cosine similarity of a zero-norm vector");
  }
  return dot(a, b) / (na * nb);
}

template <typename T>
T squared_distance(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                "vector dims " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  T s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const T d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

template <typename T>
std::vector<T> softmax(std::span<const T> logits) {
  if (logits.empty()) throw Error(ErrorCode::EmptyInput, "softmax of an empty vector");
  const T m = *std::max_element(logits.begin(), logits.end());
  std::vector<T> out(logits.size());
  T z = 0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out[k] = exp_(logits[k] - m);
    z += out[k];
  }
  for (T& v : out) v /= z;
  return out;
}

template <typename T>
T log_sum_exp(std::span<const T> logits) {
  if (logits.empty()) throw Error(ErrorCode::EmptyInput, "log-sum-exp of an empty vector");
  const T m = *std::max_element(logits.begin(), logits.end());
  T z = 0;
  for (T v : logits) z += exp_(v - m);
  return m + log_(z);
}

template <typename T>
void require_nonzero_rows(const BasicMatrix<T>& p, const char* what) {
  for (std::size_t i = 0; i < p.rows(); ++i) {
    if (norm(p.row(i)) < T(kNormFloor)) {
      throw Error(ErrorCode::ZeroNormVector, std::string(what) + " of class " + std::to_string(i));
    }
  }
}

template <typename T>
BasicMatrix<T> between_similarities(const BasicMatrix<T>& p) {
  require_nonzero_rows(p, "prototype");
  const std::size_t n = p.rows();
  BasicMatrix<T> sim(n, n, T(0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const T c = cosine(p.row(i), p.row(j));
      sim(i, j) = c;
      sim(j, i) = c;
    }
  }
  return sim;
}

template <typename T>
BasicMatrix<T> normalize_between(const BasicMatrix<T>& sim) {
  const std::size_t n = sim.rows();
  if (n < 2) throw Error(ErrorCode::EmptyInput, "between-class graph needs N >= 2");
  BasicMatrix<T> out(n, n, T(0));
  std::vector<T> row(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0, k = 0; j < n; ++j) {
      if (j != i) row[k++] = sim(i, j);
    }
    const std::vector<T> s = softmax(std::span<const T>(row));
    for (std::size_t j = 0, k = 0; j < n; ++j) {
      if (j != i) out(i, j) = s[k++];
    }
  }
  return out;
}

template <typename T>
BasicMatrix<T> message_passing(const BasicMatrix<T>& p, const BasicMatrix<T>& norm_sim,
                               const BasicMatrix<T>& w, Eq10Mode mode) {
  const std::size_t n = p.rows();
  if (norm_sim.rows() != n || norm_sim.cols() != n || w.rows() != n || w.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch,
                "graph of " + std::to_string(norm_sim.rows()) + " nodes, weights " +
                    std::to_string(w.rows()) + ", prototypes " + std::to_string(n));
  }
  BasicMatrix<T> out(n, p.cols(), T(0));
  for (std::size_t i = 0; i < n; ++i) {
    auto dst = out.row(i);
    if (mode == Eq10Mode::Neighbor) {
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const T c = norm_sim(i, j) * w(i, j);
        const auto src = p.row(j);
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += c * src[k];
      }
    } else {
      T c = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) c += norm_sim(i, j) * w(i, j);
      }
      const auto src = p.row(i);
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += c * src[k];
    }
  }
  return out;
}

template <typename T>
std::vector<T> within_similarities(const BasicMatrix<T>& previous, const BasicMatrix<T>& current) {
  std::vector<T> sim(current.rows());
  for (std::size_t i = 0; i < sim.size(); ++i) {
    if (norm(current.row(i)) < T(kNormFloor) || norm(previous.row(i)) < T(kNormFloor)) {
      throw Error(ErrorCode::ZeroNormVector, "prototype history of class " + std::to_string(i));
    }
    sim[i] = cosine(previous.row(i), current.row(i));
  }
  return sim;
}

template <typename T>
BasicMatrix<T> self_similarity_prototypes(const BasicMatrix<T>& p, std::span<const T> scores) {
  if (scores.size() != p.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "self-similarity scores do not match class count");
  }
  const T n = static_cast<T>(p.rows());
  BasicMatrix<T> out(p.rows(), p.cols(), T(0));
  for (std::size_t i = 0; i < p.rows(); ++i) {
    const T c = n * scores[i];
    const auto src = p.row(i);
    auto dst = out.row(i);
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += c * src[k];
  }
  return out;
}

template <typename T>
T within_distance(const BasicMatrix<T>& current, const BasicMatrix<T>& previous,
                  std::size_t base_count) {
  T d = 0;
  for (std::size_t i = 0; i < base_count; ++i) d += squared_distance(current.row(i), previous.row(i));
  return d;
}

template <typename T>
T between_distance(const BasicMatrix<T>& p) {
  T d = 0;
  for (std::size_t i = 0; i < p.rows(); ++i) {
    for (std::size_t j = 0; j < p.rows(); ++j) {
      if (j != i) d += squared_distance(p.row(i), p.row(j));
    }
  }
  return d;
}

template <typename T>
T contrastive(const BasicMatrix<T>& current, const BasicMatrix<T>& previous,
              std::size_t base_count) {
  const T d_b = between_distance(current);
  if (d_b < T(kDenominatorFloor)) {
    throw Error(ErrorCode::DegenerateDenominator, "between-class distance " +
                                                      std::to_string(static_cast<double>(d_b)) +
                                                      " (collapsed prototypes)");
  }
  return within_distance(current, previous, base_count) / d_b;
}

/// Inverse prototype norms for the cosine classifier.
template <typename T>
std::vector<T> inverse_norms(const BasicMatrix<T>& protos) {
  std::vector<T> inv(protos.rows());
  for (std::size_t c = 0; c < protos.rows(); ++c) {
    const T n = norm(protos.row(c));
    if (n < T(kNormFloor)) {
      throw Error(ErrorCode::ZeroNormVector, "classifier prototype " + std::to_string(c));
    }
    inv[c] = T(1) / n;
  }
  return inv;
}

/// out[c] = alpha * cos(f, protos[c]).
template <typename T>
void pixel_logits(std::span<const double> f, const BasicMatrix<T>& protos,
                  const std::vector<T>& inv_norm, T alpha, std::size_t pixel, std::span<T> out) {
  T fs = 0;
  for (double v : f) fs += T(v) * T(v);
  const T fn = sqrt_(fs);
  if (fn < T(kNormFloor)) {
    throw Error(ErrorCode::ZeroNormVector, "feature at pixel " + std::to_string(pixel));
  }
  for (std::size_t c = 0; c < protos.rows(); ++c) {
    const auto q = protos.row(c);
    T d = 0;
    for (std::size_t k = 0; k < f.size(); ++k) d += T(f[k]) * q[k];
    out[c] = alpha * (d * inv_norm[c] / fn);
  }
}

template <typename T>
struct CrossEntropySum {
  T sum = 0;
  std::size_t count = 0;
};

template <typename T>
T batch_cross_entropy(std::span<const Sample> samples, const BasicMatrix<T>& protos, T alpha) {
  if (!(alpha > T(0))) throw Error(ErrorCode::InvalidConfig, "alpha must be positive");
  const std::vector<T> inv = inverse_norms(protos);
  const std::size_t n = protos.rows();
  std::vector<T> z(n);
  CrossEntropySum<T> acc;
  for (const Sample& s : samples) {
    require_matching_shape(s.features, s.labels);
    if (s.features.dim() != protos.cols()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "feature dim " + std::to_string(s.features.dim()) + " vs prototype dim " +
                      std::to_string(protos.cols()));
    }
    for (std::size_t i = 0; i < s.labels.pixels(); ++i) {
      const std::int32_t y = s.labels.label(i);
      if (y == kIgnoreLabel) continue;
      if (y < 0 || static_cast<std::size_t>(y) >= n) {
        throw Error(ErrorCode::ShapeMismatch, "label " + std::to_string(y) + " outside logits");
      }
      pixel_logits(s.features.pixel(i), protos, inv, alpha, i, std::span<T>(z));
      acc.sum += log_sum_exp(std::span<const T>(z)) - z[static_cast<std::size_t>(y)];
      ++acc.count;
    }
  }
  if (acc.count == 0) throw Error(ErrorCode::NoLabeledPixels, "batch has no labeled pixels");
  return acc.sum / static_cast<T>(acc.count);
}

/// Prototype state the loss terms read.
template <typename T>
struct State {
  const BasicMatrix<T>& current;
  const BasicMatrix<T>& previous;
  std::size_t base_count;
  const BasicMatrix<T>& weights;
};

template <typename T>
T segmentation(std::span<const Sample> samples, const State<T>& st, T alpha) {
  return batch_cross_entropy(samples, st.current, alpha);
}

template <typename T>
T cross_class(std::span<const Sample> samples, const State<T>& st, T alpha, Eq10Mode mode) {
  const BasicMatrix<T> norm_sim = normalize_between(between_similarities(st.current));
  return batch_cross_entropy(samples, message_passing(st.current, norm_sim, st.weights, mode),
                             alpha);
}

template <typename T>
T self_similarity(std::span<const Sample> samples, const State<T>& st, T alpha) {
  const std::vector<T> scores = softmax(std::span<const T>(within_similarities(st.previous, st.current)));
  return batch_cross_entropy(samples,
                             self_similarity_prototypes(st.current, std::span<const T>(scores)),
                             alpha);
}

}  // namespace gfs::forward
