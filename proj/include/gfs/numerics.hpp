#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace gfs {

using Vector = std::vector<double>;

inline constexpr double kNormFloor = 1e-12;

/// Row-major dense matrix. Library state is BasicMatrix<double>; the
/// finite-difference oracle instantiates the forward pass at long double.
template <typename T>
class BasicMatrix {
 public:
  BasicMatrix() = default;
  BasicMatrix(std::size_t rows, std::size_t cols, T fill = T(0))
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  template <typename U>
  static BasicMatrix cast(const BasicMatrix<U>& other) {
    BasicMatrix out(other.rows(), other.cols());
    for (std::size_t k = 0; k < out.data_.size(); ++k) out.data_[k] = static_cast<T>(other.data()[k]);
    return out;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  T operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<T>& data() noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  bool operator==(const BasicMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Matrix = BasicMatrix<double>;

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> a);

// Throws ZeroNormVector when either norm is below kNormFloor.
double cosine_similarity(std::span<const double> a, std::span<const double> b);
double squared_l2_distance(std::span<const double> a, std::span<const double> b);

// Max-subtracted exponentiate-and-normalize.
Vector softmax(std::span<const double> logits);
// log(sum(exp(x))) with max subtraction.
double log_sum_exp(std::span<const double> logits);

// y += scale * x
void axpy(double scale, std::span<const double> x, std::span<double> y);

bool all_finite(std::span<const double> values);

}  // namespace gfs
