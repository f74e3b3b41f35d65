#include "gfs/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "forward.hpp"
#include "gfs/error.hpp"

namespace gfs {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroNormVector: return "ZeroNormVector";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::GammaOutOfRange: return "GammaOutOfRange";
    case ErrorCode::EmptySupportSet: return "EmptySupportSet";
    case ErrorCode::EmptyQuerySet: return "EmptyQuerySet";
    case ErrorCode::InvalidPartition: return "InvalidPartition";
    case ErrorCode::DegenerateDenominator: return "DegenerateDenominator";
    case ErrorCode::NoLabeledPixels: return "NoLabeledPixels";
    case ErrorCode::IndivisibleClassCount: return "IndivisibleClassCount";
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NoScoredPixels: return "NoScoredPixels";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

double dot(std::span<const double> a, std::span<const double> b) {
  return forward::dot(a, b);
}

double l2_norm(std::span<const double> a) { return forward::norm(a); }

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  return forward::cosine(a, b);
}

double squared_l2_distance(std::span<const double> a, std::span<const double> b) {
  return forward::squared_distance(a, b);
}

Vector softmax(std::span<const double> logits) { return forward::softmax(logits); }

double log_sum_exp(std::span<const double> logits) { return forward::log_sum_exp(logits); }

void axpy(double scale, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::DimensionMismatch, "axpy operands differ in length");
  }
  for (std::size_t k = 0; k < x.size(); ++k) y[k] += scale * x[k];
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace gfs
