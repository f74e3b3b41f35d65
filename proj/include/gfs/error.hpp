#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gfs {

enum class ErrorCode {
  ZeroNormVector,
  DimensionMismatch,
  EmptyInput,
  EmptyMask,
  GammaOutOfRange,
  EmptySupportSet,
  EmptyQuerySet,
  InvalidPartition,
  DegenerateDenominator,
  NoLabeledPixels,
  IndivisibleClassCount,
  MalformedFile,
  ShapeMismatch,
  NoScoredPixels,
  InvalidConfig,
  IoError,
};

std::string_view error_code_name(ErrorCode code);

// All library failures are reported through this one exception type; the code
// identifies the failure class and the message carries the context (class id,
// byte offset, offending key).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace gfs
