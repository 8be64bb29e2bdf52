#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ratingdesign {

enum class ErrorCode {
  TooShort,
  NotStrictlyIncreasing,
  ScoreNotNormalized,
  LabelError,
  DimensionMismatch,
  NegativeProbability,
  RowSumError,
  MatchRateError,
  NonMonotoneR,
  MalformedHeader,
  MalformedRow,
  OutOfRangeLevel,
  UnknownCell,
  EmptyBucket,
  EmptyCell,
  NoRehires,
  BucketError,
  NoComparablePairs,
  InstanceTooLarge,
  InvalidArgument,
  ParseError,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Library-wide exception; `code()` identifies the failure class.
class RatingError : public std::runtime_error {
 public:
  RatingError(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ratingdesign
