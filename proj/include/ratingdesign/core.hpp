#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ratingdesign/errors.hpp"

namespace ratingdesign {

inline constexpr double kRowSumTolerance = 1e-9;

// Ordered answer levels, worst first.
struct RatingScale {
  std::vector<std::string> levels;

  std::size_t size() const noexcept { return levels.size(); }
};

// Platform scores per level, canonically stored on [0,1] with pinned endpoints.
// `display_max` only rescales scores for reporting.
struct ScoreFunction {
  std::vector<double> scores;
  double display_max = 1.0;

  std::size_t size() const noexcept { return scores.size(); }
  std::vector<double> displayed() const;
  ScoreFunction with_display_max(double top) const;

  static ScoreFunction equally_spaced(std::size_t levels, double display_max = 1.0);
};

// Affinely maps a strictly increasing vector onto [0,1].
// Throws RatingError{TooShort | NotStrictlyIncreasing}.
ScoreFunction normalize_scores(std::span<const double> raw);

bool is_strictly_increasing(std::span<const double> values) noexcept;

struct QualityGrid {
  std::vector<std::string> types;
  std::vector<double> match_rates;

  std::size_t size() const noexcept { return types.size(); }

  static QualityGrid uniform(std::vector<std::string> types);
};

// M x L matrix of rating probabilities per quality type, with optional counts
// backing an empirical estimate. Shape is checked on construction; probability
// constraints are checked by validate_design.
class JointDistribution {
 public:
  JointDistribution() = default;
  explicit JointDistribution(const std::vector<std::vector<double>>& rows);
  JointDistribution(const std::vector<std::vector<double>>& rows,
                    const std::vector<std::vector<std::uint64_t>>& counts);

  // Row-normalizes a count matrix. Throws EmptyBucket for an all-zero row.
  static JointDistribution from_counts(const std::vector<std::vector<std::uint64_t>>& counts);

  std::size_t types() const noexcept { return types_; }
  std::size_t levels() const noexcept { return levels_; }

  double operator()(std::size_t type, std::size_t level) const { return rho_[type * levels_ + level]; }
  std::span<const double> row(std::size_t type) const;
  std::vector<std::vector<double>> rows() const;

  bool has_counts() const noexcept { return !counts_.empty(); }
  std::uint64_t count(std::size_t type, std::size_t level) const { return counts_[type * levels_ + level]; }
  std::vector<std::vector<std::uint64_t>> count_rows() const;

  // True iff R(theta, y) = sum_{j >= y} rho(theta, j) is nondecreasing in theta
  // for every level y.
  bool monotone_r(double tolerance = 1e-12) const;

 private:
  std::size_t types_ = 0;
  std::size_t levels_ = 0;
  std::vector<double> rho_;
  std::vector<std::uint64_t> counts_;
};

struct Design {
  RatingScale scale;
  ScoreFunction phi;
  QualityGrid grid;
  JointDistribution joint;
};

struct Issue {
  ErrorCode code;
  std::string message;
};

struct ValidationResult {
  std::optional<Design> design;
  std::vector<Issue> errors;
  std::vector<Issue> warnings;

  bool ok() const noexcept { return design.has_value(); }
  std::string summary() const;
};

// Collects every invariant violation; NonMonotoneR is reported as a warning.
ValidationResult validate_design(const Design& design);

// Throws RatingError carrying the first error if the design is invalid.
const Design& require_valid(const Design& design);

}  // namespace ratingdesign
