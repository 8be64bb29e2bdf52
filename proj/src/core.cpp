#include "ratingdesign/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace ratingdesign {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::NotStrictlyIncreasing: return "NotStrictlyIncreasing";
    case ErrorCode::ScoreNotNormalized: return "ScoreNotNormalized";
    case ErrorCode::LabelError: return "LabelError";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NegativeProbability: return "NegativeProbability";
    case ErrorCode::RowSumError: return "RowSumError";
    case ErrorCode::MatchRateError: return "MatchRateError";
    case ErrorCode::NonMonotoneR: return "NonMonotoneR";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::OutOfRangeLevel: return "OutOfRangeLevel";
    case ErrorCode::UnknownCell: return "UnknownCell";
    case ErrorCode::EmptyBucket: return "EmptyBucket";
    case ErrorCode::EmptyCell: return "EmptyCell";
    case ErrorCode::NoRehires: return "NoRehires";
    case ErrorCode::BucketError: return "BucketError";
    case ErrorCode::NoComparablePairs: return "NoComparablePairs";
    case ErrorCode::InstanceTooLarge: return "InstanceTooLarge";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

RatingError::RatingError(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

// ---------------------------------------------------------------------------
// ScoreFunction

bool is_strictly_increasing(std::span<const double> values) noexcept {
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(values[i - 1] < values[i])) return false;
  }
  return true;
}

std::vector<double> ScoreFunction::displayed() const {
  std::vector<double> out(scores.size());
  std::transform(scores.begin(), scores.end(), out.begin(), [this](double s) { return s * display_max; });
  return out;
}

ScoreFunction ScoreFunction::with_display_max(double top) const {
  ScoreFunction out = *this;
  out.display_max = top;
  return out;
}

ScoreFunction ScoreFunction::equally_spaced(std::size_t levels, double display_max) {
  if (levels < 2) throw RatingError(ErrorCode::TooShort, "a scale needs at least two levels");
  ScoreFunction phi;
  phi.scores.resize(levels);
  const double last = static_cast<double>(levels - 1);
  for (std::size_t i = 0; i < levels; ++i) phi.scores[i] = static_cast<double>(i) / last;
  phi.scores.back() = 1.0;
  phi.display_max = display_max;
  return phi;
}

ScoreFunction normalize_scores(std::span<const double> raw) {
  if (raw.size() < 2) throw RatingError(ErrorCode::TooShort, "score vector needs at least two entries");
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!std::isfinite(raw[i])) {
      throw RatingError(ErrorCode::NotStrictlyIncreasing, "non-finite score at index " + std::to_string(i));
    }
    if (i > 0 && !(raw[i - 1] < raw[i])) {
      throw RatingError(ErrorCode::NotStrictlyIncreasing, "score at index " + std::to_string(i) +
                                                              " does not exceed its predecessor");
    }
  }
  const double lo = raw.front();
  const double range = raw.back() - lo;
  ScoreFunction phi;
  phi.scores.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) phi.scores[i] = (raw[i] - lo) / range;
  phi.scores.front() = 0.0;
  phi.scores.back() = 1.0;
  if (!is_strictly_increasing(phi.scores)) {
    throw RatingError(ErrorCode::NotStrictlyIncreasing, "scores collapse after normalization");
  }
  phi.display_max = raw.back() > 0.0 ? raw.back() : 1.0;
  return phi;
}

QualityGrid QualityGrid::uniform(std::vector<std::string> types) {
  QualityGrid grid;
  grid.match_rates.assign(types.size(), 1.0);
  grid.types = std::move(types);
  return grid;
}

// ---------------------------------------------------------------------------
// JointDistribution

JointDistribution::JointDistribution(const std::vector<std::vector<double>>& rows) {
  if (rows.empty() || rows.front().empty()) {
    throw RatingError(ErrorCode::DimensionMismatch, "joint distribution must be non-empty");
  }
  types_ = rows.size();
  levels_ = rows.front().size();
  rho_.reserve(types_ * levels_);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != levels_) {
      throw RatingError(ErrorCode::DimensionMismatch, "row " + std::to_string(i) + " has " +
                                                          std::to_string(rows[i].size()) + " entries, expected " +
                                                          std::to_string(levels_));
    }
    rho_.insert(rho_.end(), rows[i].begin(), rows[i].end());
  }
}

JointDistribution::JointDistribution(const std::vector<std::vector<double>>& rows,
                                     const std::vector<std::vector<std::uint64_t>>& counts)
    : JointDistribution(rows) {
  if (counts.empty()) return;
  if (counts.size() != types_) throw RatingError(ErrorCode::DimensionMismatch, "count matrix row count");
  counts_.reserve(types_ * levels_);
  for (const auto& r : counts) {
    if (r.size() != levels_) throw RatingError(ErrorCode::DimensionMismatch, "count matrix column count");
    counts_.insert(counts_.end(), r.begin(), r.end());
  }
}

JointDistribution JointDistribution::from_counts(const std::vector<std::vector<std::uint64_t>>& counts) {
  std::vector<std::vector<double>> rows;
  rows.reserve(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const std::uint64_t total = std::accumulate(counts[i].begin(), counts[i].end(), std::uint64_t{0});
    if (total == 0) throw RatingError(ErrorCode::EmptyBucket, "type " + std::to_string(i) + " has no observations");
    std::vector<double> row(counts[i].size());
    for (std::size_t j = 0; j < row.size(); ++j) {
      row[j] = static_cast<double>(counts[i][j]) / static_cast<double>(total);
    }
    rows.push_back(std::move(row));
  }
  return JointDistribution(rows, counts);
}

std::span<const double> JointDistribution::row(std::size_t type) const {
  return std::span<const double>(rho_).subspan(type * levels_, levels_);
}

std::vector<std::vector<double>> JointDistribution::rows() const {
  std::vector<std::vector<double>> out;
  out.reserve(types_);
  for (std::size_t i = 0; i < types_; ++i) {
    auto r = row(i);
    out.emplace_back(r.begin(), r.end());
  }
  return out;
}

std::vector<std::vector<std::uint64_t>> JointDistribution::count_rows() const {
  std::vector<std::vector<std::uint64_t>> out;
  if (counts_.empty()) return out;
  for (std::size_t i = 0; i < types_; ++i) {
    out.emplace_back(counts_.begin() + static_cast<std::ptrdiff_t>(i * levels_),
                     counts_.begin() + static_cast<std::ptrdiff_t>((i + 1) * levels_));
  }
  return out;
}

bool JointDistribution::monotone_r(double tolerance) const {
  std::vector<double> prev_tail;
  for (std::size_t i = 0; i < types_; ++i) {
    std::vector<double> tail(levels_);
    double acc = 0.0;
    for (std::size_t j = levels_; j-- > 0;) {
      acc += (*this)(i, j);
      tail[j] = acc;
    }
    if (!prev_tail.empty()) {
      for (std::size_t j = 0; j < levels_; ++j) {
        if (tail[j] < prev_tail[j] - tolerance) return false;
      }
    }
    prev_tail = std::move(tail);
  }
  return true;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

void check_labels(const std::vector<std::string>& labels, std::string_view what, std::vector<Issue>& errors) {
  std::set<std::string> seen;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i].empty()) {
      errors.push_back({ErrorCode::LabelError, std::string(what) + " label " + std::to_string(i) + " is empty"});
    } else if (!seen.insert(labels[i]).second) {
      errors.push_back({ErrorCode::LabelError, std::string(what) + " label '" + labels[i] + "' is duplicated"});
    }
  }
}

}  // namespace

std::string ValidationResult::summary() const {
  std::ostringstream out;
  for (const auto& e : errors) out << "error: " << e.message << " (" << to_string(e.code) << ")\n";
  for (const auto& w : warnings) out << "warning: " << w.message << " (" << to_string(w.code) << ")\n";
  return out.str();
}

ValidationResult validate_design(const Design& design) {
  ValidationResult result;
  auto& errors = result.errors;
  const std::size_t L = design.scale.size();
  const std::size_t M = design.grid.size();

  if (L < 2) errors.push_back({ErrorCode::TooShort, "rating scale has fewer than two levels"});
  check_labels(design.scale.levels, "level", errors);

  if (design.phi.size() != L) {
    errors.push_back({ErrorCode::DimensionMismatch, "score function has " + std::to_string(design.phi.size()) +
                                                        " entries for " + std::to_string(L) + " levels"});
  }
  if (!is_strictly_increasing(design.phi.scores)) {
    errors.push_back({ErrorCode::NotStrictlyIncreasing, "score function is not strictly increasing"});
  } else if (!design.phi.scores.empty() &&
             (design.phi.scores.front() != 0.0 || design.phi.scores.back() != 1.0)) {
    errors.push_back({ErrorCode::ScoreNotNormalized, "score function endpoints are not pinned to 0 and 1"});
  }
  if (!(design.phi.display_max > 0.0)) {
    errors.push_back({ErrorCode::InvalidArgument, "display_max must be positive"});
  }

  if (M < 2) errors.push_back({ErrorCode::TooShort, "quality grid has fewer than two types"});
  check_labels(design.grid.types, "type", errors);
  if (design.grid.match_rates.size() != M) {
    errors.push_back({ErrorCode::DimensionMismatch, "match rate count differs from type count"});
  } else {
    for (std::size_t i = 0; i < M; ++i) {
      const double g = design.grid.match_rates[i];
      if (!(g > 0.0) || !std::isfinite(g)) {
        errors.push_back({ErrorCode::MatchRateError, "match rate of type " + std::to_string(i) + " is not positive"});
      } else if (i > 0 && g < design.grid.match_rates[i - 1]) {
        errors.push_back({ErrorCode::MatchRateError, "match rate decreases at type " + std::to_string(i)});
      }
    }
  }

  const auto& joint = design.joint;
  if (joint.types() != M || joint.levels() != L) {
    errors.push_back({ErrorCode::DimensionMismatch, "joint distribution is " + std::to_string(joint.types()) + "x" +
                                                        std::to_string(joint.levels()) + ", expected " +
                                                        std::to_string(M) + "x" + std::to_string(L)});
  }
  for (std::size_t i = 0; i < joint.types(); ++i) {
    double sum = 0.0;
    bool negative = false;
    for (double p : joint.row(i)) {
      if (!(p >= 0.0) || !std::isfinite(p)) negative = true;
      sum += p;
    }
    if (negative) {
      errors.push_back({ErrorCode::NegativeProbability, "row " + std::to_string(i) + " has a negative entry"});
    } else if (std::abs(sum - 1.0) > kRowSumTolerance) {
      std::ostringstream msg;
      msg << "row " << i << " sums to " << sum;
      errors.push_back({ErrorCode::RowSumError, msg.str()});
    }
  }

  if (errors.empty()) {
    if (!joint.monotone_r()) {
      result.warnings.push_back({ErrorCode::NonMonotoneR,
                                 "complementary CDF is not nondecreasing in quality; all-pairs rate mode advised"});
    }
    result.design = design;
  }
  return result;
}

const Design& require_valid(const Design& design) {
  auto result = validate_design(design);
  if (!result.ok()) throw RatingError(result.errors.front().code, result.errors.front().message);
  return design;
}

}  // namespace ratingdesign
