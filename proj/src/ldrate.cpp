#include "ratingdesign/ldrate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ratingdesign/golden.hpp"

namespace ratingdesign {

namespace {

struct Support {
  double lo = kInfinity;
  double hi = -kInfinity;
  double mass_lo = 0.0;
  double mass_hi = 0.0;
};

void check_shapes(std::span<const double> row, std::span<const double> scores) {
  if (row.size() != scores.size()) {
    throw RatingError(ErrorCode::DimensionMismatch, "row has " + std::to_string(row.size()) + " entries, scores " +
                                                        std::to_string(scores.size()));
  }
}

Support support_of(std::span<const double> row, std::span<const double> scores) {
  Support s;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (row[j] <= 0.0) continue;
    s.lo = std::min(s.lo, scores[j]);
    s.hi = std::max(s.hi, scores[j]);
  }
  if (!(s.lo <= s.hi)) throw RatingError(ErrorCode::InvalidArgument, "row has no positive-probability level");
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (row[j] <= 0.0) continue;
    if (scores[j] == s.lo) s.mass_lo += row[j];
    if (scores[j] == s.hi) s.mass_hi += row[j];
  }
  return s;
}

double boundary_tolerance(const Support& s) {
  return 1e-12 * std::max({1.0, std::abs(s.lo), std::abs(s.hi)});
}

// Exponential tilt of `row` by z, relative to the reference score that keeps
// every exponent nonpositive.
struct Tilt {
  double reference = 0.0;  // score whose exponent was factored out
  double log_total = 0.0;  // log sum_j rho_j exp(z (s_j - reference))
  double centered_mean = 0.0;      // E_z[s - a]
  double centered_variance = 0.0;  // Var_z[s]
};

Tilt tilt(double z, double a, std::span<const double> row, std::span<const double> scores, const Support& s) {
  Tilt t;
  t.reference = z >= 0.0 ? s.hi : s.lo;
  double total = 0.0;
  double first = 0.0;
  double second = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (row[j] <= 0.0) continue;
    const double w = row[j] * std::exp(z * (scores[j] - t.reference));
    const double d = scores[j] - a;
    total += w;
    first += w * d;
    second += w * d * d;
  }
  t.log_total = std::log(total);
  t.centered_mean = first / total;
  t.centered_variance = std::max(0.0, second / total - t.centered_mean * t.centered_mean);
  return t;
}

}  // namespace

double log_mgf(double z, std::span<const double> row, std::span<const double> scores) {
  check_shapes(row, scores);
  double shift = -kInfinity;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (row[j] > 0.0) shift = std::max(shift, z * scores[j]);
  }
  if (shift == -kInfinity) throw RatingError(ErrorCode::InvalidArgument, "row has no positive-probability level");
  double total = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (row[j] > 0.0) total += row[j] * std::exp(z * scores[j] - shift);
  }
  return shift + std::log(total);
}

double log_mgf_derivative(double z, std::span<const double> row, std::span<const double> scores) {
  check_shapes(row, scores);
  const Support s = support_of(row, scores);
  return tilt(z, 0.0, row, scores, s).centered_mean;
}

double mean_score(std::span<const double> row, std::span<const double> scores) {
  check_shapes(row, scores);
  double total = 0.0;
  double weighted = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    total += row[j];
    weighted += row[j] * scores[j];
  }
  return weighted / total;
}

RateFunctionValue rate_I(double a, std::span<const double> row, std::span<const double> scores) {
  check_shapes(row, scores);
  const Support s = support_of(row, scores);
  const double tol = boundary_tolerance(s);

  if (a < s.lo - tol || a > s.hi + tol) return {kInfinity, 0.0};
  if (s.hi - s.lo <= tol) return {0.0, 0.0};
  if (std::abs(a - s.lo) <= tol) return {-std::log(s.mass_lo), -kInfinity};
  if (std::abs(a - s.hi) <= tol) return {-std::log(s.mass_hi), kInfinity};

  // Lambda'(z) - a is strictly increasing; bracket its root by doubling away from 0.
  const double residual_target = 1e-13 * std::max(1.0, s.hi - s.lo);
  double z_lo = 0.0;
  double z_hi = 0.0;
  Tilt at_zero = tilt(0.0, a, row, scores, s);
  if (std::abs(at_zero.centered_mean) <= residual_target) return {0.0, 0.0};
  if (at_zero.centered_mean < 0.0) {
    z_hi = 1.0;
    while (tilt(z_hi, a, row, scores, s).centered_mean < 0.0 && z_hi < 1e300) {
      z_lo = z_hi;
      z_hi *= 2.0;
    }
  } else {
    z_lo = -1.0;
    while (tilt(z_lo, a, row, scores, s).centered_mean > 0.0 && z_lo > -1e300) {
      z_hi = z_lo;
      z_lo *= 2.0;
    }
  }

  // Newton with bisection fallback, keeping the root bracketed.
  double z = 0.5 * (z_lo + z_hi);
  Tilt t = tilt(z, a, row, scores, s);
  for (int it = 0; it < 200; ++it) {
    const double f = t.centered_mean;
    if (std::abs(f) <= residual_target) break;
    if (f < 0.0) {
      z_lo = z;
    } else {
      z_hi = z;
    }
    if (z_hi - z_lo <= 1e-15 * std::max(1.0, std::abs(z))) break;
    double next = t.centered_variance > 0.0 ? z - f / t.centered_variance : z;
    if (!(next > z_lo && next < z_hi)) next = 0.5 * (z_lo + z_hi);
    z = next;
    t = tilt(z, a, row, scores, s);
  }

  // z a - Lambda(z) = z (a - reference) - log_total, free of large cancellations.
  const double value = z * (a - t.reference) - t.log_total;
  return {std::max(0.0, value), z};
}

std::pair<double, double> pair_rate(std::span<const double> row_i, std::span<const double> row_j, double g_i,
                                    double g_j, std::span<const double> scores, PairRateOptions options) {
  check_shapes(row_i, scores);
  check_shapes(row_j, scores);
  if (!(g_i > 0.0) || !(g_j > 0.0)) throw RatingError(ErrorCode::MatchRateError, "match rates must be positive");

  const Support si = support_of(row_i, scores);
  const Support sj = support_of(row_j, scores);
  const double mu_i = mean_score(row_i, scores);
  const double mu_j = mean_score(row_j, scores);

  // The minimizer lies between the means, inside both finite domains.
  const double left = std::max({std::min(mu_i, mu_j), si.lo, sj.lo});
  const double right = std::min({std::max(mu_i, mu_j), si.hi, sj.hi});
  const double tol = std::max(boundary_tolerance(si), boundary_tolerance(sj));
  if (left > right + tol) return {kInfinity, std::numeric_limits<double>::quiet_NaN()};

  auto objective = [&](double a) {
    return g_i * rate_I(a, row_i, scores).value + g_j * rate_I(a, row_j, scores).value;
  };
  if (right - left <= tol) {
    const double a = 0.5 * (left + right);
    return {objective(a), a};
  }
  const double width = right - left;
  const auto best = golden_section_minimize(objective, left, right, options.a_tolerance * std::min(1.0, width));
  return {best.value, best.x};
}

RateReport learning_rate(const QualityGrid& grid, const JointDistribution& joint, std::span<const double> scores,
                         PairMode mode) {
  const std::size_t M = joint.types();
  if (grid.match_rates.size() != M) throw RatingError(ErrorCode::DimensionMismatch, "grid and joint type counts");
  if (M < 2) throw RatingError(ErrorCode::TooShort, "need at least two quality types");

  RateReport report;
  report.overall_rate = kInfinity;
  bool have_binding = false;
  for (std::size_t i = 0; i + 1 < M; ++i) {
    const std::size_t j_end = mode == PairMode::Adjacent ? i + 2 : M;
    for (std::size_t j = i + 1; j < j_end; ++j) {
      auto [rate, a_star] =
          pair_rate(joint.row(i), joint.row(j), grid.match_rates[i], grid.match_rates[j], scores);
      report.pair_rates.push_back({i, j, rate, a_star});
      if (!have_binding || rate < report.overall_rate) {
        report.overall_rate = rate;
        report.binding_pair = {i, j};
        have_binding = true;
      }
    }
  }
  report.phi_used.scores.assign(scores.begin(), scores.end());
  return report;
}

RateReport learning_rate(const Design& design, PairMode mode) {
  auto report = learning_rate(design.grid, design.joint, design.phi.scores, mode);
  report.phi_used = design.phi;
  return report;
}

}  // namespace ratingdesign
