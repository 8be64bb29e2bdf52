#include "ratingdesign/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ratingdesign::oracle {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Outcome {
  double key;  // sum of scores over the k ratings
  double log_prob;
};

// True when the scores are an affine image of 0, 1, ..., L-1.
bool equally_spaced(std::span<const double> scores) {
  const double last = static_cast<double>(scores.size() - 1);
  const double range = scores.back() - scores.front();
  for (std::size_t j = 0; j < scores.size(); ++j) {
    const double expected = scores.front() + range * static_cast<double>(j) / last;
    if (std::abs(scores[j] - expected) > 1e-15 * std::max(1.0, std::abs(expected))) return false;
  }
  return true;
}

// Every composition of k ratings over the row's levels with its multinomial log-probability.
void enumerate(std::span<const double> row, std::span<const double> key_weights, std::size_t k,
               std::vector<Outcome>& out) {
  const std::size_t L = row.size();
  std::vector<std::size_t> counts(L, 0);
  const double log_k_factorial = std::lgamma(static_cast<double>(k) + 1.0);

  auto recurse = [&](auto&& self, std::size_t level, std::size_t remaining) -> void {
    if (level + 1 == L) {
      counts[level] = remaining;
      double logp = log_k_factorial;
      double key = 0.0;
      for (std::size_t j = 0; j < L; ++j) {
        if (counts[j] == 0) continue;
        if (row[j] <= 0.0) return;
        logp += static_cast<double>(counts[j]) * std::log(row[j]) - std::lgamma(static_cast<double>(counts[j]) + 1.0);
        key += static_cast<double>(counts[j]) * key_weights[j];
      }
      out.push_back({key, logp});
      return;
    }
    for (std::size_t c = 0; c <= remaining; ++c) {
      counts[level] = c;
      self(self, level + 1, remaining - c);
    }
  };
  recurse(recurse, 0, k);
}

// Compensated sum of non-negative terms in ascending order.
double neumaier_sum(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  double comp = 0.0;
  for (double v : values) {
    const double t = sum + v;
    comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  return sum + comp;
}

}  // namespace

double log_sum_exp(std::vector<double> terms) {
  double m = kNegInf;
  for (double t : terms) m = std::max(m, t);
  if (m == kNegInf) return kNegInf;
  if (m == std::numeric_limits<double>::infinity()) return m;
  for (auto& t : terms) t = std::exp(t - m);
  return m + std::log(neumaier_sum(std::move(terms)));
}

ExactPoint exact_W(const Design& design, std::size_t k) {
  // Any strictly increasing scores are accepted; the comparison event does not
  // depend on affine rescaling, so only a normalized copy is validated.
  Design normalized = design;
  normalized.phi = normalize_scores(design.phi.scores);
  require_valid(normalized);
  const std::size_t M = design.grid.size();
  const std::size_t L = design.scale.size();
  if (M > kMaxTypes || L > kMaxLevels || k > kMaxRatings || k == 0) {
    throw RatingError(ErrorCode::InstanceTooLarge,
                      "exact enumeration supports M <= 3, L <= 3, 1 <= k <= 60 (got M=" + std::to_string(M) +
                          ", L=" + std::to_string(L) + ", k=" + std::to_string(k) + ")");
  }

  // Equally spaced scores compare through integer level sums, exactly.
  const bool exact_keys = equally_spaced(design.phi.scores);
  std::vector<double> key_weights(L);
  for (std::size_t j = 0; j < L; ++j) key_weights[j] = exact_keys ? static_cast<double>(j) : design.phi.scores[j];
  const double range = design.phi.scores.back() - design.phi.scores.front();
  const double tie_tolerance = exact_keys ? 0.0 : 1e-12 * static_cast<double>(k) * range;

  std::vector<std::vector<Outcome>> per_type(M);
  std::vector<double> all_keys;
  for (std::size_t t = 0; t < M; ++t) {
    enumerate(design.joint.row(t), key_weights, k, per_type[t]);
    for (const auto& o : per_type[t]) all_keys.push_back(o.key);
  }

  // Group keys into tie classes on a common ascending grid.
  std::sort(all_keys.begin(), all_keys.end());
  std::vector<double> class_start;
  for (double key : all_keys) {
    if (class_start.empty() || key - class_start.back() > tie_tolerance) class_start.push_back(key);
  }
  auto class_of = [&](double key) {
    auto it = std::upper_bound(class_start.begin(), class_start.end(), key);
    return static_cast<std::size_t>(it - class_start.begin()) - 1;
  };
  const std::size_t G = class_start.size();

  std::vector<std::vector<double>> log_p(M, std::vector<double>(G, kNegInf));
  for (std::size_t t = 0; t < M; ++t) {
    std::vector<std::vector<double>> buckets(G);
    for (const auto& o : per_type[t]) buckets[class_of(o.key)].push_back(o.log_prob);
    for (std::size_t g = 0; g < G; ++g) {
      if (!buckets[g].empty()) log_p[t][g] = log_sum_exp(std::move(buckets[g]));
    }
  }

  // Linear-space probabilities and strictly-below CDFs.
  std::vector<std::vector<double>> p(M, std::vector<double>(G));
  std::vector<std::vector<double>> below(M, std::vector<double>(G));
  std::vector<std::vector<double>> log_below(M, std::vector<double>(G));
  for (std::size_t t = 0; t < M; ++t) {
    double acc = 0.0;
    double log_acc = kNegInf;
    for (std::size_t g = 0; g < G; ++g) {
      p[t][g] = std::exp(log_p[t][g]);
      below[t][g] = acc;
      log_below[t][g] = log_acc;
      acc += p[t][g];
      if (log_p[t][g] > kNegInf) {
        const double hi = std::max(log_acc, log_p[t][g]);
        const double lo = std::min(log_acc, log_p[t][g]);
        log_acc = lo == kNegInf ? hi : hi + std::log1p(std::exp(lo - hi));
      }
    }
  }

  double p_sum = 0.0;
  std::vector<double> log_miss;  // log(1 - P_k) per pair
  for (std::size_t lo = 0; lo < M; ++lo) {
    for (std::size_t hi = lo + 1; hi < M; ++hi) {
      // P(x_hi > x_lo) - P(x_hi < x_lo); the two sums are the same computation
      // with roles swapped, so identical rows cancel exactly.
      std::vector<double> correct(G), wrong(G);
      for (std::size_t g = 0; g < G; ++g) {
        correct[g] = p[hi][g] * below[lo][g];
        wrong[g] = p[lo][g] * below[hi][g];
      }
      p_sum += neumaier_sum(correct) - neumaier_sum(wrong);

      // 1 - P_k = 2 P(x_hi < x_lo) + P(x_hi = x_lo), in log space.
      std::vector<double> terms;
      for (std::size_t g = 0; g < G; ++g) {
        if (log_p[lo][g] > kNegInf && log_below[hi][g] > kNegInf) {
          terms.push_back(std::log(2.0) + log_p[lo][g] + log_below[hi][g]);
        }
        if (log_p[lo][g] > kNegInf && log_p[hi][g] > kNegInf) terms.push_back(log_p[lo][g] + log_p[hi][g]);
      }
      log_miss.push_back(log_sum_exp(std::move(terms)));
    }
  }

  const double norm = 2.0 / static_cast<double>(M * (M - 1));
  ExactPoint point;
  point.k = k;
  point.W = norm * p_sum;
  // Linear form is exact when 1 - W is large; log form keeps precision when it is tiny.
  point.log_one_minus_W = point.W <= 0.5 ? std::log1p(-point.W) : std::log(norm) + log_sum_exp(log_miss);
  point.slope = -point.log_one_minus_W / static_cast<double>(k);
  if (point.slope == 0.0) point.slope = 0.0;  // drop negative zero
  return point;
}

ExactCurve exact_curve(const Design& design, std::size_t k_max) {
  ExactCurve curve;
  for (std::size_t k = 1; k <= k_max; ++k) curve.points.push_back(exact_W(design, k));
  return curve;
}

SlopeCheck slope_check(const Design& design, std::size_t k_max) {
  SlopeCheck check;
  check.curve = exact_curve(design, k_max);
  QualityGrid unit = design.grid;
  std::fill(unit.match_rates.begin(), unit.match_rates.end(), 1.0);
  check.rate = learning_rate(unit, design.joint, design.phi.scores, PairMode::All).overall_rate;

  const double last = check.curve.points.back().slope;
  if (std::isinf(check.rate)) {
    check.deviation = std::isinf(last) ? 0.0 : kInfinity;
    check.passed = std::isinf(last);
    return check;
  }
  check.deviation = std::abs(last - check.rate);
  if (k_max >= 10) check.deviation_at_10 = std::abs(check.curve.points[9].slope - check.rate);
  if (check.rate == 0.0 || check.rate < 1e-12) {
    check.passed = check.deviation < 1e-9;
    return check;
  }
  check.passed = check.deviation <= 0.2 * check.rate && (k_max <= 10 || check.deviation < check.deviation_at_10);
  return check;
}

RateFunctionValue rate_I_grid(double a, std::span<const double> row, std::span<const double> scores, double z_min,
                              double z_max, double z_step) {
  const auto steps = static_cast<std::size_t>(std::llround((z_max - z_min) / z_step));
  RateFunctionValue best{-kInfinity, z_min};
  for (std::size_t i = 0; i <= steps; ++i) {
    const double z = z_min + static_cast<double>(i) * z_step;
    double shift = -kInfinity;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (row[j] > 0.0) shift = std::max(shift, z * scores[j]);
    }
    double total = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (row[j] > 0.0) total += row[j] * std::exp(z * scores[j] - shift);
    }
    const double value = z * a - (shift + std::log(total));
    if (value > best.value) best = {value, z};
  }
  return best;
}

}  // namespace ratingdesign::oracle
