#pragma once

// Brute-force verifiers for the learning-rate machinery. Nothing here shares
// code paths with ldrate's root finding or golden-section search.

#include <cstddef>
#include <span>
#include <vector>

#include "ratingdesign/core.hpp"
#include "ratingdesign/ldrate.hpp"

namespace ratingdesign::oracle {

inline constexpr std::size_t kMaxTypes = 3;
inline constexpr std::size_t kMaxLevels = 3;
inline constexpr std::size_t kMaxRatings = 60;

struct ExactPoint {
  std::size_t k = 0;
  double W = 0.0;
  double log_one_minus_W = 0.0;
  double slope = 0.0;  // -log(1 - W_k) / k
};

struct ExactCurve {
  std::vector<ExactPoint> points;
};

// W_k with every type holding exactly k ratings, by enumerating level-count
// compositions per type. Averages compare exactly for equally spaced scores and
// with tolerance 1e-12 * k * (score range) otherwise. Scores need only be strictly
// increasing. Throws InstanceTooLarge beyond M, L <= 3, k <= 60.
ExactPoint exact_W(const Design& design, std::size_t k);

ExactCurve exact_curve(const Design& design, std::size_t k_max);

struct SlopeCheck {
  ExactCurve curve;
  double rate = 0.0;  // learning rate with unit match rates (equal counts)
  double deviation = 0.0;        // |slope_{k_max} - rate|
  double deviation_at_10 = 0.0;  // |slope_10 - rate|, when k_max >= 10
  bool passed = false;
};

// Passes when slope_{k_max} is within 20% of the rate and strictly closer than
// slope_10 (for k_max > 10). A zero rate requires zero slopes; an infinite rate
// requires an infinite slope.
SlopeCheck slope_check(const Design& design, std::size_t k_max);

// max over z in [z_min, z_max] (uniform grid) of z a - Lambda(z).
RateFunctionValue rate_I_grid(double a, std::span<const double> row, std::span<const double> scores,
                              double z_min = -50.0, double z_max = 50.0, double z_step = 1e-3);

// log(sum exp(x)) over ascending-sorted terms with compensated summation.
double log_sum_exp(std::vector<double> terms);

}  // namespace ratingdesign::oracle
