#pragma once

// Large-deviations learning rate of a rating design.
//
// For a row rho over levels and scores phi, Lambda(z) = log sum_y rho(y) e^{z phi(y)}
// is the log moment generating function of one score and I(a) = sup_z {z a - Lambda(z)}
// its Legendre-Fenchel transform. Two types separate at rate
//   inf_a { g_i I(a|i) + g_j I(a|j) }
// and the design's rate is the minimum over type pairs. +inf is represented by
// std::numeric_limits<double>::infinity().

#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "ratingdesign/core.hpp"

namespace ratingdesign {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct RateFunctionValue {
  double value = 0.0;
  double argmax_z = 0.0;  // meaningful only when value is finite and a is interior

  bool finite() const noexcept { return value < kInfinity; }
};

struct PairRate {
  std::size_t i = 0;
  std::size_t j = 0;
  double rate = 0.0;
  double a_star = 0.0;
};

enum class PairMode { Adjacent, All };

struct RateReport {
  double overall_rate = 0.0;
  std::vector<PairRate> pair_rates;
  std::pair<std::size_t, std::size_t> binding_pair{0, 1};
  ScoreFunction phi_used;
};

// Lambda(z | row); numerically shifted log-sum-exp.
double log_mgf(double z, std::span<const double> row, std::span<const double> scores);

// Lambda'(z | row): mean of the scores under the exponentially tilted row.
double log_mgf_derivative(double z, std::span<const double> row, std::span<const double> scores);

double mean_score(std::span<const double> row, std::span<const double> scores);

RateFunctionValue rate_I(double a, std::span<const double> row, std::span<const double> scores);

struct PairRateOptions {
  double a_tolerance = 1e-8;
};

// Returns {rate, minimizer a*}; rate is +inf when the two rows' score hulls are disjoint.
std::pair<double, double> pair_rate(std::span<const double> row_i, std::span<const double> row_j, double g_i,
                                    double g_j, std::span<const double> scores, PairRateOptions options = {});

RateReport learning_rate(const Design& design, PairMode mode = PairMode::All);

// Same computation for arbitrary strictly increasing scores (not necessarily normalized).
RateReport learning_rate(const QualityGrid& grid, const JointDistribution& joint, std::span<const double> scores,
                         PairMode mode = PairMode::All);

}  // namespace ratingdesign
