#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ratingdesign/core.hpp"
#include "ratingdesign/random.hpp"

namespace ratingdesign {

// Fraction of quality-comparable pairs (distinct true types) ordered wrongly by
// aggregate, ties in aggregate counting one half. O(n log n).
// Throws NoComparablePairs when every seller shares one type.
double kendall_error(std::span<const std::size_t> true_types, std::span<const double> aggregates);

enum class MatchWeighting { Uniform, ProportionalToG };

struct MarketConfig {
  std::size_t n_sellers = 500;
  std::size_t n_buyers = 100;
  std::size_t horizon = 100;
  std::size_t runs = 100;
  double exit_prob = 0.0;
  MatchWeighting match_weighting = MatchWeighting::Uniform;
  std::uint64_t seed = 1;
  std::size_t bootstrap_replicates = 1000;  // 0 disables the band
  double confidence = 0.95;

  // Throws InvalidArgument on n_buyers > n_sellers, zero horizon/runs, or exit_prob outside [0,1].
  void validate() const;
};

struct SellerState {
  std::size_t true_type = 0;
  std::uint64_t rating_count = 0;
  double score_sum = 0.0;
  double aggregate = 0.0;  // score_sum / rating_count, quantized to 1e-12; 0 when unrated
};

// One replication of the market, advanced one period at a time.
class Market {
 public:
  Market(const MarketConfig& config, const Design& design, Rng rng);

  // Matches n_buyers distinct sellers, folds one rating into each, then applies exits.
  void step();

  std::size_t period() const noexcept { return period_; }
  const std::vector<SellerState>& sellers() const noexcept { return sellers_; }
  std::size_t ratings_last_period() const noexcept { return ratings_last_period_; }
  std::size_t exits_last_period() const noexcept { return exits_last_period_; }

  // Kendall error of the current aggregates; NaN if all sellers share a type.
  double error() const;

 private:
  SellerState fresh_seller();
  void select_buyers();

  MarketConfig config_;
  Design design_;
  Rng rng_;
  std::vector<std::discrete_distribution<std::size_t>> rating_draw_;
  std::vector<SellerState> sellers_;
  std::vector<std::size_t> permutation_;
  std::vector<std::size_t> selected_;
  std::size_t period_ = 0;
  std::size_t ratings_last_period_ = 0;
  std::size_t exits_last_period_ = 0;
};

struct CurvePoint {
  std::size_t k = 0;
  double mean_error = 0.0;
  double std_error = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

struct ErrorCurve {
  std::vector<CurvePoint> points;  // k = 0 .. horizon
};

// errors[run][k] for k = 0..horizon; run r uses derive_stream(config.seed, r).
std::vector<std::vector<double>> simulate_runs(const MarketConfig& config, const Design& design);

// Mean, standard error and percentile bootstrap band of the mean over runs.
ErrorCurve summarize_runs(const std::vector<std::vector<double>>& errors, std::size_t replicates, double confidence,
                          std::uint64_t seed);

ErrorCurve run_market(const MarketConfig& config, const Design& design);

}  // namespace ratingdesign
