#include "ratingdesign/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace ratingdesign {

namespace {

class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : tree_(n + 1, 0) {}
  void add(std::size_t i) {
    for (++i; i < tree_.size(); i += i & (~i + 1)) ++tree_[i];
  }
  // Number of added indices < i.
  std::uint64_t prefix(std::size_t i) const {
    std::uint64_t s = 0;
    for (; i > 0; i -= i & (~i + 1)) s += tree_[i];
    return s;
  }

 private:
  std::vector<std::uint64_t> tree_;
};

double quantize(double x) { return std::nearbyint(x * 1e12) / 1e12; }

}  // namespace

double kendall_error(std::span<const std::size_t> true_types, std::span<const double> aggregates) {
  const std::size_t n = true_types.size();
  if (aggregates.size() != n) throw RatingError(ErrorCode::DimensionMismatch, "types and aggregates differ in length");

  std::vector<std::size_t> ranks(true_types.begin(), true_types.end());
  std::vector<std::size_t> distinct(ranks);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  for (auto& r : ranks) r = static_cast<std::size_t>(std::lower_bound(distinct.begin(), distinct.end(), r) - distinct.begin());

  std::vector<std::uint64_t> per_type(distinct.size(), 0);
  for (auto r : ranks) ++per_type[r];
  std::uint64_t comparable = static_cast<std::uint64_t>(n) * (n > 0 ? n - 1 : 0) / 2;
  for (auto c : per_type) comparable -= c * (c > 0 ? c - 1 : 0) / 2;
  if (comparable == 0) throw RatingError(ErrorCode::NoComparablePairs, "all sellers share one quality type");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (aggregates[a] != aggregates[b]) return aggregates[a] < aggregates[b];
    return ranks[a] < ranks[b];
  });

  Fenwick below(distinct.size());
  std::uint64_t processed = 0;
  std::uint64_t inverted = 0;
  std::uint64_t tied = 0;
  std::vector<std::uint64_t> group_types(distinct.size(), 0);
  for (std::size_t start = 0; start < n;) {
    std::size_t end = start;
    while (end < n && aggregates[order[end]] == aggregates[order[start]]) ++end;
    // Strictly lower aggregate but strictly higher type: inverted.
    for (std::size_t p = start; p < end; ++p) {
      const std::size_t r = ranks[order[p]];
      inverted += processed - below.prefix(r + 1);
    }
    const std::uint64_t size = end - start;
    std::uint64_t same = 0;
    for (std::size_t p = start; p < end; ++p) ++group_types[ranks[order[p]]];
    for (std::size_t p = start; p < end; ++p) {
      auto& c = group_types[ranks[order[p]]];
      same += c * (c - 1) / 2;
      c = 0;
    }
    tied += size * (size - 1) / 2 - same;
    for (std::size_t p = start; p < end; ++p) below.add(ranks[order[p]]);
    processed += size;
    start = end;
  }
  return (static_cast<double>(inverted) + 0.5 * static_cast<double>(tied)) / static_cast<double>(comparable);
}

void MarketConfig::validate() const {
  if (n_sellers < 2) throw RatingError(ErrorCode::InvalidArgument, "market needs at least two sellers");
  if (n_buyers > n_sellers) throw RatingError(ErrorCode::InvalidArgument, "more buyers than sellers per period");
  if (horizon < 1) throw RatingError(ErrorCode::InvalidArgument, "horizon must be at least 1");
  if (runs < 1) throw RatingError(ErrorCode::InvalidArgument, "runs must be at least 1");
  if (!(exit_prob >= 0.0 && exit_prob <= 1.0)) throw RatingError(ErrorCode::InvalidArgument, "exit_prob outside [0,1]");
  if (!(confidence > 0.0 && confidence < 1.0)) throw RatingError(ErrorCode::InvalidArgument, "confidence outside (0,1)");
}

Market::Market(const MarketConfig& config, const Design& design, Rng rng)
    : config_(config), design_(design), rng_(std::move(rng)) {
  config_.validate();
  require_valid(design_);
  for (std::size_t t = 0; t < design_.joint.types(); ++t) {
    const auto row = design_.joint.row(t);
    rating_draw_.emplace_back(row.begin(), row.end());
  }
  sellers_.reserve(config_.n_sellers);
  for (std::size_t i = 0; i < config_.n_sellers; ++i) sellers_.push_back(fresh_seller());
  permutation_.resize(config_.n_sellers);
  std::iota(permutation_.begin(), permutation_.end(), 0);
}

SellerState Market::fresh_seller() {
  std::uniform_int_distribution<std::size_t> type(0, design_.grid.size() - 1);
  SellerState s;
  s.true_type = type(rng_);
  return s;
}

void Market::select_buyers() {
  const std::size_t n = config_.n_sellers;
  const std::size_t k = config_.n_buyers;
  selected_.clear();
  if (config_.match_weighting == MatchWeighting::Uniform) {
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(permutation_[i], permutation_[pick(rng_)]);
      selected_.push_back(permutation_[i]);
    }
    return;
  }
  // Weighted sampling without replacement: keep the k largest log(u) / g.
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::pair<double, std::size_t>> keys(n);
  for (std::size_t i = 0; i < n; ++i) {
    double u = 0.0;
    while (u == 0.0) u = unit(rng_);
    keys[i] = {std::log(u) / design_.grid.match_rates[sellers_[i].true_type], i};
  }
  std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(k), keys.end(),
                    [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
  for (std::size_t i = 0; i < k; ++i) selected_.push_back(keys[i].second);
}

void Market::step() {
  select_buyers();
  const auto& scores = design_.phi.scores;
  for (std::size_t idx : selected_) {
    auto& s = sellers_[idx];
    const std::size_t level = rating_draw_[s.true_type](rng_);
    ++s.rating_count;
    s.score_sum += scores[level];
    s.aggregate = quantize(s.score_sum / static_cast<double>(s.rating_count));
  }
  ratings_last_period_ = selected_.size();

  exits_last_period_ = 0;
  if (config_.exit_prob > 0.0) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (auto& s : sellers_) {
      if (unit(rng_) < config_.exit_prob) {
        s = fresh_seller();
        ++exits_last_period_;
      }
    }
  }
  ++period_;
}

double Market::error() const {
  std::vector<std::size_t> types(sellers_.size());
  std::vector<double> aggregates(sellers_.size());
  for (std::size_t i = 0; i < sellers_.size(); ++i) {
    types[i] = sellers_[i].true_type;
    aggregates[i] = sellers_[i].aggregate;
  }
  try {
    return kendall_error(types, aggregates);
  } catch (const RatingError& e) {
    if (e.code() != ErrorCode::NoComparablePairs) throw;
    return std::numeric_limits<double>::quiet_NaN();
  }
}

std::vector<std::vector<double>> simulate_runs(const MarketConfig& config, const Design& design) {
  config.validate();
  require_valid(design);
  std::vector<std::vector<double>> errors(config.runs);
  for (std::size_t run = 0; run < config.runs; ++run) {
    Market market(config, design, derive_stream(config.seed, run));
    auto& curve = errors[run];
    curve.reserve(config.horizon + 1);
    curve.push_back(market.error());
    for (std::size_t k = 1; k <= config.horizon; ++k) {
      market.step();
      curve.push_back(market.error());
    }
  }
  return errors;
}

ErrorCurve summarize_runs(const std::vector<std::vector<double>>& errors, std::size_t replicates, double confidence,
                          std::uint64_t seed) {
  ErrorCurve curve;
  if (errors.empty()) return curve;
  const std::size_t periods = errors.front().size();
  const double alpha = 1.0 - confidence;
  for (std::size_t k = 0; k < periods; ++k) {
    std::vector<double> values;
    for (const auto& run : errors) {
      if (!std::isnan(run.at(k))) values.push_back(run[k]);
    }
    CurvePoint p;
    p.k = k;
    if (values.empty()) {
      p.mean_error = p.std_error = p.ci_lo = p.ci_hi = std::numeric_limits<double>::quiet_NaN();
      curve.points.push_back(p);
      continue;
    }
    const double n = static_cast<double>(values.size());
    p.mean_error = std::accumulate(values.begin(), values.end(), 0.0) / n;
    if (values.size() > 1) {
      double ss = 0.0;
      for (double v : values) ss += (v - p.mean_error) * (v - p.mean_error);
      p.std_error = std::sqrt(ss / (n - 1.0) / n);
    }
    p.ci_lo = p.ci_hi = p.mean_error;
    if (replicates > 0 && values.size() > 1) {
      Rng rng = derive_stream(seed, 0x100000000ull + k);
      std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
      std::vector<double> means(replicates);
      for (auto& m : means) {
        double sum = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) sum += values[pick(rng)];
        m = sum / n;
      }
      std::sort(means.begin(), means.end());
      auto at = [&](double q) {
        const double pos = q * static_cast<double>(means.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const std::size_t hi = std::min(lo + 1, means.size() - 1);
        return means[lo] + (pos - static_cast<double>(lo)) * (means[hi] - means[lo]);
      };
      p.ci_lo = std::min(at(alpha / 2.0), p.mean_error);
      p.ci_hi = std::max(at(1.0 - alpha / 2.0), p.mean_error);
    }
    curve.points.push_back(p);
  }
  return curve;
}

ErrorCurve run_market(const MarketConfig& config, const Design& design) {
  return summarize_runs(simulate_runs(config, design), config.bootstrap_replicates, config.confidence, config.seed);
}

}  // namespace ratingdesign
