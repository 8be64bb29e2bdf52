#include "ratingdesign/scoreopt.hpp"

#include <algorithm>
#include <limits>

namespace ratingdesign {

namespace {

constexpr double kReportTop = 5.0;

double rate_of(const QualityGrid& grid, const JointDistribution& joint, const std::vector<double>& scores,
               PairMode mode) {
  return learning_rate(grid, joint, scores, mode).overall_rate;
}

}  // namespace

ScoreFunction random_increasing_scores(std::size_t levels, Rng& rng) {
  if (levels < 2) throw RatingError(ErrorCode::TooShort, "a scale needs at least two levels");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  ScoreFunction phi;
  phi.scores.resize(levels);
  phi.scores.front() = 0.0;
  phi.scores.back() = 1.0;
  while (true) {
    for (std::size_t i = 1; i + 1 < levels; ++i) {
      double u = 0.0;
      while (u == 0.0) u = unit(rng);
      phi.scores[i] = u;
    }
    std::sort(phi.scores.begin() + 1, phi.scores.end() - 1);
    if (is_strictly_increasing(phi.scores)) return phi;
  }
}

std::size_t default_budget(std::size_t levels) {
  std::size_t budget = 10;
  for (std::size_t i = 0; i < levels; ++i) {
    if (budget > std::numeric_limits<std::size_t>::max() / 3) return std::numeric_limits<std::size_t>::max();
    budget *= 3;
  }
  return budget;
}

OptimizationResult optimize_scores(const RatingScale& scale, const JointDistribution& joint, const QualityGrid& grid,
                                   std::size_t budget, Rng& rng, OptimizeOptions options) {
  const std::size_t L = scale.size();
  if (joint.levels() != L) throw RatingError(ErrorCode::DimensionMismatch, "joint and scale level counts differ");

  OptimizationResult result;
  result.best_phi = ScoreFunction::equally_spaced(L, kReportTop);
  result.baseline_rate = rate_of(grid, joint, result.best_phi.scores, options.pair_mode);
  result.best_rate = result.baseline_rate;
  result.history.push_back({0, result.best_rate});

  for (std::size_t it = 1; it <= budget; ++it) {
    ScoreFunction candidate = random_increasing_scores(L, rng);
    const double rate = rate_of(grid, joint, candidate.scores, options.pair_mode);
    if (rate > result.best_rate) {
      result.best_rate = rate;
      result.best_phi.scores = std::move(candidate.scores);
      result.history.push_back({it, rate});
    }
  }
  result.budget_used = budget;

  if (options.polish && L > 2) {
    result.polished = true;
    std::size_t step_index = budget;
    std::vector<double> current = result.best_phi.scores;
    for (double step = 0.1; step >= 1e-4; step *= 0.5) {
      bool improved = true;
      while (improved) {
        improved = false;
        for (std::size_t i = 1; i + 1 < L; ++i) {
          for (double dir : {1.0, -1.0}) {
            std::vector<double> trial = current;
            trial[i] += dir * step;
            if (!(trial[i] > trial[i - 1] && trial[i] < trial[i + 1])) continue;
            const double rate = rate_of(grid, joint, trial, options.pair_mode);
            ++step_index;
            if (rate > result.best_rate) {
              result.best_rate = rate;
              current = std::move(trial);
              result.history.push_back({step_index, rate});
              improved = true;
              break;
            }
          }
        }
      }
    }
    result.best_phi.scores = current;
  }
  return result;
}

}  // namespace ratingdesign
