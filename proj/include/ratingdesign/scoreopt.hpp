#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ratingdesign/core.hpp"
#include "ratingdesign/ldrate.hpp"
#include "ratingdesign/random.hpp"

namespace ratingdesign {

struct HistoryEntry {
  std::size_t iteration = 0;  // 0 is the equally spaced baseline
  double rate = 0.0;
};

struct OptimizationResult {
  ScoreFunction best_phi;
  double best_rate = 0.0;
  double baseline_rate = 0.0;
  std::vector<HistoryEntry> history;
  std::size_t budget_used = 0;
  bool polished = false;
};

struct OptimizeOptions {
  PairMode pair_mode = PairMode::All;
  bool polish = false;
};

// Uniform order statistics on (0,1) with endpoints pinned to 0 and 1.
ScoreFunction random_increasing_scores(std::size_t levels, Rng& rng);

// 10 * 3^L, saturating.
std::size_t default_budget(std::size_t levels);

// Pure random search seeded with the equally spaced candidate; ties keep the
// earliest candidate. With `polish`, the winner is refined by coordinate
// pattern search (steps 0.1 halving to 1e-4).
OptimizationResult optimize_scores(const RatingScale& scale, const JointDistribution& joint, const QualityGrid& grid,
                                   std::size_t budget, Rng& rng, OptimizeOptions options = {});

}  // namespace ratingdesign
