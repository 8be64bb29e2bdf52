#pragma once

// Test-only helpers and independent reference computations. Nothing here calls
// into the library's numerical routines.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "ratingdesign/core.hpp"
#include "ratingdesign/estimate.hpp"

namespace testsupport {

using ratingdesign::Design;

inline Design make_design(const std::vector<std::vector<double>>& rows, std::vector<double> phi = {},
                          std::vector<double> g = {}) {
  Design d;
  const std::size_t L = rows.front().size();
  for (std::size_t j = 0; j < L; ++j) d.scale.levels.push_back("y" + std::to_string(j));
  for (std::size_t i = 0; i < rows.size(); ++i) d.grid.types.push_back("t" + std::to_string(i));
  d.grid.match_rates = g.empty() ? std::vector<double>(rows.size(), 1.0) : g;
  if (phi.empty()) {
    for (std::size_t j = 0; j < L; ++j) phi.push_back(static_cast<double>(j) / static_cast<double>(L - 1));
  }
  d.phi.scores = phi;
  d.joint = ratingdesign::JointDistribution(rows);
  return d;
}

// Two-level scale with the given top-level probabilities per type.
inline Design binary_design(const std::vector<double>& top) {
  std::vector<std::vector<double>> rows;
  for (double p : top) rows.push_back({1.0 - p, p});
  return make_design(rows);
}

// -2 log(sqrt(pq) + sqrt((1-p)(1-q))): separation rate of two Bernoulli score streams.
inline double binary_closed_form(double p, double q) {
  return -2.0 * std::log(std::sqrt(p * q) + std::sqrt((1.0 - p) * (1.0 - q)));
}

inline double bernoulli_rate(double a, double p) {
  return a * std::log(a / p) + (1.0 - a) * std::log((1.0 - a) / (1.0 - p));
}

// Plain log of the moment generating function, no shifting.
inline double naive_log_mgf(double z, const std::vector<double>& row, const std::vector<double>& scores) {
  double s = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) s += row[j] * std::exp(z * scores[j]);
  return std::log(s);
}

// Dual form of the pair rate:
//   inf_a g_i I_i(a) + g_j I_j(a) = sup_t -g_i Lambda_i(-t/g_i) - g_j Lambda_j(t/g_j),
// a concave maximization in one variable, solved by coarse scan then ternary search.
inline double dual_pair_rate(const std::vector<double>& row_i, const std::vector<double>& row_j, double g_i,
                             double g_j, const std::vector<double>& scores, double t_max = 200.0) {
  auto h = [&](double t) {
    return -g_i * naive_log_mgf(-t / g_i, row_i, scores) - g_j * naive_log_mgf(t / g_j, row_j, scores);
  };
  double best_t = 0.0;
  double best = h(0.0);
  const int n = 4000;
  for (int s = -n; s <= n; ++s) {
    const double t = t_max * s / n;
    const double v = h(t);
    if (v > best) {
      best = v;
      best_t = t;
    }
  }
  double lo = best_t - t_max / n;
  double hi = best_t + t_max / n;
  for (int it = 0; it < 200; ++it) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (h(m1) < h(m2)) {
      lo = m1;
    } else {
      hi = m2;
    }
  }
  return std::max(best, h(0.5 * (lo + hi)));
}

// O(n^2) Kendall error over pairs with distinct types, ties weighted one half.
inline double brute_kendall(const std::vector<std::size_t>& types, const std::vector<double>& x) {
  double bad = 0.0;
  double total = 0.0;
  for (std::size_t a = 0; a < types.size(); ++a) {
    for (std::size_t b = a + 1; b < types.size(); ++b) {
      if (types[a] == types[b]) continue;
      total += 1.0;
      const bool a_better = types[a] > types[b];
      if (x[a] == x[b]) {
        bad += 0.5;
      } else if ((x[a] > x[b]) != a_better) {
        bad += 1.0;
      }
    }
  }
  return bad / total;
}

inline std::vector<double> random_row(std::mt19937_64& rng, std::size_t L, double lo = 0.05) {
  std::uniform_real_distribution<double> u(lo, 1.0);
  std::vector<double> row(L);
  double s = 0.0;
  for (auto& v : row) s += (v = u(rng));
  for (auto& v : row) v /= s;
  return row;
}

// Synthetic marketplace ratings: every client rates sellers in each cell; a
// seller's level in a cell is drawn from that cell's row for the seller's type.
struct SyntheticData {
  std::vector<ratingdesign::RatingRecord> records;
  std::map<std::string, std::size_t> seller_type;
};

inline SyntheticData synthetic_ratings(const std::vector<std::string>& cells,
                                       const std::vector<std::vector<std::vector<double>>>& joints,
                                       std::size_t sellers, std::size_t clients, std::size_t ratings_per_client,
                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SyntheticData data;
  const std::size_t M = joints.front().size();
  std::vector<std::size_t> types(sellers);
  std::uniform_int_distribution<std::size_t> pick_type(0, M - 1);
  for (std::size_t s = 0; s < sellers; ++s) {
    types[s] = pick_type(rng);
    data.seller_type["s" + std::to_string(s)] = types[s];
  }
  std::vector<std::vector<std::discrete_distribution<std::size_t>>> draw(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (const auto& row : joints[c]) draw[c].emplace_back(row.begin(), row.end());
  }
  std::uniform_int_distribution<std::size_t> pick_seller(0, sellers - 1);
  std::uniform_int_distribution<std::size_t> pick_cell(0, cells.size() - 1);
  for (std::size_t cl = 0; cl < clients; ++cl) {
    for (std::size_t r = 0; r < ratings_per_client; ++r) {
      const std::size_t s = pick_seller(rng);
      const std::size_t c = pick_cell(rng);
      ratingdesign::RatingRecord rec;
      rec.client_id = "c" + std::to_string(cl);
      rec.seller_id = "s" + std::to_string(s);
      rec.cell = cells[c];
      rec.level = draw[c][types[s]](rng);
      data.records.push_back(rec);
    }
  }
  return data;
}

}  // namespace testsupport
