// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance [--only N] [--cli PATH]
//
// Exit status 0 when every selected criterion passes, 1 otherwise.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../cli_harness.hpp"
#include "../support.hpp"
#include "ratingdesign/estimate.hpp"
#include "ratingdesign/ldrate.hpp"
#include "ratingdesign/oracle.hpp"
#include "ratingdesign/scoreopt.hpp"
#include "ratingdesign/simulate.hpp"

using namespace ratingdesign;
namespace fs = std::filesystem;

namespace {

// Tolerances and limits.
constexpr double kClosedFormRelTol = 1e-6;
constexpr double kChainRate = 0.105361;
constexpr double kChainTol = 1e-5;
constexpr double kAffineRelTol = 1e-6;
constexpr double kLegendreTol = 1e-4;
constexpr double kSlopeRate = 0.446287;
constexpr double kSlopeRelTol = 0.20;
constexpr double kDegenerateRate = 1e-8;
constexpr double kTwoLevelImprovement = 1e-9;
constexpr double kMiddleLevelImprovement = 1e-3;
constexpr double kJointTol = 0.02;
constexpr double kSimSlopeRelTol = 0.25;

struct Outcome {
  bool passed = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double time_limit_s;  // <= 0 means no limit
  std::function<Outcome()> run;
};

std::string fmt(double v, int precision = 6) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

std::string g_cli;

// 1 -------------------------------------------------------------------------
Outcome binary_closed_form() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  const std::vector<double> s{0.0, 1.0};
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double p = u(rng);
    const double q = u(rng);
    const std::vector<double> ri{1 - p, p};
    const std::vector<double> rj{1 - q, q};
    const double expected = testsupport::binary_closed_form(p, q);
    const double got = pair_rate(ri, rj, 1.0, 1.0, s).first;
    const double rel = expected == 0.0 ? std::abs(got) : std::abs(got - expected) / expected;
    worst = std::max(worst, rel);
  }
  return {worst < kClosedFormRelTol, "max relative error " + fmt(worst, 3) + " over 100 pairs"};
}

// 2 -------------------------------------------------------------------------
Outcome three_type_chain() {
  const auto d = testsupport::binary_design({0.2, 0.5, 0.8});
  const double all = learning_rate(d, PairMode::All).overall_rate;
  const double adj = learning_rate(d, PairMode::Adjacent).overall_rate;
  const bool ok = std::abs(all - kChainRate) <= kChainTol && std::abs(all - adj) <= 1e-12;
  return {ok, "all-pairs " + fmt(all, 9) + ", adjacent " + fmt(adj, 9)};
}

// 3 -------------------------------------------------------------------------
Outcome affine_invariance() {
  std::mt19937_64 rng(33);
  double worst = 0.0;
  bool special_ok = true;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t M = 2 + rng() % 4;
    const std::size_t L = 2 + rng() % 5;
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < M; ++i) rows.push_back(testsupport::random_row(rng, L, 0.0));
    std::vector<double> raw(L);
    for (auto& v : raw) v = std::uniform_real_distribution<double>(0, 1)(rng);
    std::sort(raw.begin(), raw.end());
    const auto d = testsupport::make_design(rows, normalize_scores(raw).scores);
    const double base = learning_rate(d).overall_rate;
    for (double alpha : {0.3, 2.0, 10.0}) {
      for (double beta : {-1.0, 0.0, 4.0}) {
        std::vector<double> moved;
        for (double v : d.phi.scores) moved.push_back(alpha * v + beta);
        const double r = learning_rate(d.grid, d.joint, moved).overall_rate;
        if (base == 0.0 || std::isinf(base)) {
          special_ok = special_ok && (r == base);
        } else {
          worst = std::max(worst, std::abs(r - base) / base);
        }
      }
    }
  }
  return {worst < kAffineRelTol && special_ok, "max relative difference " + fmt(worst, 3) + " over 50 designs x 9 maps"};
}

// 4 -------------------------------------------------------------------------
Outcome legendre_cross_oracle() {
  std::mt19937_64 rng(44);
  double worst = 0.0;
  int cases = 0;
  int skipped = 0;
  while (cases < 1000) {
    const std::size_t L = 2 + rng() % 5;
    const auto row = testsupport::random_row(rng, L);
    std::vector<double> raw(L);
    for (auto& v : raw) v = std::uniform_real_distribution<double>(0, 1)(rng);
    std::sort(raw.begin(), raw.end());
    const auto phi = normalize_scores(raw);
    // Interior: the middle 90% of the score hull [0, 1], and a maximizer the
    // grid can reach.
    const double a = std::uniform_real_distribution<double>(0.05, 0.95)(rng);
    const auto grid = oracle::rate_I_grid(a, row, phi.scores);
    if (std::abs(grid.argmax_z) >= 49.9) {
      ++skipped;
      continue;
    }
    worst = std::max(worst, std::abs(rate_I(a, row, phi.scores).value - grid.value));
    ++cases;
  }
  return {worst < kLegendreTol,
          "max |difference| " + fmt(worst, 3) + " on 1000 cases (" + std::to_string(skipped) + " draws past the z grid)"};
}

// 5 -------------------------------------------------------------------------
Outcome theorem_slope() {
  const auto check = oracle::slope_check(testsupport::binary_design({0.2, 0.8}), 60);
  const double s60 = check.curve.points[59].slope;
  const double s10 = check.curve.points[9].slope;
  const bool within = std::abs(s60 - kSlopeRate) <= kSlopeRelTol * kSlopeRate;
  const bool closer = std::abs(s60 - kSlopeRate) < std::abs(s10 - kSlopeRate);
  const bool finite = std::isfinite(check.curve.points[59].log_one_minus_W);
  return {within && closer && finite, "slope_60 " + fmt(s60) + ", slope_10 " + fmt(s10) + ", r " + fmt(check.rate) +
                                          ", log(1-W_60) " + fmt(check.curve.points[59].log_one_minus_W)};
}

// 6 -------------------------------------------------------------------------
Outcome degeneracy() {
  std::mt19937_64 rng(66);
  double worst_rate = 0.0;
  double worst_w = 0.0;
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t M = 2 + trial % 2;
    const std::size_t L = 2 + (trial / 2) % 2;
    const auto row = testsupport::random_row(rng, L);
    const auto d = testsupport::make_design(std::vector<std::vector<double>>(M, row));
    worst_rate = std::max(worst_rate, learning_rate(d).overall_rate);
    for (std::size_t k : {1, 2, 5, 10, 30, 60}) worst_w = std::max(worst_w, std::abs(oracle::exact_W(d, k).W));
  }
  for (int trial = 0; trial < 8; ++trial) {
    const std::size_t L = 4 + trial % 3;
    const auto row = testsupport::random_row(rng, L);
    const auto d = testsupport::make_design(std::vector<std::vector<double>>(5, row));
    worst_rate = std::max(worst_rate, learning_rate(d).overall_rate);
  }
  return {worst_rate < kDegenerateRate && worst_w == 0.0,
          "max rate " + fmt(worst_rate, 3) + ", max |W_k| " + fmt(worst_w, 3)};
}

// 7 -------------------------------------------------------------------------
Outcome optimizer_soundness() {
  std::mt19937_64 gen(77);
  bool never_worse = true;
  double worst_two_level = 0.0;
  std::size_t instances = 0;
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t L = 2 + trial % 4;
    const std::size_t M = 2 + trial % 3;
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < M; ++i) rows.push_back(testsupport::random_row(gen, L));
    const auto d = testsupport::make_design(rows);
    Rng rng(700 + trial);
    const auto r = optimize_scores(d.scale, d.joint, d.grid, default_budget(L), rng);
    never_worse = never_worse && r.best_rate >= r.baseline_rate;
    if (L == 2) worst_two_level = std::max(worst_two_level, r.best_rate - r.baseline_rate);
    ++instances;
  }
  // Level 1 is received with probability 0.4 by every type; the remaining mass
  // splits (0.5, 0.1), (0.3, 0.3), (0.1, 0.5) across levels 0 and 2.
  const auto middle = testsupport::make_design({{0.5, 0.4, 0.1}, {0.3, 0.4, 0.3}, {0.1, 0.4, 0.5}});
  Rng rng(7);
  const auto r = optimize_scores(middle.scale, middle.joint, middle.grid, default_budget(3), rng);
  never_worse = never_worse && r.best_rate >= r.baseline_rate;
  const double improvement = r.best_rate - r.baseline_rate;
  const bool ok = never_worse && worst_two_level < kTwoLevelImprovement && improvement > kMiddleLevelImprovement;
  return {ok, "best >= baseline on " + std::to_string(instances + 1) + " instances: " + (never_worse ? "yes" : "no") +
                  "; max L=2 improvement " + fmt(worst_two_level, 3) + "; middle-level instance baseline " +
                  fmt(r.baseline_rate) + ", best " + fmt(r.best_rate) + ", improvement " + fmt(improvement, 3) +
                  " (needs > 1e-3)"};
}

// 8 -------------------------------------------------------------------------
Outcome estimation_consistency() {
  const std::vector<std::vector<double>> truth{{0.30, 0.25, 0.20, 0.12, 0.08, 0.05},
                                               {0.05, 0.10, 0.25, 0.30, 0.20, 0.10},
                                               {0.02, 0.03, 0.05, 0.15, 0.30, 0.45}};
  std::mt19937_64 rng(88);
  const std::size_t sellers = 600;
  std::vector<std::size_t> type(sellers);
  std::vector<RatingRecord> records;
  auto add = [&](std::size_t client, std::size_t seller, const char* cell, std::size_t level) {
    RatingRecord r;
    r.client_id = "c" + std::to_string(client);
    r.seller_id = "s" + std::to_string(seller);
    r.cell = cell;
    r.level = level;
    records.push_back(r);
  };
  // Other-cell ratings place each seller squarely inside its bucket.
  for (std::size_t s = 0; s < sellers; ++s) {
    type[s] = s % 3;
    const std::size_t n_other = 3 + rng() % 3;
    for (std::size_t k = 0; k < n_other; ++k) {
      const std::size_t level = type[s] == 0 ? rng() % 2 : (type[s] == 1 ? 3 : 5);
      add(rng() % 1000, s, "B", level);
    }
  }
  std::vector<std::discrete_distribution<std::size_t>> draw;
  for (const auto& row : truth) draw.emplace_back(row.begin(), row.end());
  for (std::size_t n = 0; n < 50000; ++n) {
    const std::size_t s = rng() % sellers;
    add(rng() % 1000, s, "A", draw[type[s]](rng));
  }
  const auto est = estimate_joint(records, "A", QualityBuckets::standard(), 3, 6);
  double worst = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 6; ++j) worst = std::max(worst, std::abs(est.joint(i, j) - truth[i][j]));
  }
  const auto before = estimate_quality(records, "A", 3);
  auto perturbed = records;
  for (auto& r : perturbed) {
    if (r.cell == "A") r.level = rng() % 6;
  }
  perturbed.erase(perturbed.begin() + static_cast<std::ptrdiff_t>(perturbed.size() - 1000), perturbed.end());
  const bool exogenous = estimate_quality(perturbed, "A", 3) == before;
  return {worst < kJointTol && exogenous && est.sellers_with_estimate == sellers,
          "max entry error " + fmt(worst, 3) + "; quality estimates unchanged under target-cell perturbation: " +
              (exogenous ? "yes" : "no")};
}

// 9 -------------------------------------------------------------------------
double log_slope(const ErrorCurve& curve, std::size_t k0, std::size_t k1) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
  for (std::size_t k = k0; k <= k1; ++k) {
    const double x = static_cast<double>(k);
    const double y = std::log(curve.points[k].mean_error);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    n += 1;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

Outcome simulator_direction_and_slope() {
  const auto a = testsupport::binary_design({0.1, 0.5, 0.9});
  const auto b = testsupport::binary_design({0.90, 0.95, 0.99});
  const double ra = learning_rate(a).overall_rate;
  const double rb = learning_rate(b).overall_rate;
  MarketConfig cfg;
  cfg.horizon = 150;
  cfg.runs = 200;
  cfg.seed = 9;
  const auto ca = run_market(cfg, a);
  const auto cb = run_market(cfg, b);
  const auto& pa = ca.points[150];
  const auto& pb = cb.points[150];
  const bool direction = ra > rb && pa.mean_error < pb.mean_error && pa.ci_hi < pb.ci_lo;

  const auto two = testsupport::binary_design({0.35, 0.65});
  const double r = learning_rate(two).overall_rate;
  MarketConfig full;
  full.n_buyers = full.n_sellers;
  full.horizon = 60;
  full.runs = 500;
  full.seed = 19;
  full.bootstrap_replicates = 0;
  const auto curve = run_market(full, two);
  const double slope = log_slope(curve, 20, 60);
  const bool slope_ok = std::abs(slope + r) <= kSimSlopeRelTol * r;
  return {direction && slope_ok,
          "(a) r_A " + fmt(ra) + " > r_B " + fmt(rb) + "; error at k=150 A " + fmt(pa.mean_error) + " [" +
              fmt(pa.ci_lo) + ", " + fmt(pa.ci_hi) + "] vs B " + fmt(pb.mean_error) + " [" + fmt(pb.ci_lo) + ", " +
              fmt(pb.ci_hi) + "]; (b) slope " + fmt(slope) + " vs -r " + fmt(-r)};
}

// 10 ------------------------------------------------------------------------
Outcome mturk_workflow() {
  struct Scale {
    std::string cell;
    std::vector<std::vector<double>> joint;
  };
  const std::vector<Scale> scales{
      {"binary", {{0.7, 0.3}, {0.55, 0.45}, {0.4, 0.6}}},
      {"three", {{0.5, 0.35, 0.15}, {0.3, 0.4, 0.3}, {0.15, 0.35, 0.5}}},
      {"five", {{0.3, 0.3, 0.2, 0.15, 0.05}, {0.1, 0.15, 0.3, 0.3, 0.15}, {0.05, 0.05, 0.15, 0.35, 0.4}}}};

  // Each rater works in one scale and labels items of known type.
  std::mt19937_64 gen(1010);
  std::vector<RatingRecord> records;
  std::map<std::string, std::size_t> item_type;
  const std::size_t items = 300;
  for (std::size_t it = 0; it < items; ++it) item_type["i" + std::to_string(it)] = it % 3;
  std::size_t rater = 0;
  for (const auto& sc : scales) {
    std::vector<std::discrete_distribution<std::size_t>> draw;
    for (const auto& row : sc.joint) draw.emplace_back(row.begin(), row.end());
    for (std::size_t r = 0; r < 1500; ++r, ++rater) {
      for (std::size_t k = 0; k < 20; ++k) {
        const std::size_t it = gen() % items;
        RatingRecord rec;
        rec.client_id = "r" + std::to_string(rater);
        rec.seller_id = "i" + std::to_string(it);
        rec.cell = sc.cell;
        rec.level = draw[item_type[rec.seller_id]](gen);
        records.push_back(rec);
      }
    }
  }
  Rng split_rng(1);
  const auto [train, test] = split_raters(records, 0.75, split_rng);

  std::vector<double> truth_rate, test_rate;
  std::ostringstream detail;
  for (std::size_t s = 0; s < scales.size(); ++s) {
    const auto& sc = scales[s];
    const std::size_t L = sc.joint.front().size();
    const RatingScale scale{std::vector<std::string>(L, "")};
    const QualityGrid grid = QualityGrid::uniform({"low", "mid", "high"});

    Rng truth_rng(50 + s);
    const auto truth = optimize_scores(scale, JointDistribution(sc.joint), grid, default_budget(L), truth_rng);
    const auto train_joint = tabulate_joint(train, sc.cell, L, item_type, 3);
    Rng train_rng(60 + s);
    const auto trained = optimize_scores(scale, train_joint, grid, default_budget(L), train_rng);
    const auto test_joint = tabulate_joint(test, sc.cell, L, item_type, 3);
    const double on_test = learning_rate(grid, test_joint, trained.best_phi.scores).overall_rate;
    truth_rate.push_back(truth.best_rate);
    test_rate.push_back(on_test);
    detail << sc.cell << ": truth " << fmt(truth.best_rate, 4) << ", test " << fmt(on_test, 4) << "; ";
  }
  auto order = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
    return idx;
  };
  const bool same = order(truth_rate) == order(test_rate);
  detail << "ordering " << (same ? "matches" : "differs");
  return {same, detail.str()};
}

// 11 ------------------------------------------------------------------------
bool same_tree(const fs::path& a, const fs::path& b, std::string& why) {
  std::set<std::string> names;
  for (const auto& e : fs::directory_iterator(a)) names.insert(e.path().filename().string());
  for (const auto& e : fs::directory_iterator(b)) names.insert(e.path().filename().string());
  for (const auto& n : names) {
    if (!fs::exists(a / n) || !fs::exists(b / n)) {
      why = n + " missing on one side";
      return false;
    }
    if (testsupport::read_file(a / n) != testsupport::read_file(b / n)) {
      why = n + " differs";
      return false;
    }
  }
  return !names.empty();
}

Outcome cli_determinism() {
  if (g_cli.empty()) return {false, "no --cli path given"};
  const auto dir = testsupport::fresh_dir("acceptance_determinism");
  const std::vector<std::vector<double>> truth{{0.4, 0.3, 0.2, 0.1}, {0.2, 0.3, 0.3, 0.2}, {0.1, 0.2, 0.3, 0.4}};
  auto data = testsupport::synthetic_ratings({"A", "B"}, {truth, truth}, 60, 120, 10, 3);
  for (std::size_t i = 0; i < data.records.size(); ++i) data.records[i].rehired = (i * 7 + data.records[i].level) % 3 == 0;
  std::ostringstream csv;
  write_ratings(csv, data.records, true, false);
  testsupport::write_file(dir / "ratings.csv", csv.str());
  testsupport::write_file(dir / "config.json", R"({
    "cells": [{"name": "A", "levels": ["0","1","2","3"]}, {"name": "B", "levels": ["0","1","2","3"]}],
    "buckets": [{"lo": 0, "hi": 1.2}, {"lo": 1.2, "hi": 1.8}, {"lo": 1.8, "hi": 3, "closed_hi": true}],
    "min_other": 3, "bootstrap": 200})");
  testsupport::write_file(dir / "d3.json", R"({"levels": ["a","b","c"], "types": ["x","y","z"],
    "rho": [[0.5,0.3,0.2],[0.3,0.4,0.3],[0.2,0.3,0.5]]})");
  testsupport::write_file(dir / "d2.json", R"({"levels": ["no","yes"], "types": ["x","y"], "rho": [[0.8,0.2],[0.2,0.8]]})");

  const std::string cfg = " --config " + (dir / "config.json").string();
  const std::vector<std::pair<std::string, std::string>> commands{
      {"estimate", cfg + " --seed 5 estimate --ratings " + (dir / "ratings.csv").string()},
      {"rate", " rate --design " + (dir / "d3.json").string()},
      {"optimize", " --seed 5 optimize --budget 200 --polish --design " + (dir / "d3.json").string()},
      {"simulate", " --seed 5 simulate --sellers 50 --buyers 20 --horizon 15 --runs 4 --bootstrap 100 --exit-prob 0.05"
                   " --design " + (dir / "d3.json").string() + " --design " + (dir / "d2.json").string()},
      {"oracle-check", " oracle-check --kmax 30 --design " + (dir / "d2.json").string()},
      {"split", cfg + " --seed 5 split --ratings " + (dir / "ratings.csv").string()}};
  std::ostringstream detail;
  bool ok = true;
  for (const auto& [name, args] : commands) {
    const auto one = dir / (name + "_1");
    const auto two = dir / (name + "_2");
    const auto r1 = testsupport::run_cli(g_cli, "--out " + one.string() + args, dir);
    const auto r2 = testsupport::run_cli(g_cli, "--out " + two.string() + args, dir);
    // Standard output may name the output directory, which differs by design.
    auto strip = [](std::string text, const std::string& path) {
      for (auto pos = text.find(path); pos != std::string::npos; pos = text.find(path)) text.replace(pos, path.size(), "<out>");
      return text;
    };
    std::string why;
    if (strip(r1.out, one.string()) != strip(r2.out, two.string())) why = "standard output differs";
    const bool same = r1.status == 0 && r2.status == 0 && why.empty() && same_tree(one, two, why);
    if (!same) {
      ok = false;
      detail << name << " not identical (" << (why.empty() ? "status " + std::to_string(r1.status) : why) << "); ";
    }
  }
  if (ok) detail << "6 commands byte-identical across reruns";
  return {ok, detail.str()};
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else if (std::strcmp(argv[i], "--cli") == 0 && i + 1 < argc) {
      g_cli = argv[++i];
    } else {
      std::cerr << "usage: acceptance [--only N] [--cli PATH]\n";
      return 2;
    }
  }

  const std::vector<Criterion> criteria{
      {1, "binary closed form", 2.0, binary_closed_form},
      {2, "three-type chain", 1.0, three_type_chain},
      {3, "affine invariance", 10.0, affine_invariance},
      {4, "Legendre cross-oracle", 30.0, legendre_cross_oracle},
      {5, "rate slope of exact W_k", 30.0, theorem_slope},
      {6, "degeneracy", 0.0, degeneracy},
      {7, "optimizer soundness", 60.0, optimizer_soundness},
      {8, "estimation consistency", 10.0, estimation_consistency},
      {9, "simulator direction and slope", 120.0, simulator_direction_and_slope},
      {10, "train/test workflow", 120.0, mturk_workflow},
      {11, "determinism", 0.0, cli_determinism},
  };

  bool all = true;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.time_limit_s <= 0.0 || secs < c.time_limit_s;
    const bool pass = out.passed && in_time;
    all = all && pass;
    std::cout << "criterion " << c.id << " [" << c.name << "]: " << (pass ? "PASS" : "FAIL") << " - " << out.detail
              << " (" << fmt(secs, 3) << " s";
    if (c.time_limit_s > 0.0) std::cout << ", limit " << c.time_limit_s << " s";
    std::cout << ")\n";
  }
  return all ? 0 : 1;
}
