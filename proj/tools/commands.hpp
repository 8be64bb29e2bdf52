#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ratingdesign::cli {

enum ExitCode : int { kOk = 0, kVerificationFailed = 1, kInputError = 2 };

struct GlobalOptions {
  std::optional<std::string> config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 1;
  bool paper_defaults = false;
};

struct EstimateOptions {
  std::string ratings_path;
  std::optional<std::size_t> bootstrap;
  double confidence = 0.95;
  std::optional<std::string> buckets;  // "standard" | "contiguous"
};

struct RateOptions {
  std::string design_path;
  std::optional<std::string> phi;  // comma-separated raw scores
  std::optional<std::string> pair_mode;
  bool json_stdout = false;
};

struct OptimizeOptions {
  std::string design_path;
  std::optional<std::size_t> budget;
  bool polish = false;
  std::optional<std::string> pair_mode;
};

struct SimulateOptions {
  std::vector<std::string> design_paths;
  std::optional<std::size_t> sellers;
  std::optional<std::size_t> buyers;
  std::optional<std::size_t> horizon;
  std::optional<std::size_t> runs;
  std::optional<double> exit_prob;
  std::optional<std::string> match;  // "uniform" | "g"
  std::optional<std::size_t> bootstrap;
};

struct OracleOptions {
  std::string design_path;
  std::size_t k_max = 60;
};

struct SplitOptions {
  std::string ratings_path;
  double train_fraction = 0.75;
};

int cmd_estimate(const GlobalOptions& global, const EstimateOptions& options);
int cmd_rate(const GlobalOptions& global, const RateOptions& options);
int cmd_optimize(const GlobalOptions& global, const OptimizeOptions& options);
int cmd_simulate(const GlobalOptions& global, const SimulateOptions& options);
int cmd_oracle_check(const GlobalOptions& global, const OracleOptions& options);
int cmd_split(const GlobalOptions& global, const SplitOptions& options);

}  // namespace ratingdesign::cli
