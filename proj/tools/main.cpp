#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "json.hpp"
#include "ratingdesign/errors.hpp"

using namespace ratingdesign::cli;

int main(int argc, char** argv) {
  CLI::App app{"Design and compare multi-level rating scales by their learning rate"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOptions global;
  app.add_option("--config", global.config_path, "Pipeline configuration JSON");
  app.add_option("--out", global.out_dir, "Output directory")->capture_default_str();
  app.add_option("--seed", global.seed, "Random seed")->capture_default_str();
  app.add_flag("--paper-defaults", global.paper_defaults,
               "500 sellers, 100 buyers, standard buckets, budget 10*3^L");

  EstimateOptions estimate;
  auto* est = app.add_subcommand("estimate", "Estimate joint, marginal and rehire distributions per cell");
  est->add_option("--ratings", estimate.ratings_path, "Ratings CSV")->required();
  est->add_option("--bootstrap", estimate.bootstrap, "Bootstrap replicates (>= 100)");
  est->add_option("--confidence", estimate.confidence, "Interval confidence")->capture_default_str();
  est->add_option("--buckets", estimate.buckets, "standard | contiguous");

  RateOptions rate;
  auto* rt = app.add_subcommand("rate", "Compute the learning rate of a design");
  rt->add_option("--design", rate.design_path, "Design or joint JSON")->required();
  rt->add_option("--phi", rate.phi, "Comma-separated scores overriding the design's phi");
  rt->add_option("--pair-mode", rate.pair_mode, "all | adjacent");
  rt->add_flag("--json", rate.json_stdout, "Print the JSON report instead of the table");

  OptimizeOptions optimize;
  auto* opt = app.add_subcommand("optimize", "Random search for the best score function");
  opt->add_option("--design", optimize.design_path, "Design or joint JSON")->required();
  opt->add_option("--budget", optimize.budget, "Random candidates (default 10*3^L)");
  opt->add_flag("--polish", optimize.polish, "Refine the winner by coordinate pattern search");
  opt->add_option("--pair-mode", optimize.pair_mode, "all | adjacent");

  SimulateOptions simulate;
  auto* sim = app.add_subcommand("simulate", "Marketplace simulation of ranking error over time");
  sim->add_option("--design", simulate.design_paths, "Design JSON (repeatable)")->required();
  sim->add_option("--sellers", simulate.sellers, "Sellers");
  sim->add_option("--buyers", simulate.buyers, "Buyers per period");
  sim->add_option("--horizon", simulate.horizon, "Periods");
  sim->add_option("--runs", simulate.runs, "Replications");
  sim->add_option("--exit-prob", simulate.exit_prob, "Per-period exit probability");
  sim->add_option("--match", simulate.match, "uniform | g");
  sim->add_option("--bootstrap", simulate.bootstrap, "Bootstrap replicates for the band (0 disables)");

  OracleOptions oracle;
  auto* orc = app.add_subcommand("oracle-check", "Compare exact ranking error decay with the learning rate");
  orc->add_option("--design", oracle.design_path, "Design JSON (M <= 3, L <= 3)")->required();
  orc->add_option("--kmax", oracle.k_max, "Largest rating count")->capture_default_str();

  SplitOptions split;
  auto* spl = app.add_subcommand("split", "Split ratings into train/test at the rater level");
  spl->add_option("--ratings", split.ratings_path, "Ratings CSV")->required();
  spl->add_option("--train-fraction", split.train_fraction, "Fraction of raters in train")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    if (*est) return cmd_estimate(global, estimate);
    if (*rt) return cmd_rate(global, rate);
    if (*opt) return cmd_optimize(global, optimize);
    if (*sim) return cmd_simulate(global, simulate);
    if (*orc) return cmd_oracle_check(global, oracle);
    if (*spl) return cmd_split(global, split);
  } catch (const ratingdesign::RatingError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: malformed JSON field: " << e.what() << "\n";
    return kInputError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}
