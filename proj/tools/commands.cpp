#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "ratingdesign/csv.hpp"
#include "ratingdesign/io.hpp"

namespace ratingdesign::cli {

namespace fs = std::filesystem;
using io::json;

namespace {

constexpr std::size_t kPaperSellers = 500;
constexpr std::size_t kPaperBuyers = 100;

json load_config(const GlobalOptions& global) {
  if (!global.config_path) return json::object();
  return io::read_json_file(*global.config_path);
}

template <typename T>
std::optional<T> config_value(const json& config, const char* section, const char* key) {
  if (!config.contains(section) || !config.at(section).contains(key)) return std::nullopt;
  return config.at(section).at(key).get<T>();
}

fs::path prepare_out(const GlobalOptions& global) {
  fs::path out(global.out_dir);
  fs::create_directories(out);
  return out;
}

std::string file_token(const std::string& name) {
  std::string out;
  for (char c : name) {
    const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_';
    out.push_back(keep ? c : '_');
  }
  return out.empty() ? "_" : out;
}

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

Design load_design(const std::string& path) {
  Design design = io::design_from_json(io::read_json_file(path));
  const auto validation = validate_design(design);
  for (const auto& w : validation.warnings) std::cerr << "warning: " << path << ": " << w.message << "\n";
  if (!validation.ok()) {
    std::ostringstream msg;
    msg << path << ": invalid design";
    for (const auto& e : validation.errors) msg << "\n  " << to_string(e.code) << ": " << e.message;
    throw RatingError(validation.errors.front().code, msg.str());
  }
  return design;
}

PairMode resolve_pair_mode(const std::optional<std::string>& flag, const json& config) {
  if (flag) return io::pair_mode_from_string(*flag);
  if (config.contains("pair_mode")) return io::pair_mode_from_string(config.at("pair_mode").get<std::string>());
  return PairMode::All;
}

std::string format_rate(double r) {
  if (std::isinf(r)) return "inf";
  std::ostringstream s;
  s << std::fixed << std::setprecision(6) << r;
  return s.str();
}

std::string optional_cell(const std::optional<double>& v) { return v ? csv::format_double(*v) : ""; }

LoadResult load_ratings_file(const std::string& path, const CellScales& cells) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RatingError(ErrorCode::IoError, "cannot open '" + path + "'");
  try {
    return load_ratings(in, cells);
  } catch (const RatingError& e) {
    throw RatingError(e.code(), path + ": " + e.what());
  }
}

void report_rejects(const std::string& path, const LoadResult& loaded) {
  for (const auto& r : loaded.rejects) {
    std::cerr << "warning: " << path << ":" << r.line << ": " << to_string(r.reason) << ": " << r.detail << "\n";
  }
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return seed * 1000003ull + a * 64ull + b;
}

}  // namespace

// ---------------------------------------------------------------------------

int cmd_estimate(const GlobalOptions& global, const EstimateOptions& options) {
  if (!global.config_path) throw RatingError(ErrorCode::InvalidArgument, "estimate requires --config");
  const json raw_config = load_config(global);
  io::PipelineConfig config = io::pipeline_config_from_json(raw_config);
  if (global.paper_defaults) config.buckets = QualityBuckets::standard();
  if (options.buckets) {
    if (*options.buckets == "standard") {
      config.buckets = QualityBuckets::standard();
    } else if (*options.buckets == "contiguous") {
      config.buckets = QualityBuckets::contiguous();
    } else {
      throw RatingError(ErrorCode::InvalidArgument, "--buckets must be 'standard' or 'contiguous'");
    }
  }
  const std::size_t replicates = options.bootstrap.value_or(config.bootstrap_replicates);

  const LoadResult loaded = load_ratings_file(options.ratings_path, config.cells);
  for (const auto& r : loaded.rejects) {
    if (r.reason == ErrorCode::UnknownCell) {
      throw RatingError(ErrorCode::UnknownCell,
                        options.ratings_path + ":" + std::to_string(r.line) + ": " + r.detail);
    }
  }
  report_rejects(options.ratings_path, loaded);
  const auto& records = loaded.records;
  const fs::path out = prepare_out(global);

  json summary = json::object();
  summary["ratings"] = options.ratings_path;
  summary["records"] = records.size();
  json rejects = json::array();
  for (const auto& r : loaded.rejects) {
    rejects.push_back({{"line", r.line}, {"reason", to_string(r.reason)}, {"detail", r.detail}});
  }
  summary["rejected_rows"] = rejects;
  summary["cells"] = json::array();

  const QualityGrid grid = config.buckets.grid();
  for (std::size_t c = 0; c < config.cell_order.size(); ++c) {
    const std::string& cell = config.cell_order[c];
    const RatingScale& scale = config.cells.at(cell);
    const std::size_t L = scale.size();
    const std::string token = file_token(cell);
    json cell_summary = {{"cell", cell}};

    // Marginal histogram.
    try {
      const Histogram hist = marginal_distribution(records, cell, L);
      StatisticSpec spec{StatisticKind::MarginalProportion, cell, L, {}, config.min_other};
      const auto ci = bootstrap_ci(records, spec, replicates, options.confidence, mix_seed(global.seed, c, 0));
      std::ostringstream csv_out;
      csv_out << "level,label,count,proportion,ci_lo,ci_hi\n";
      for (std::size_t j = 0; j < L; ++j) {
        csv_out << j << ',' << csv::escape(scale.levels[j]) << ',' << hist.counts[j] << ','
                << csv::format_double(hist.proportions[j]) << ',' << optional_cell(ci[j].lower) << ','
                << optional_cell(ci[j].upper) << '\n';
      }
      io::write_text_file((out / ("marginal_" + token + ".csv")).string(), csv_out.str());
      cell_summary["marginal"] = "marginal_" + token + ".csv";
    } catch (const RatingError& e) {
      if (e.code() != ErrorCode::EmptyCell) throw;
      std::cerr << "warning: " << e.what() << "\n";
      cell_summary["marginal_error"] = e.what();
    }

    // Joint distribution against cross-cell quality.
    try {
      const JointEstimate est = estimate_joint(records, cell, config.buckets, config.min_other, L);
      Design design{scale, ScoreFunction::equally_spaced(L, static_cast<double>(L - 1)), grid, est.joint};
      json doc = io::design_to_json(design);
      json buckets = json::array();
      for (const auto& b : config.buckets.intervals) {
        buckets.push_back({{"name", b.name}, {"lo", b.lo}, {"hi", b.hi}, {"closed_hi", b.closed_hi}});
      }
      doc["metadata"] = {
          {"cell", cell},
          {"min_other", config.min_other},
          {"buckets", buckets},
          {"sellers_with_estimate", est.sellers_with_estimate},
          {"sellers_in_gaps", est.sellers_in_gaps},
          {"sellers_per_type", est.sellers_per_type},
          {"records_used", est.records_used},
          {"monotone_R", est.joint.monotone_r()},
          {"caveat", "quality is the mean raw level index of other-cell ratings; level meanings differ across cells"}};
      io::write_text_file((out / ("joint_" + token + ".json")).string(), dump(doc));
      cell_summary["joint"] = "joint_" + token + ".json";
      cell_summary["monotone_R"] = est.joint.monotone_r();
      if (!est.joint.monotone_r()) {
        std::cerr << "warning: cell '" << cell << "': estimated R is not monotone in quality\n";
      }

      StatisticSpec spec{StatisticKind::JointCellProbability, cell, L, config.buckets, config.min_other};
      const auto ci = bootstrap_ci(records, spec, replicates, options.confidence, mix_seed(global.seed, c, 1));
      std::ostringstream csv_out;
      csv_out << "type,level,label,estimate,ci_lo,ci_hi\n";
      for (std::size_t i = 0; i < grid.size(); ++i) {
        for (std::size_t j = 0; j < L; ++j) {
          const auto& iv = ci[i * L + j];
          csv_out << csv::escape(grid.types[i]) << ',' << j << ',' << csv::escape(scale.levels[j]) << ','
                  << optional_cell(iv.estimate) << ',' << optional_cell(iv.lower) << ',' << optional_cell(iv.upper)
                  << '\n';
        }
      }
      io::write_text_file((out / ("bootstrap_" + token + ".csv")).string(), csv_out.str());
      cell_summary["bootstrap"] = "bootstrap_" + token + ".csv";
    } catch (const RatingError& e) {
      if (e.code() != ErrorCode::EmptyBucket) throw;
      std::cerr << "warning: " << e.what() << "\n";
      cell_summary["joint_error"] = e.what();
    }

    // Rehire analysis when flags are present.
    if (loaded.has_rehired) {
      try {
        const RehireTable table = rehire_rates(records, cell, L);
        StatisticSpec spec{StatisticKind::RehireRate, cell, L, {}, config.min_other};
        const auto ci = bootstrap_ci(records, spec, replicates, options.confidence, mix_seed(global.seed, c, 2));
        std::ostringstream csv_out;
        csv_out << "level,label,jobs,rehires,normalized_rate,ci_lo,ci_hi\n";
        for (std::size_t j = 0; j < L; ++j) {
          csv_out << j << ',' << csv::escape(scale.levels[j]) << ',' << table.jobs[j] << ',' << table.rehires[j] << ','
                  << optional_cell(table.normalized[j]) << ',' << optional_cell(ci[j].lower) << ','
                  << optional_cell(ci[j].upper) << '\n';
        }
        io::write_text_file((out / ("rehire_" + token + ".csv")).string(), csv_out.str());
        cell_summary["rehire"] = "rehire_" + token + ".csv";
        cell_summary["overall_rehire_rate"] = table.overall_rate;
      } catch (const RatingError& e) {
        if (e.code() != ErrorCode::EmptyCell && e.code() != ErrorCode::NoRehires) throw;
        std::cerr << "warning: " << e.what() << "\n";
        cell_summary["rehire_error"] = e.what();
      }
    }
    summary["cells"].push_back(cell_summary);
  }
  io::write_text_file((out / "estimate_summary.json").string(), dump(summary));
  std::cout << "estimated " << config.cell_order.size() << " cell(s) from " << records.size() << " ratings into "
            << out.string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_rate(const GlobalOptions& global, const RateOptions& options) {
  const json config = load_config(global);
  Design design = load_design(options.design_path);
  if (options.phi) {
    std::vector<double> raw;
    std::stringstream ss(*options.phi);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        raw.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw RatingError(ErrorCode::ParseError, "--phi entry '" + item + "' is not a number");
      }
    }
    design.phi = normalize_scores(raw);
    require_valid(design);
  }
  const PairMode mode = resolve_pair_mode(options.pair_mode, config);
  const RateReport report = learning_rate(design, mode);
  const json doc = io::rate_report_to_json(report, design);
  const fs::path out = prepare_out(global);
  io::write_text_file((out / "rate.json").string(), dump(doc));

  if (options.json_stdout) {
    std::cout << dump(doc);
    return kOk;
  }
  std::cout << "pair mode: " << io::to_string(mode) << "\n";
  std::cout << std::left << std::setw(28) << "pair" << std::setw(14) << "rate" << "a*\n";
  for (const auto& p : report.pair_rates) {
    const std::string name = design.grid.types[p.i] + " < " + design.grid.types[p.j];
    std::cout << std::left << std::setw(28) << name << std::setw(14) << format_rate(p.rate)
              << (std::isnan(p.a_star) ? std::string("-") : csv::format_double(p.a_star)) << "\n";
  }
  std::cout << "learning rate: " << format_rate(report.overall_rate) << " (binding pair "
            << design.grid.types[report.binding_pair.first] << " < " << design.grid.types[report.binding_pair.second]
            << ")\n";
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_optimize(const GlobalOptions& global, const OptimizeOptions& options) {
  const json config = load_config(global);
  const Design design = load_design(options.design_path);
  const std::size_t L = design.scale.size();

  std::size_t budget = default_budget(L);
  if (!global.paper_defaults) {
    if (auto b = config_value<std::size_t>(config, "optimizer", "budget")) budget = *b;
  }
  if (options.budget) budget = *options.budget;
  if (budget == 0) std::cerr << "warning: budget 0 evaluates only the equally spaced baseline\n";
  const bool polish = options.polish || config_value<bool>(config, "optimizer", "polish").value_or(false);
  const PairMode mode = resolve_pair_mode(options.pair_mode, config);

  Rng rng = derive_stream(global.seed, 0);
  ratingdesign::OptimizeOptions opt{mode, polish};
  const OptimizationResult result = optimize_scores(design.scale, design.joint, design.grid, budget, rng, opt);

  json doc = io::optimization_to_json(result, design.scale, mode);
  doc["seed"] = global.seed;
  const fs::path out = prepare_out(global);
  io::write_text_file((out / "optimize.json").string(), dump(doc));
  Design optimized = design;
  optimized.phi = result.best_phi;
  io::write_text_file((out / "design_optimized.json").string(), dump(io::design_to_json(optimized)));

  auto row = [](const std::string& label, double rate, const std::vector<double>& phi) {
    std::cout << std::left << std::setw(14) << label << std::setw(12) << format_rate(rate);
    for (double s : phi) std::cout << std::fixed << std::setprecision(2) << s << ' ';
    std::cout << "\n";
  };
  std::cout << std::left << std::setw(14) << "" << std::setw(12) << "rate" << "scores (normalized to 5)\n";
  row("Naive phi", result.baseline_rate, ScoreFunction::equally_spaced(L, 5.0).displayed());
  row("Optimal phi", result.best_rate, result.best_phi.with_display_max(5.0).displayed());
  std::cout << "candidates evaluated: " << result.budget_used + 1 << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const GlobalOptions& global, const SimulateOptions& options) {
  const json config = load_config(global);
  MarketConfig market;
  if (!global.paper_defaults) {
    market.n_sellers = config_value<std::size_t>(config, "market", "sellers").value_or(market.n_sellers);
    market.n_buyers = config_value<std::size_t>(config, "market", "buyers").value_or(market.n_buyers);
  } else {
    market.n_sellers = kPaperSellers;
    market.n_buyers = kPaperBuyers;
  }
  market.horizon = config_value<std::size_t>(config, "market", "horizon").value_or(market.horizon);
  market.runs = config_value<std::size_t>(config, "market", "runs").value_or(market.runs);
  market.exit_prob = config_value<double>(config, "market", "exit_prob").value_or(market.exit_prob);
  market.bootstrap_replicates =
      config_value<std::size_t>(config, "market", "bootstrap").value_or(market.bootstrap_replicates);
  std::string match = config_value<std::string>(config, "market", "match").value_or("uniform");

  if (options.sellers) market.n_sellers = *options.sellers;
  if (options.buyers) market.n_buyers = *options.buyers;
  if (options.horizon) market.horizon = *options.horizon;
  if (options.runs) market.runs = *options.runs;
  if (options.exit_prob) market.exit_prob = *options.exit_prob;
  if (options.bootstrap) market.bootstrap_replicates = *options.bootstrap;
  if (options.match) match = *options.match;
  if (match == "uniform") {
    market.match_weighting = MatchWeighting::Uniform;
  } else if (match == "g") {
    market.match_weighting = MatchWeighting::ProportionalToG;
  } else {
    throw RatingError(ErrorCode::InvalidArgument, "--match must be 'uniform' or 'g'");
  }
  market.seed = global.seed;
  market.validate();
  if (options.design_paths.empty()) throw RatingError(ErrorCode::InvalidArgument, "at least one --design is required");
  const PairMode mode = resolve_pair_mode(std::nullopt, config);

  const fs::path out = prepare_out(global);
  std::vector<std::pair<std::string, ErrorCurve>> curves;
  std::set<std::string> used;
  json meta = json::object();
  meta["config"] = {{"sellers", market.n_sellers},   {"buyers", market.n_buyers},
                    {"horizon", market.horizon},     {"runs", market.runs},
                    {"exit_prob", market.exit_prob}, {"match", match},
                    {"seed", market.seed},           {"bootstrap", market.bootstrap_replicates}};
  meta["designs"] = json::array();

  for (const auto& path : options.design_paths) {
    const Design design = load_design(path);
    std::string name = file_token(fs::path(path).stem().string());
    for (int suffix = 2; used.count(name); ++suffix) name = file_token(fs::path(path).stem().string()) + "_" + std::to_string(suffix);
    used.insert(name);

    const ErrorCurve curve = run_market(market, design);
    std::ostringstream csv_out;
    io::write_curve_csv(csv_out, curve);
    io::write_text_file((out / ("curve_" + name + ".csv")).string(), csv_out.str());

    const RateReport rate = learning_rate(design, mode);
    meta["designs"].push_back({{"name", name},
                               {"path", path},
                               {"curve", "curve_" + name + ".csv"},
                               {"rate", io::extended_real(rate.overall_rate)},
                               {"binding_pair", {rate.binding_pair.first, rate.binding_pair.second}}});
    const auto& last = curve.points.back();
    std::cout << name << ": rate " << format_rate(rate.overall_rate) << ", mean error at k=" << last.k << " "
              << csv::format_double(last.mean_error) << "\n";
    curves.emplace_back(name, curve);
  }
  std::ostringstream combined;
  io::write_curves_long_csv(combined, curves);
  io::write_text_file((out / "curves.csv").string(), combined.str());
  io::write_text_file((out / "simulate.json").string(), dump(meta));
  return kOk;
}

// ---------------------------------------------------------------------------

int cmd_oracle_check(const GlobalOptions& global, const OracleOptions& options) {
  const Design design = load_design(options.design_path);
  const oracle::SlopeCheck check = oracle::slope_check(design, options.k_max);
  const fs::path out = prepare_out(global);
  std::ostringstream csv_out;
  io::write_exact_curve_csv(csv_out, check.curve);
  io::write_text_file((out / "exact_curve.csv").string(), csv_out.str());

  const double last_slope = check.curve.points.back().slope;
  json doc = {{"k_max", options.k_max},
              {"rate", io::extended_real(check.rate)},
              {"slope_k_max", io::extended_real(last_slope)},
              {"deviation", io::extended_real(check.deviation)},
              {"deviation_at_10", io::extended_real(check.deviation_at_10)},
              {"tolerance", 0.2},
              {"passed", check.passed}};
  io::write_text_file((out / "oracle_check.json").string(), dump(doc));
  std::cout << "rate r = " << format_rate(check.rate) << ", slope at k=" << options.k_max << " = "
            << format_rate(last_slope) << ", |deviation| = " << format_rate(check.deviation) << "\n";
  std::cout << (check.passed ? "PASS" : "FAIL") << "\n";
  return check.passed ? kOk : kVerificationFailed;
}

// ---------------------------------------------------------------------------

int cmd_split(const GlobalOptions& global, const SplitOptions& options) {
  CellScales cells;
  if (global.config_path) cells = io::pipeline_config_from_json(load_config(global)).cells;
  const LoadResult loaded = load_ratings_file(options.ratings_path, cells);
  report_rejects(options.ratings_path, loaded);
  Rng rng = derive_stream(global.seed, 0);
  const auto [train, test] = split_raters(loaded.records, options.train_fraction, rng);

  const fs::path out = prepare_out(global);
  std::ostringstream train_csv, test_csv;
  write_ratings(train_csv, train, loaded.has_rehired, loaded.has_timestamp);
  write_ratings(test_csv, test, loaded.has_rehired, loaded.has_timestamp);
  io::write_text_file((out / "train.csv").string(), train_csv.str());
  io::write_text_file((out / "test.csv").string(), test_csv.str());
  std::cout << "train: " << train.size() << " ratings, test: " << test.size() << " ratings\n";
  return kOk;
}

}  // namespace ratingdesign::cli
