#pragma once

// File formats shared by the library and the command-line tool.

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "ratingdesign/core.hpp"
#include "ratingdesign/estimate.hpp"
#include "ratingdesign/ldrate.hpp"
#include "ratingdesign/oracle.hpp"
#include "ratingdesign/scoreopt.hpp"
#include "ratingdesign/simulate.hpp"

namespace ratingdesign::io {

using nlohmann::json;

// Design document: {"levels": [...], "types": [{"name", "g"}], "rho": [[...]],
// "phi": [...] (optional, equally spaced by default; normalized on read),
// "counts": [[...]] (optional)}. Unknown keys are ignored. Throws ParseError.
Design design_from_json(const json& doc);
json design_to_json(const Design& design);

// +inf is written as the string "inf", NaN as null.
json extended_real(double value);
double extended_real_from(const json& value);

json rate_report_to_json(const RateReport& report, const Design& design);
json optimization_to_json(const OptimizationResult& result, const RatingScale& scale, PairMode mode);

PairMode pair_mode_from_string(const std::string& text);
std::string to_string(PairMode mode);

// `k,mean_error,stderr,ci_lo,ci_hi`
void write_curve_csv(std::ostream& out, const ErrorCurve& curve);
// `design,k,mean_error,stderr,ci_lo,ci_hi`
void write_curves_long_csv(std::ostream& out, const std::vector<std::pair<std::string, ErrorCurve>>& curves);
// `k,W,log_one_minus_W,slope`
void write_exact_curve_csv(std::ostream& out, const oracle::ExactCurve& curve);

// Pipeline configuration: {"cells": [{"name", "levels"}], "buckets": [{"lo", "hi",
// "closed_hi", "name"?, "g"?}], "min_other": 3}. Missing buckets fall back to the
// standard thresholds.
struct PipelineConfig {
  CellScales cells;
  std::vector<std::string> cell_order;
  QualityBuckets buckets = QualityBuckets::standard();
  std::size_t min_other = 3;
  std::size_t bootstrap_replicates = 1000;
};

PipelineConfig pipeline_config_from_json(const json& doc);

json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& contents);

}  // namespace ratingdesign::io
