#include "ratingdesign/io.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "ratingdesign/csv.hpp"

namespace ratingdesign::io {

namespace {

[[noreturn]] void parse_error(const std::string& what) { throw RatingError(ErrorCode::ParseError, what); }

const json& require(const json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key)) parse_error(std::string("missing field '") + key + "'");
  return doc.at(key);
}

double number(const json& value, const std::string& where) {
  if (!value.is_number()) parse_error(where + " must be a number");
  return value.get<double>();
}

std::vector<double> number_array(const json& value, const std::string& where) {
  if (!value.is_array()) parse_error(where + " must be an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < value.size(); ++i) out.push_back(number(value[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

}  // namespace

json extended_real(double value) {
  if (std::isnan(value)) return nullptr;
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return value;
}

double extended_real_from(const json& value) {
  if (value.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (value.is_string()) {
    const auto s = value.get<std::string>();
    if (s == "inf") return kInfinity;
    if (s == "-inf") return -kInfinity;
    parse_error("unexpected string '" + s + "' for a number");
  }
  return number(value, "value");
}

Design design_from_json(const json& doc) {
  if (!doc.is_object()) parse_error("design document must be a JSON object");
  Design d;

  const auto& levels = require(doc, "levels");
  if (!levels.is_array()) parse_error("'levels' must be an array");
  for (const auto& l : levels) {
    if (!l.is_string()) parse_error("'levels' entries must be strings");
    d.scale.levels.push_back(l.get<std::string>());
  }

  const auto& types = require(doc, "types");
  if (!types.is_array()) parse_error("'types' must be an array");
  for (std::size_t i = 0; i < types.size(); ++i) {
    const auto& t = types[i];
    if (t.is_string()) {
      d.grid.types.push_back(t.get<std::string>());
      d.grid.match_rates.push_back(1.0);
      continue;
    }
    const auto& name = require(t, "name");
    if (!name.is_string()) parse_error("type name must be a string");
    d.grid.types.push_back(name.get<std::string>());
    d.grid.match_rates.push_back(t.contains("g") ? number(t.at("g"), "types[" + std::to_string(i) + "].g") : 1.0);
  }

  const auto& rho = require(doc, "rho");
  if (!rho.is_array()) parse_error("'rho' must be an array of rows");
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < rho.size(); ++i) rows.push_back(number_array(rho[i], "rho[" + std::to_string(i) + "]"));
  std::vector<std::vector<std::uint64_t>> counts;
  if (doc.contains("counts") && !doc.at("counts").is_null()) {
    for (const auto& r : doc.at("counts")) counts.push_back(r.get<std::vector<std::uint64_t>>());
  }
  d.joint = JointDistribution(rows, counts);

  if (doc.contains("phi") && !doc.at("phi").is_null()) {
    d.phi = normalize_scores(number_array(doc.at("phi"), "phi"));
  } else {
    d.phi = ScoreFunction::equally_spaced(d.scale.size(), static_cast<double>(d.scale.size()) - 1.0);
  }
  if (doc.contains("display_max")) d.phi.display_max = number(doc.at("display_max"), "display_max");
  return d;
}

json design_to_json(const Design& design) {
  json doc = json::object();
  doc["levels"] = design.scale.levels;
  json types = json::array();
  for (std::size_t i = 0; i < design.grid.size(); ++i) {
    types.push_back({{"name", design.grid.types[i]}, {"g", design.grid.match_rates[i]}});
  }
  doc["types"] = types;
  doc["rho"] = design.joint.rows();
  if (design.joint.has_counts()) doc["counts"] = design.joint.count_rows();
  doc["phi"] = design.phi.scores;
  doc["display_max"] = design.phi.display_max;
  return doc;
}

json rate_report_to_json(const RateReport& report, const Design& design) {
  json doc = json::object();
  doc["rate"] = extended_real(report.overall_rate);
  doc["binding_pair"] = {report.binding_pair.first, report.binding_pair.second};
  json pairs = json::array();
  for (const auto& p : report.pair_rates) {
    pairs.push_back({{"i", p.i},
                     {"j", p.j},
                     {"type_i", design.grid.types.at(p.i)},
                     {"type_j", design.grid.types.at(p.j)},
                     {"rate", extended_real(p.rate)},
                     {"a_star", extended_real(p.a_star)}});
  }
  doc["pairs"] = pairs;
  doc["phi"] = report.phi_used.scores;
  doc["phi_display"] = report.phi_used.displayed();
  return doc;
}

json optimization_to_json(const OptimizationResult& result, const RatingScale& scale, PairMode mode) {
  json doc = json::object();
  doc["levels"] = scale.levels;
  doc["pair_mode"] = to_string(mode);
  doc["baseline_rate"] = extended_real(result.baseline_rate);
  doc["best_rate"] = extended_real(result.best_rate);
  doc["improvement"] = extended_real(result.best_rate - result.baseline_rate);
  doc["baseline_phi"] = ScoreFunction::equally_spaced(scale.size()).scores;
  doc["best_phi"] = result.best_phi.scores;
  doc["best_phi_display"] = result.best_phi.with_display_max(5.0).displayed();
  doc["display_max"] = 5.0;
  json history = json::array();
  for (const auto& h : result.history) history.push_back({{"iteration", h.iteration}, {"rate", extended_real(h.rate)}});
  doc["history"] = history;
  doc["budget_used"] = result.budget_used;
  doc["polished"] = result.polished;
  return doc;
}

PairMode pair_mode_from_string(const std::string& text) {
  if (text == "all") return PairMode::All;
  if (text == "adjacent") return PairMode::Adjacent;
  throw RatingError(ErrorCode::InvalidArgument, "pair mode must be 'all' or 'adjacent', got '" + text + "'");
}

std::string to_string(PairMode mode) { return mode == PairMode::All ? "all" : "adjacent"; }

namespace {

void write_point(std::ostream& out, const CurvePoint& p) {
  out << p.k << ',' << csv::format_double(p.mean_error) << ',' << csv::format_double(p.std_error) << ','
      << csv::format_double(p.ci_lo) << ',' << csv::format_double(p.ci_hi) << '\n';
}

}  // namespace

void write_curve_csv(std::ostream& out, const ErrorCurve& curve) {
  out << "k,mean_error,stderr,ci_lo,ci_hi\n";
  for (const auto& p : curve.points) write_point(out, p);
}

void write_curves_long_csv(std::ostream& out, const std::vector<std::pair<std::string, ErrorCurve>>& curves) {
  out << "design,k,mean_error,stderr,ci_lo,ci_hi\n";
  for (const auto& [name, curve] : curves) {
    for (const auto& p : curve.points) {
      out << csv::escape(name) << ',';
      write_point(out, p);
    }
  }
}

void write_exact_curve_csv(std::ostream& out, const oracle::ExactCurve& curve) {
  out << "k,W,log_one_minus_W,slope\n";
  for (const auto& p : curve.points) {
    out << p.k << ',' << csv::format_double(p.W) << ',' << csv::format_double(p.log_one_minus_W) << ','
        << csv::format_double(p.slope) << '\n';
  }
}

PipelineConfig pipeline_config_from_json(const json& doc) {
  PipelineConfig cfg;
  const auto& cells = require(doc, "cells");
  if (!cells.is_array() || cells.empty()) parse_error("'cells' must be a non-empty array");
  for (const auto& c : cells) {
    const auto name = require(c, "name").get<std::string>();
    RatingScale scale{require(c, "levels").get<std::vector<std::string>>()};
    if (scale.size() < 2) parse_error("cell '" + name + "' needs at least two levels");
    if (!cfg.cells.emplace(name, std::move(scale)).second) parse_error("cell '" + name + "' declared twice");
    cfg.cell_order.push_back(name);
  }
  if (doc.contains("buckets")) {
    cfg.buckets.intervals.clear();
    const auto& buckets = doc.at("buckets");
    for (std::size_t i = 0; i < buckets.size(); ++i) {
      const auto& b = buckets[i];
      Bucket bucket;
      bucket.lo = number(require(b, "lo"), "buckets.lo");
      bucket.hi = number(require(b, "hi"), "buckets.hi");
      bucket.closed_hi = b.value("closed_hi", false);
      bucket.name = b.value("name", std::string{});
      bucket.match_rate = b.contains("g") ? number(b.at("g"), "buckets.g") : 1.0;
      cfg.buckets.intervals.push_back(bucket);
    }
    static const char* kDefaultNames[] = {"Low", "Medium", "High"};
    for (std::size_t i = 0; i < cfg.buckets.size(); ++i) {
      auto& name = cfg.buckets.intervals[i].name;
      if (name.empty()) name = cfg.buckets.size() == 3 ? kDefaultNames[i] : "type" + std::to_string(i);
    }
  }
  cfg.buckets.validate();
  if (doc.contains("min_other")) {
    const auto m = doc.at("min_other").get<long long>();
    if (m < 1) parse_error("'min_other' must be positive");
    cfg.min_other = static_cast<std::size_t>(m);
  }
  if (doc.contains("bootstrap")) {
    const auto b = doc.at("bootstrap").get<long long>();
    if (b < 100) parse_error("'bootstrap' must be at least 100");
    cfg.bootstrap_replicates = static_cast<std::size_t>(b);
  }
  return cfg;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RatingError(ErrorCode::IoError, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw RatingError(ErrorCode::ParseError, path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RatingError(ErrorCode::IoError, "cannot write '" + path + "'");
  out << contents;
  if (!out) throw RatingError(ErrorCode::IoError, "write failed for '" + path + "'");
}

}  // namespace ratingdesign::io
