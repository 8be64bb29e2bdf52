#include "ratingdesign/estimate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_map>

#include "ratingdesign/csv.hpp"

namespace ratingdesign {

// ---------------------------------------------------------------------------
// Timestamps

namespace {

std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

bool take_digits(std::string_view s, std::size_t& pos, std::size_t count, int& out) {
  if (pos + count > s.size()) return false;
  int value = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    value = value * 10 + (c - '0');
  }
  pos += count;
  out = value;
  return true;
}

bool expect(std::string_view s, std::size_t& pos, char c) {
  if (pos < s.size() && s[pos] == c) {
    ++pos;
    return true;
  }
  return false;
}

}  // namespace

std::optional<Timestamp> parse_timestamp(std::string_view text) {
  std::size_t pos = 0;
  int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0;
  std::int64_t micros = 0;
  if (!take_digits(text, pos, 4, year) || !expect(text, pos, '-') || !take_digits(text, pos, 2, month) ||
      !expect(text, pos, '-') || !take_digits(text, pos, 2, day)) {
    return std::nullopt;
  }
  if (month < 1 || month > 12 || day < 1 || day > 31) return std::nullopt;
  std::int64_t offset_minutes = 0;
  if (pos < text.size() && (text[pos] == 'T' || text[pos] == ' ')) {
    ++pos;
    if (!take_digits(text, pos, 2, hour) || !expect(text, pos, ':') || !take_digits(text, pos, 2, minute)) {
      return std::nullopt;
    }
    if (expect(text, pos, ':')) {
      if (!take_digits(text, pos, 2, second)) return std::nullopt;
      if (expect(text, pos, '.')) {
        std::int64_t scale = 100000;
        std::size_t digits = 0;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
          if (scale > 0) micros += (text[pos] - '0') * scale;
          scale /= 10;
          ++pos;
          ++digits;
        }
        if (digits == 0) return std::nullopt;
      }
    }
    if (hour > 23 || minute > 59 || second > 60) return std::nullopt;
    if (expect(text, pos, 'Z')) {
    } else if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
      const int sign = text[pos] == '-' ? -1 : 1;
      ++pos;
      int oh = 0, om = 0;
      if (!take_digits(text, pos, 2, oh)) return std::nullopt;
      expect(text, pos, ':');
      if (!take_digits(text, pos, 2, om)) return std::nullopt;
      offset_minutes = sign * (oh * 60 + om);
    }
  }
  if (pos != text.size()) return std::nullopt;
  const std::int64_t days = days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day));
  const std::int64_t seconds = days * 86400 + hour * 3600 + minute * 60 + second - offset_minutes * 60;
  return Timestamp{seconds * 1000000 + micros, std::string(text)};
}

// ---------------------------------------------------------------------------
// CSV ingestion

namespace {

enum Column { kClient, kSeller, kCell, kLevel, kRehired, kTimestamp, kColumnCount };

constexpr std::string_view kColumnNames[kColumnCount] = {"client_id", "seller_id", "cell",
                                                         "level",     "rehired",   "timestamp"};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return std::string(s.substr(first, last - first + 1));
}

}  // namespace

LoadResult load_ratings(std::istream& in, const CellScales& cells) {
  LoadResult result;
  std::string line;
  if (!csv::read_line(in, line)) throw RatingError(ErrorCode::MalformedHeader, "input is empty");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  auto header = csv::split_line(line);
  if (!header) throw RatingError(ErrorCode::MalformedHeader, "unterminated quote in header");
  int position[kColumnCount];
  std::fill(std::begin(position), std::end(position), -1);
  for (std::size_t i = 0; i < header->size(); ++i) {
    const std::string name = trim((*header)[i]);
    const auto it = std::find(std::begin(kColumnNames), std::end(kColumnNames), name);
    if (it == std::end(kColumnNames)) throw RatingError(ErrorCode::MalformedHeader, "unknown column '" + name + "'");
    const auto col = static_cast<std::size_t>(it - std::begin(kColumnNames));
    if (position[col] >= 0) throw RatingError(ErrorCode::MalformedHeader, "duplicate column '" + name + "'");
    position[col] = static_cast<int>(i);
  }
  for (int col = kClient; col <= kLevel; ++col) {
    if (position[col] < 0) {
      throw RatingError(ErrorCode::MalformedHeader, "missing required column '" + std::string(kColumnNames[col]) + "'");
    }
  }
  result.has_rehired = position[kRehired] >= 0;
  result.has_timestamp = position[kTimestamp] >= 0;

  std::size_t line_no = 1;
  while (csv::read_line(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto reject = [&](ErrorCode code, std::string detail) {
      result.rejects.push_back({line_no, code, std::move(detail)});
    };
    auto fields = csv::split_line(line);
    if (!fields) {
      reject(ErrorCode::MalformedRow, "unterminated quote");
      continue;
    }
    if (fields->size() != header->size()) {
      reject(ErrorCode::MalformedRow, "expected " + std::to_string(header->size()) + " fields, found " +
                                          std::to_string(fields->size()));
      continue;
    }
    auto field = [&](Column c) { return trim((*fields)[static_cast<std::size_t>(position[c])]); };

    RatingRecord rec;
    rec.client_id = field(kClient);
    rec.seller_id = field(kSeller);
    rec.cell = field(kCell);
    if (rec.client_id.empty() || rec.seller_id.empty() || rec.cell.empty()) {
      reject(ErrorCode::MalformedRow, "empty identifier");
      continue;
    }
    const std::string level_text = field(kLevel);
    long long level = 0;
    const auto [ptr, ec] = std::from_chars(level_text.data(), level_text.data() + level_text.size(), level);
    if (ec != std::errc{} || ptr != level_text.data() + level_text.size()) {
      reject(ErrorCode::MalformedRow, "level '" + level_text + "' is not an integer");
      continue;
    }
    if (level < 0) {
      reject(ErrorCode::OutOfRangeLevel, "level " + level_text + " is negative");
      continue;
    }
    rec.level = static_cast<std::size_t>(level);
    if (!cells.empty()) {
      const auto it = cells.find(rec.cell);
      if (it == cells.end()) {
        reject(ErrorCode::UnknownCell, "cell '" + rec.cell + "' is not declared");
        continue;
      }
      if (rec.level >= it->second.size()) {
        reject(ErrorCode::OutOfRangeLevel, "level " + level_text + " outside " + std::to_string(it->second.size()) +
                                               "-level cell '" + rec.cell + "'");
        continue;
      }
    }
    if (result.has_rehired) {
      const std::string flag = field(kRehired);
      if (flag == "1") {
        rec.rehired = true;
      } else if (flag == "0") {
        rec.rehired = false;
      } else if (!flag.empty()) {
        reject(ErrorCode::MalformedRow, "rehired must be 0 or 1, got '" + flag + "'");
        continue;
      }
    }
    if (result.has_timestamp) {
      const std::string ts = field(kTimestamp);
      if (!ts.empty()) {
        rec.timestamp = parse_timestamp(ts);
        if (!rec.timestamp) {
          reject(ErrorCode::MalformedRow, "invalid timestamp '" + ts + "'");
          continue;
        }
      }
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

void write_ratings(std::ostream& out, std::span<const RatingRecord> records, bool with_rehired, bool with_timestamp) {
  out << "client_id,seller_id,cell,level";
  if (with_rehired) out << ",rehired";
  if (with_timestamp) out << ",timestamp";
  out << '\n';
  for (const auto& r : records) {
    out << csv::escape(r.client_id) << ',' << csv::escape(r.seller_id) << ',' << csv::escape(r.cell) << ','
        << r.level;
    if (with_rehired) out << ',' << (r.rehired ? (*r.rehired ? "1" : "0") : "");
    if (with_timestamp) out << ',' << (r.timestamp ? csv::escape(r.timestamp->text) : "");
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Buckets and quality

void QualityBuckets::validate() const {
  if (intervals.empty()) throw RatingError(ErrorCode::BucketError, "no quality buckets");
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    const auto& b = intervals[i];
    if (!(b.lo < b.hi) && !(b.closed_hi && b.lo == b.hi)) {
      throw RatingError(ErrorCode::BucketError, "bucket " + std::to_string(i) + " is empty");
    }
    if (i > 0) {
      const auto& prev = intervals[i - 1];
      const bool overlaps = prev.closed_hi ? b.lo <= prev.hi : b.lo < prev.hi;
      if (overlaps) throw RatingError(ErrorCode::BucketError, "bucket " + std::to_string(i) + " overlaps its predecessor");
    }
  }
}

QualityGrid QualityBuckets::grid() const {
  QualityGrid g;
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    g.types.push_back(intervals[i].name.empty() ? "type" + std::to_string(i) : intervals[i].name);
    g.match_rates.push_back(intervals[i].match_rate);
  }
  return g;
}

QualityBuckets QualityBuckets::standard() {
  return {{{0.0, 2.0, false, "Low", 1.0}, {2.5, 3.5, false, "Medium", 1.0}, {4.5, 5.0, true, "High", 1.0}}};
}

QualityBuckets QualityBuckets::contiguous() {
  return {{{0.0, 2.0, false, "Low", 1.0}, {2.0, 4.0, false, "Medium", 1.0}, {4.0, 5.0, true, "High", 1.0}}};
}

std::optional<std::size_t> bucket_quality(double average, const QualityBuckets& buckets) {
  for (std::size_t i = 0; i < buckets.size(); ++i) {
    if (buckets.intervals[i].contains(average)) return i;
  }
  return std::nullopt;
}

std::map<std::string, double> estimate_quality(std::span<const RatingRecord> records, const std::string& target_cell,
                                               std::size_t min_other) {
  std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> sums;  // seller -> (count, level sum)
  for (const auto& r : records) {
    if (r.cell == target_cell) continue;
    auto& s = sums[r.seller_id];
    ++s.first;
    s.second += r.level;
  }
  std::map<std::string, double> out;
  for (const auto& [seller, s] : sums) {
    if (s.first >= min_other) out.emplace(seller, static_cast<double>(s.second) / static_cast<double>(s.first));
  }
  return out;
}

std::vector<std::vector<std::uint64_t>> count_joint(std::span<const RatingRecord> records, const std::string& cell,
                                                    std::size_t levels,
                                                    const std::map<std::string, std::size_t>& seller_type,
                                                    std::size_t types) {
  std::vector<std::vector<std::uint64_t>> counts(types, std::vector<std::uint64_t>(levels, 0));
  for (const auto& r : records) {
    if (r.cell != cell) continue;
    const auto it = seller_type.find(r.seller_id);
    if (it == seller_type.end()) continue;
    if (r.level >= levels) {
      throw RatingError(ErrorCode::OutOfRangeLevel, "level " + std::to_string(r.level) + " in cell '" + cell + "'");
    }
    ++counts[it->second][r.level];
  }
  return counts;
}

JointDistribution tabulate_joint(std::span<const RatingRecord> records, const std::string& cell, std::size_t levels,
                                 const std::map<std::string, std::size_t>& seller_type, std::size_t types) {
  return JointDistribution::from_counts(count_joint(records, cell, levels, seller_type, types));
}

JointEstimate estimate_joint(std::span<const RatingRecord> records, const std::string& target_cell,
                             const QualityBuckets& buckets, std::size_t min_other, std::size_t levels) {
  buckets.validate();
  JointEstimate est;
  const auto quality = estimate_quality(records, target_cell, min_other);
  est.sellers_with_estimate = quality.size();
  for (const auto& [seller, avg] : quality) {
    if (auto type = bucket_quality(avg, buckets)) {
      est.seller_type.emplace(seller, *type);
    } else {
      ++est.sellers_in_gaps;
    }
  }
  auto counts = count_joint(records, target_cell, levels, est.seller_type, buckets.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    std::uint64_t total = 0;
    for (auto c : counts[i]) total += c;
    if (total == 0) {
      const auto& name = buckets.intervals[i].name;
      throw RatingError(ErrorCode::EmptyBucket, "cell '" + target_cell + "' has no ratings for type " +
                                                    (name.empty() ? std::to_string(i) : name));
    }
    est.records_used += total;
  }
  est.sellers_per_type.assign(buckets.size(), 0);
  std::set<std::string> rated;
  for (const auto& r : records) {
    if (r.cell == target_cell && est.seller_type.count(r.seller_id) && rated.insert(r.seller_id).second) {
      ++est.sellers_per_type[est.seller_type.at(r.seller_id)];
    }
  }
  est.joint = JointDistribution::from_counts(counts);
  return est;
}

Histogram marginal_distribution(std::span<const RatingRecord> records, const std::string& cell, std::size_t levels) {
  Histogram h;
  h.counts.assign(levels, 0);
  std::uint64_t total = 0;
  for (const auto& r : records) {
    if (r.cell != cell) continue;
    if (r.level >= levels) {
      throw RatingError(ErrorCode::OutOfRangeLevel, "level " + std::to_string(r.level) + " in cell '" + cell + "'");
    }
    ++h.counts[r.level];
    ++total;
  }
  if (total == 0) throw RatingError(ErrorCode::EmptyCell, "cell '" + cell + "' has no ratings");
  h.proportions.resize(levels);
  for (std::size_t j = 0; j < levels; ++j) {
    h.proportions[j] = static_cast<double>(h.counts[j]) / static_cast<double>(total);
  }
  return h;
}

RehireTable rehire_rates(std::span<const RatingRecord> records, const std::string& cell, std::size_t levels) {
  // First job per (client, seller): earliest timestamp if any record of the
  // pair carries one, else first in file order.
  std::map<std::pair<std::string, std::string>, std::size_t> first;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.cell != cell || !r.rehired) continue;
    auto [it, inserted] = first.try_emplace({r.client_id, r.seller_id}, i);
    if (inserted) continue;
    const auto& current = records[it->second];
    if (r.timestamp && (!current.timestamp || r.timestamp->micros < current.timestamp->micros)) it->second = i;
  }
  if (first.empty()) throw RatingError(ErrorCode::EmptyCell, "cell '" + cell + "' has no rehire flags");

  RehireTable t;
  t.jobs.assign(levels, 0);
  t.rehires.assign(levels, 0);
  std::uint64_t total_jobs = 0;
  std::uint64_t total_rehires = 0;
  for (const auto& [key, index] : first) {
    const auto& r = records[index];
    if (r.level >= levels) {
      throw RatingError(ErrorCode::OutOfRangeLevel, "level " + std::to_string(r.level) + " in cell '" + cell + "'");
    }
    ++t.jobs[r.level];
    ++total_jobs;
    if (*r.rehired) {
      ++t.rehires[r.level];
      ++total_rehires;
    }
  }
  if (total_rehires == 0) throw RatingError(ErrorCode::NoRehires, "cell '" + cell + "' has no rehires");
  t.overall_rate = static_cast<double>(total_rehires) / static_cast<double>(total_jobs);
  t.normalized.resize(levels);
  for (std::size_t j = 0; j < levels; ++j) {
    if (t.jobs[j] == 0) continue;
    const double rate = static_cast<double>(t.rehires[j]) / static_cast<double>(t.jobs[j]);
    t.normalized[j] = rate / t.overall_rate;
  }
  return t;
}

// ---------------------------------------------------------------------------
// Bootstrap

StatisticFn make_statistic(const StatisticSpec& spec) {
  switch (spec.kind) {
    case StatisticKind::MarginalProportion:
      return [spec](std::span<const RatingRecord> recs) {
        std::vector<std::optional<double>> out(spec.levels);
        try {
          const auto h = marginal_distribution(recs, spec.cell, spec.levels);
          for (std::size_t j = 0; j < spec.levels; ++j) out[j] = h.proportions[j];
        } catch (const RatingError& e) {
          if (e.code() != ErrorCode::EmptyCell) throw;
        }
        return out;
      };
    case StatisticKind::RehireRate:
      return [spec](std::span<const RatingRecord> recs) {
        std::vector<std::optional<double>> out(spec.levels);
        try {
          out = rehire_rates(recs, spec.cell, spec.levels).normalized;
        } catch (const RatingError& e) {
          if (e.code() != ErrorCode::EmptyCell && e.code() != ErrorCode::NoRehires) throw;
        }
        return out;
      };
    case StatisticKind::JointCellProbability:
      spec.buckets.validate();
      return [spec](std::span<const RatingRecord> recs) {
        const std::size_t M = spec.buckets.size();
        std::vector<std::optional<double>> out(M * spec.levels);
        std::map<std::string, std::size_t> seller_type;
        for (const auto& [seller, avg] : estimate_quality(recs, spec.cell, spec.min_other)) {
          if (auto type = bucket_quality(avg, spec.buckets)) seller_type.emplace(seller, *type);
        }
        const auto counts = count_joint(recs, spec.cell, spec.levels, seller_type, M);
        for (std::size_t i = 0; i < M; ++i) {
          std::uint64_t total = 0;
          for (auto c : counts[i]) total += c;
          if (total == 0) continue;
          for (std::size_t j = 0; j < spec.levels; ++j) {
            out[i * spec.levels + j] = static_cast<double>(counts[i][j]) / static_cast<double>(total);
          }
        }
        return out;
      };
  }
  throw RatingError(ErrorCode::InvalidArgument, "unknown statistic");
}

namespace {

double percentile(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lower = static_cast<std::size_t>(std::floor(pos));
  const std::size_t upper = std::min(lower + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lower);
  return sorted[lower] + frac * (sorted[upper] - sorted[lower]);
}

}  // namespace

std::vector<Interval> bootstrap_ci(std::span<const RatingRecord> records, const StatisticFn& statistic,
                                   std::size_t replicates, double confidence, std::uint64_t seed) {
  if (replicates < 100) throw RatingError(ErrorCode::InvalidArgument, "bootstrap needs at least 100 replicates");
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw RatingError(ErrorCode::InvalidArgument, "confidence must lie in (0,1)");
  }

  std::vector<std::vector<std::size_t>> by_client;
  std::unordered_map<std::string, std::size_t> client_index;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto [it, inserted] = client_index.try_emplace(records[i].client_id, by_client.size());
    if (inserted) by_client.emplace_back();
    by_client[it->second].push_back(i);
  }

  const auto point = statistic(records);
  std::vector<std::vector<double>> draws(point.size());
  if (!by_client.empty()) {
    std::vector<RatingRecord> sample;
    for (std::size_t b = 0; b < replicates; ++b) {
      Rng rng = derive_stream(seed, b);
      std::uniform_int_distribution<std::size_t> pick(0, by_client.size() - 1);
      sample.clear();
      for (std::size_t n = 0; n < by_client.size(); ++n) {
        const std::size_t c = pick(rng);
        // Relabel so a client drawn twice counts as two distinct clients.
        const std::string label = records[by_client[c].front()].client_id + "#" + std::to_string(n);
        for (std::size_t idx : by_client[c]) {
          sample.push_back(records[idx]);
          sample.back().client_id = label;
        }
      }
      const auto value = statistic(sample);
      if (value.size() != point.size()) {
        throw RatingError(ErrorCode::DimensionMismatch, "statistic changed length across replicates");
      }
      for (std::size_t e = 0; e < value.size(); ++e) {
        if (value[e]) draws[e].push_back(*value[e]);
      }
    }
  }

  const double alpha = 1.0 - confidence;
  std::vector<Interval> out(point.size());
  for (std::size_t e = 0; e < point.size(); ++e) {
    auto& iv = out[e];
    iv.estimate = point[e];
    iv.replicates = draws[e].size();
    if (!point[e] || draws[e].empty()) continue;
    std::sort(draws[e].begin(), draws[e].end());
    iv.lower = std::min(percentile(draws[e], alpha / 2.0), *point[e]);
    iv.upper = std::max(percentile(draws[e], 1.0 - alpha / 2.0), *point[e]);
  }
  return out;
}

std::vector<Interval> bootstrap_ci(std::span<const RatingRecord> records, const StatisticSpec& statistic,
                                   std::size_t replicates, double confidence, std::uint64_t seed) {
  return bootstrap_ci(records, make_statistic(statistic), replicates, confidence, seed);
}

std::pair<std::vector<RatingRecord>, std::vector<RatingRecord>> split_raters(std::span<const RatingRecord> records,
                                                                             double train_fraction, Rng& rng) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw RatingError(ErrorCode::InvalidArgument, "train fraction must lie in (0,1)");
  }
  std::vector<std::string> clients;
  std::unordered_map<std::string, std::size_t> seen;
  for (const auto& r : records) {
    if (seen.try_emplace(r.client_id, clients.size()).second) clients.push_back(r.client_id);
  }
  std::vector<std::size_t> order(clients.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(clients.size())));
  std::vector<char> in_train(clients.size(), 0);
  for (std::size_t i = 0; i < n_train && i < order.size(); ++i) in_train[order[i]] = 1;

  std::pair<std::vector<RatingRecord>, std::vector<RatingRecord>> out;
  for (const auto& r : records) {
    (in_train[seen.at(r.client_id)] ? out.first : out.second).push_back(r);
  }
  return out;
}

}  // namespace ratingdesign
