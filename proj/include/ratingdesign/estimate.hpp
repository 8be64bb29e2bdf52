#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ratingdesign/core.hpp"
#include "ratingdesign/random.hpp"

namespace ratingdesign {

struct Timestamp {
  std::int64_t micros = 0;  // since the Unix epoch, UTC
  std::string text;         // as written in the source file
};

// Parses ISO-8601 date or date-time with optional fraction and Z/+HH:MM offset.
std::optional<Timestamp> parse_timestamp(std::string_view text);

struct RatingRecord {
  std::string client_id;
  std::string seller_id;
  std::string cell;
  std::size_t level = 0;
  std::optional<bool> rehired;
  std::optional<Timestamp> timestamp;
};

using CellScales = std::map<std::string, RatingScale>;

struct RejectedRow {
  std::size_t line = 0;  // 1-based line in the source, header is line 1
  ErrorCode reason = ErrorCode::MalformedRow;
  std::string detail;
};

struct LoadResult {
  std::vector<RatingRecord> records;
  std::vector<RejectedRow> rejects;
  bool has_rehired = false;
  bool has_timestamp = false;
};

// Reads `client_id,seller_id,cell,level[,rehired][,timestamp]`. A bad header
// throws MalformedHeader; bad rows are reported and skipped. When `cells` is
// non-empty, rows naming an undeclared cell are rejected with UnknownCell and
// levels are checked against the declared scale.
LoadResult load_ratings(std::istream& in, const CellScales& cells = {});

void write_ratings(std::ostream& out, std::span<const RatingRecord> records, bool with_rehired, bool with_timestamp);

// ---------------------------------------------------------------------------
// Quality estimation

struct Bucket {
  double lo = 0.0;
  double hi = 0.0;
  bool closed_hi = false;
  std::string name;
  double match_rate = 1.0;

  bool contains(double x) const noexcept { return x >= lo && (closed_hi ? x <= hi : x < hi); }
};

struct QualityBuckets {
  std::vector<Bucket> intervals;

  std::size_t size() const noexcept { return intervals.size(); }
  // Throws BucketError unless intervals are non-empty, disjoint and ascending.
  void validate() const;
  QualityGrid grid() const;

  // Low [0,2), Medium [2.5,3.5), High [4.5,5].
  static QualityBuckets standard();
  // Low [0,2), Medium [2,4), High [4,5].
  static QualityBuckets contiguous();
};

std::optional<std::size_t> bucket_quality(double average, const QualityBuckets& buckets);

// Average level index of each seller's ratings outside `target_cell`; sellers
// with fewer than `min_other` such ratings are omitted.
std::map<std::string, double> estimate_quality(std::span<const RatingRecord> records, const std::string& target_cell,
                                               std::size_t min_other = 3);

// Counts of target-cell ratings per (type, level) for sellers with a known type.
std::vector<std::vector<std::uint64_t>> count_joint(std::span<const RatingRecord> records, const std::string& cell,
                                                    std::size_t levels,
                                                    const std::map<std::string, std::size_t>& seller_type,
                                                    std::size_t types);

// count_joint followed by row normalization; throws EmptyBucket naming the first empty type.
JointDistribution tabulate_joint(std::span<const RatingRecord> records, const std::string& cell, std::size_t levels,
                                 const std::map<std::string, std::size_t>& seller_type, std::size_t types);

struct JointEstimate {
  JointDistribution joint;
  std::map<std::string, std::size_t> seller_type;
  std::vector<std::size_t> sellers_per_type;
  std::size_t sellers_with_estimate = 0;
  std::size_t sellers_in_gaps = 0;
  std::size_t records_used = 0;
};

JointEstimate estimate_joint(std::span<const RatingRecord> records, const std::string& target_cell,
                             const QualityBuckets& buckets, std::size_t min_other, std::size_t levels);

struct Histogram {
  std::vector<std::uint64_t> counts;
  std::vector<double> proportions;
};

// Throws EmptyCell when the cell has no records.
Histogram marginal_distribution(std::span<const RatingRecord> records, const std::string& cell, std::size_t levels);

struct RehireTable {
  std::vector<std::uint64_t> jobs;
  std::vector<std::uint64_t> rehires;
  double overall_rate = 0.0;
  std::vector<std::optional<double>> normalized;  // nullopt where a level has no first jobs
};

// Uses each (client, seller) pair's first job in the cell: earliest timestamp
// when present, otherwise file order. Throws EmptyCell when no record carries a
// rehire flag and NoRehires when the overall rate is zero.
RehireTable rehire_rates(std::span<const RatingRecord> records, const std::string& cell, std::size_t levels);

// ---------------------------------------------------------------------------
// Client-level bootstrap

using StatisticFn = std::function<std::vector<std::optional<double>>(std::span<const RatingRecord>)>;

struct Interval {
  std::optional<double> estimate;
  std::optional<double> lower;
  std::optional<double> upper;
  std::size_t replicates = 0;  // replicates where the entry was defined
};

enum class StatisticKind { JointCellProbability, MarginalProportion, RehireRate };

struct StatisticSpec {
  StatisticKind kind = StatisticKind::MarginalProportion;
  std::string cell;
  std::size_t levels = 0;
  QualityBuckets buckets;  // JointCellProbability only
  std::size_t min_other = 3;
};

// Joint entries are laid out row-major (type, level).
StatisticFn make_statistic(const StatisticSpec& spec);

// Percentile intervals from resampling clients with replacement; replicate b
// draws from derive_stream(seed, b). Intervals are widened to contain the
// point estimate. Requires B >= 100 and 0 < confidence < 1.
std::vector<Interval> bootstrap_ci(std::span<const RatingRecord> records, const StatisticFn& statistic,
                                   std::size_t replicates, double confidence, std::uint64_t seed);

std::vector<Interval> bootstrap_ci(std::span<const RatingRecord> records, const StatisticSpec& statistic,
                                   std::size_t replicates, double confidence, std::uint64_t seed);

// Partition at the client level; round(train_fraction * clients) clients go to train.
std::pair<std::vector<RatingRecord>, std::vector<RatingRecord>> split_raters(std::span<const RatingRecord> records,
                                                                             double train_fraction, Rng& rng);

}  // namespace ratingdesign
