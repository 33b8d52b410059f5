#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "botscope/common.hpp"
#include "botscope/event.hpp"
#include "botscope/stats.hpp"

namespace botscope {

/// X: one cascade per (influencer, object). The influencer is the poster of
/// the object or the target of its retweets; `count` is the number of
/// retweets. Reddit: one cascade per parent id, owned by the parent's author
/// (or the parent id itself when the author is unknown); `count` is the
/// number of replies.
struct Cascade {
  std::string influencer;
  std::string object_id;
  std::uint64_t count = 0;
  std::vector<std::string> spreaders;  // distinct, sorted
  std::int64_t first_ts = 0;
  std::int64_t last_ts = 0;

  std::uint64_t size() const { return count == 0 ? 1 : count; }
  bool operator==(const Cascade&) const = default;
};

struct ActorValue {
  std::string actor;
  double value = 0.0;
};

struct CascadeSet {
  Platform platform = Platform::X;
  std::vector<Cascade> cascades;  // sorted by (influencer, object_id)
  // X: per influencer, size = sum of cascade sizes, depth = distinct
  // retweeters. Reddit: size = each actor's own posts and comments, depth =
  // replies per parent id (one entry per cascade, keyed by its owner).
  std::vector<ActorValue> sizes;
  std::vector<ActorValue> depths;
};

// Only events of `platform` are considered. Retweets of an influencer who
// never posts the object still form a cascade.
CascadeSet extract_cascades(const EventLog& log, Platform platform);

struct CcdfPoint {
  double x = 0.0;
  double survival = 0.0;  // P(X >= x)
  bool operator==(const CcdfPoint&) const = default;
};

// Ascending distinct support; the first point has survival 1. Throws Error on
// empty input.
std::vector<CcdfPoint> ccdf(std::span<const double> values);

enum class CascadeMetric { Size, Depth };
std::string_view to_string(CascadeMetric m);
std::optional<CascadeMetric> parse_cascade_metric(std::string_view s);

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double median = 0.0;
  double max = 0.0;
};

Summary summarize(std::span<const double> values);

struct ClassDistribution {
  UserClass cls = UserClass::Unknown;
  CascadeMetric metric = CascadeMetric::Size;
  std::vector<double> values;      // raw, sorted ascending
  std::vector<double> log_values;  // log10 of the positive raw values
  Summary raw;
  Summary log10;
  std::size_t zeros = 0;  // raw zeros, left out of the log scale
};

struct PairwiseTest {
  UserClass a = UserClass::Unknown;
  UserClass b = UserClass::Unknown;
  CascadeMetric metric = CascadeMetric::Size;
  std::optional<stats::TestResult> welch;  // absent when degenerate, see note
  stats::TestResult ks;
  std::string note;
};

struct DistributionReport {
  std::vector<ClassDistribution> distributions;
  std::vector<PairwiseTest> tests;  // on the log10 scale
  std::vector<std::string> flags;
};

// Distributions per class (UNKNOWN included when present) for size and
// depth; pairwise Welch and K-S over the four known classes. Classes with
// fewer than 2 log-scale observations are left out of the tests and flagged.
DistributionReport class_distribution_report(const CascadeSet& cascades, const ClassMap& classes);

std::string render_summary_csv(const DistributionReport& report);
std::string render_tests_csv(const DistributionReport& report);
std::string render_ccdf_csv(std::span<const CcdfPoint> points);

}  // namespace botscope
