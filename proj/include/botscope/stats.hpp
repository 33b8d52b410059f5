#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "botscope/common.hpp"
#include "botscope/event.hpp"

namespace botscope::stats {

class StatsError : public Error {
 public:
  using Error::Error;
};

struct TestResult {
  std::string method;
  double statistic = 0.0;
  double p_value = 1.0;  // never exactly 0; underflow is clamped to the smallest normal double
  double df = 0.0;
  std::optional<double> df2;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  std::string note;
};

// Two-sided Welch unequal-variance t-test with Welch-Satterthwaite df.
// Both samples need >= 2 values. Zero variance in both samples yields t = 0,
// p = 1 when the means agree and throws StatsError("degenerate samples")
// otherwise.
TestResult welch_t(std::span<const double> a, std::span<const double> b);

// Two-sample Kolmogorov-Smirnov. D = sup |ECDF_a - ECDF_b|; p from the
// asymptotic Kolmogorov distribution at effective n = n1 n2 / (n1 + n2) with
// Stephens' small-sample correction. Samples smaller than 8 get a note.
TestResult ks_test(std::span<const double> a, std::span<const double> b);

// Survival function of the limiting Kolmogorov distribution.
double kolmogorov_sf(double lambda);

double pearson_r(std::span<const double> a, std::span<const double> b);

struct GrangerLag {
  std::size_t lag = 0;
  double f = 0.0;
  double p_value = 1.0;
  double df_num = 0.0;
  double df_den = 0.0;
  bool causes = false;  // p < alpha
};

struct GrangerResult {
  std::string cause;
  std::string effect;
  double alpha = 0.05;
  std::vector<GrangerLag> lags;  // lag 1 .. maxlag
};

/// Does `x` Granger-cause `y`? For each lag L the regressions use the
/// observations t = L .. n-1: restricted y_t ~ [1, y_{t-1..t-L}], unrestricted
/// adds x_{t-1..t-L}; with m = n - L usable observations,
/// F = ((SSR_r - SSR_u) / L) / (SSR_u / (m - 2L - 1)).
/// Requires equal lengths > 3 * maxlag. Throws StatsError naming the lag when
/// a design matrix is rank deficient or the unrestricted fit is exact.
GrangerResult granger_test(std::span<const double> x, std::span<const double> y,
                           std::size_t maxlag = 5, double alpha = 0.05,
                           std::string cause_id = "x", std::string effect_id = "y");

std::vector<double> first_difference(std::span<const double> series);

enum class SeriesMetric { UniqueUsers, CascadeSize, CascadeDepth };

std::string_view to_string(SeriesMetric m);
std::optional<SeriesMetric> parse_series_metric(std::string_view s);

struct DailySeries {
  std::string community;                 // empty = all communities
  std::optional<UserClass> user_class;   // nullopt = all classes
  SeriesMetric metric = SeriesMetric::UniqueUsers;
  std::int64_t first_day = 0;            // days since epoch (UTC)
  std::vector<double> counts;            // one per day, gaps filled with 0
  std::vector<std::string> warnings;

  std::size_t size() const { return counts.size(); }
};

/// UTC day bins spanning the first to the last event of the whole log, so
/// series of different communities and classes line up day for day.
///
/// UNIQUE_USERS counts distinct acting users of the class per day.
/// CASCADE_SIZE counts, per day, the retweets (X) received by influencers of
/// the class plus their posts whose cascade never gets retweeted; for Reddit
/// it counts the class's own comments and posts. CASCADE_DEPTH counts distinct
/// (influencer, retweeter) pairs per day for X and replies received by the
/// class for Reddit. Every metric partitions across classes.
DailySeries build_daily_series(const EventLog& log, const ClassMap& classes, SeriesMetric metric,
                               std::string_view community = {},
                               std::optional<UserClass> user_class = std::nullopt);

std::string iso_date(std::int64_t day);

}  // namespace botscope::stats
