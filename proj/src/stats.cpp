#include "botscope/stats.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_set>

namespace botscope::stats {
namespace {

double clamp_p(double p) {
  if (std::isnan(p)) return 1.0;
  return std::clamp(p, std::numeric_limits<double>::min(), 1.0);
}

double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v, double m) {
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace

TestResult welch_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw StatsError("welch_t: each sample needs at least 2 values");
  TestResult r;
  r.method = "welch_t";
  r.n1 = a.size();
  r.n2 = b.size();
  const double ma = mean(a);
  const double mb = mean(b);
  const double va = sample_variance(a, ma) / static_cast<double>(a.size());
  const double vb = sample_variance(b, mb) / static_cast<double>(b.size());
  if (va == 0.0 && vb == 0.0) {
    if (ma != mb) throw StatsError("welch_t: degenerate samples");
    r.statistic = 0.0;
    r.p_value = 1.0;
    r.df = static_cast<double>(a.size() + b.size() - 2);
    r.note = "zero variance in both samples";
    return r;
  }
  const double se2 = va + vb;
  r.statistic = (ma - mb) / std::sqrt(se2);
  r.df = se2 * se2 /
         (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
  const boost::math::students_t dist(r.df);
  r.p_value = clamp_p(2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(r.statistic))));
  return r;
}

double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    // Jacobi theta form converges quickly for small lambda.
    const double pi = 3.14159265358979323846;
    const double w = pi * pi / (8.0 * lambda * lambda);
    double s = 0.0;
    for (int j = 1; j <= 50; ++j) {
      const double term = std::exp(-static_cast<double>((2 * j - 1) * (2 * j - 1)) * w);
      s += term;
      if (term < 1e-17) break;
    }
    return std::clamp(1.0 - std::sqrt(2.0 * pi) / lambda * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    s += (j % 2 == 1 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

TestResult ks_test(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw StatsError("ks_test: empty sample");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  TestResult r;
  r.method = "ks_2samp";
  r.statistic = d;
  r.n1 = x.size();
  r.n2 = y.size();
  const double ne = nx * ny / (nx + ny);
  r.df = ne;
  const double root = std::sqrt(ne);
  r.p_value = clamp_p(kolmogorov_sf((root + 0.12 + 0.11 / root) * d));
  if (x.size() < 8 || y.size() < 8) r.note = "asymptotic p-value with sample size below 8";
  return r;
}

double pearson_r(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw StatsError("pearson_r: length mismatch");
  if (a.size() < 2) throw StatsError("pearson_r: need at least 2 points");
  const double ma = mean(a);
  const double mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) throw StatsError("pearson_r: zero variance");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

namespace {

// Residual sum of squares of the least-squares fit, or nullopt when the
// design is rank deficient.
std::optional<double> ols_ssr(const Eigen::MatrixXd& design, const Eigen::VectorXd& target) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < design.cols()) return std::nullopt;
  const Eigen::VectorXd beta = qr.solve(target);
  return (target - design * beta).squaredNorm();
}

}  // namespace

GrangerResult granger_test(std::span<const double> x, std::span<const double> y, std::size_t maxlag,
                           double alpha, std::string cause_id, std::string effect_id) {
  if (maxlag == 0) throw StatsError("granger_test: maxlag must be >= 1");
  if (x.size() != y.size()) throw StatsError("granger_test: length mismatch");
  if (y.size() <= 3 * maxlag) {
    throw StatsError("granger_test: series length " + std::to_string(y.size()) +
                     " must exceed 3 * maxlag = " + std::to_string(3 * maxlag));
  }
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw StatsError("granger_test: non-finite value");
  }
  GrangerResult result;
  result.cause = std::move(cause_id);
  result.effect = std::move(effect_id);
  result.alpha = alpha;
  const Eigen::Index n = static_cast<Eigen::Index>(y.size());
  for (std::size_t lag = 1; lag <= maxlag; ++lag) {
    const Eigen::Index L = static_cast<Eigen::Index>(lag);
    const Eigen::Index m = n - L;
    Eigen::MatrixXd restricted(m, 1 + L);
    Eigen::MatrixXd unrestricted(m, 1 + 2 * L);
    Eigen::VectorXd target(m);
    for (Eigen::Index r = 0; r < m; ++r) {
      const Eigen::Index t = r + L;
      target(r) = y[t];
      restricted(r, 0) = 1.0;
      unrestricted(r, 0) = 1.0;
      for (Eigen::Index l = 1; l <= L; ++l) {
        restricted(r, l) = y[t - l];
        unrestricted(r, l) = y[t - l];
        unrestricted(r, L + l) = x[t - l];
      }
    }
    const auto ssr_r = ols_ssr(restricted, target);
    const auto ssr_u = ols_ssr(unrestricted, target);
    if (!ssr_r || !ssr_u) {
      throw StatsError("granger_test: singular design matrix at lag " + std::to_string(lag));
    }
    if (*ssr_u <= std::numeric_limits<double>::epsilon() * std::max(1.0, target.squaredNorm())) {
      throw StatsError("granger_test: exact fit at lag " + std::to_string(lag) + ", F undefined");
    }
    GrangerLag g;
    g.lag = lag;
    g.df_num = static_cast<double>(L);
    g.df_den = static_cast<double>(m - 2 * L - 1);
    g.f = std::max(0.0, ((*ssr_r - *ssr_u) / g.df_num) / (*ssr_u / g.df_den));
    const boost::math::fisher_f dist(g.df_num, g.df_den);
    g.p_value = clamp_p(boost::math::cdf(boost::math::complement(dist, g.f)));
    g.causes = g.p_value < alpha;
    result.lags.push_back(g);
  }
  return result;
}

std::vector<double> first_difference(std::span<const double> series) {
  std::vector<double> out;
  for (std::size_t i = 1; i < series.size(); ++i) out.push_back(series[i] - series[i - 1]);
  return out;
}

std::string_view to_string(SeriesMetric m) {
  switch (m) {
    case SeriesMetric::UniqueUsers: return "UNIQUE_USERS";
    case SeriesMetric::CascadeSize: return "CASCADE_SIZE";
    case SeriesMetric::CascadeDepth: return "CASCADE_DEPTH";
  }
  return "UNIQUE_USERS";
}

std::optional<SeriesMetric> parse_series_metric(std::string_view s) {
  for (auto m : {SeriesMetric::UniqueUsers, SeriesMetric::CascadeSize, SeriesMetric::CascadeDepth}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

DailySeries build_daily_series(const EventLog& log, const ClassMap& classes, SeriesMetric metric,
                               std::string_view community, std::optional<UserClass> user_class) {
  DailySeries s;
  s.community = std::string(community);
  s.user_class = user_class;
  s.metric = metric;
  if (log.empty()) {
    s.warnings.push_back("empty log");
    return s;
  }
  constexpr std::int64_t kDay = 86400;
  s.first_day = log.events().front().timestamp / kDay;
  const std::int64_t last_day = log.events().back().timestamp / kDay;
  s.counts.assign(static_cast<std::size_t>(last_day - s.first_day + 1), 0.0);

  auto wanted = [&](std::string_view actor) {
    return !user_class || class_of(classes, actor) == *user_class;
  };

  // X posts only count toward size when their cascade is never retweeted.
  std::set<std::pair<std::string_view, std::string_view>> retweeted;
  if (metric == SeriesMetric::CascadeSize) {
    for (const Event& e : log) {
      if (e.platform == Platform::X && e.kind == EventKind::Retweet) {
        retweeted.emplace(*e.target_actor_id, *e.object_id);
      }
    }
  }

  std::vector<std::unordered_set<std::string>> distinct(s.counts.size());
  bool any = false;
  for (const Event& e : log) {
    if (!community.empty() && e.community != community) continue;
    const std::size_t d = static_cast<std::size_t>(e.timestamp / kDay - s.first_day);
    switch (metric) {
      case SeriesMetric::UniqueUsers:
        if (wanted(e.actor_id)) {
          distinct[d].insert(e.actor_id);
          any = true;
        }
        break;
      case SeriesMetric::CascadeSize:
        if (e.platform == Platform::X) {
          if (e.kind == EventKind::Retweet && wanted(*e.target_actor_id)) {
            s.counts[d] += 1.0;
            any = true;
          } else if (e.kind == EventKind::Post && e.object_id && wanted(e.actor_id) &&
                     !retweeted.count({e.actor_id, *e.object_id})) {
            s.counts[d] += 1.0;
            any = true;
          }
        } else if (wanted(e.actor_id)) {
          s.counts[d] += 1.0;
          any = true;
        }
        break;
      case SeriesMetric::CascadeDepth:
        if (e.platform == Platform::X) {
          if (e.kind == EventKind::Retweet && wanted(*e.target_actor_id)) {
            distinct[d].insert(*e.target_actor_id + '\x1f' + e.actor_id);
            any = true;
          }
        } else if (e.kind == EventKind::Reply && e.target_actor_id && wanted(*e.target_actor_id)) {
          s.counts[d] += 1.0;
          any = true;
        }
        break;
    }
  }
  for (std::size_t d = 0; d < distinct.size(); ++d) {
    if (!distinct[d].empty()) s.counts[d] = static_cast<double>(distinct[d].size());
  }
  if (!any) {
    s.warnings.push_back("no events for class " +
                         std::string(user_class ? to_string(*user_class) : "ALL") +
                         (community.empty() ? std::string() : " in community " + std::string(community)));
  }
  return s;
}

std::string iso_date(std::int64_t day) {
  // Civil-from-days (proleptic Gregorian).
  std::int64_t z = day + 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const std::int64_t doe = z - era * 146097;
  const std::int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  std::int64_t y = yoe + era * 400;
  const std::int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const std::int64_t mp = (5 * doy + 2) / 153;
  const std::int64_t dd = doy - (153 * mp + 2) / 5 + 1;
  const std::int64_t mm = mp < 10 ? mp + 3 : mp - 9;
  if (mm <= 2) ++y;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", static_cast<int>(y),
                static_cast<int>(mm), static_cast<int>(dd));
  return buf;
}

}  // namespace botscope::stats
