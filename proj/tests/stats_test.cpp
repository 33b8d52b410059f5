#include <gtest/gtest.h>

#include <random>

#include "botscope/stats.hpp"
#include "oracles.hpp"

using namespace botscope;
using namespace botscope::stats;

namespace {

std::vector<double> noise(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

Event ev(std::string id, std::string actor, EventKind kind, std::int64_t ts,
         std::optional<std::string> target = std::nullopt, std::string object = "o",
         std::string community = "en", Platform platform = Platform::X) {
  Event e;
  e.event_id = std::move(id);
  e.platform = platform;
  e.kind = kind;
  e.actor_id = std::move(actor);
  e.target_actor_id = std::move(target);
  e.object_id = std::move(object);
  e.timestamp = ts;
  e.community = std::move(community);
  return e;
}

constexpr std::int64_t kDay = 86400;

}  // namespace

TEST(Welch, IdenticalSamples) {
  std::vector<double> a{1, 2, 3};
  auto r = welch_t(a, a);
  EXPECT_EQ(r.statistic, 0.0);
  EXPECT_DOUBLE_EQ(r.p_value, 1.0);
}

TEST(Welch, ShiftedFixture) {
  std::vector<double> a{1, 2, 3, 4, 5}, b{2, 3, 4, 5, 6};
  auto r = welch_t(a, b);
  EXPECT_NEAR(r.statistic, -1.0, 1e-12);
  EXPECT_NEAR(r.df, 8.0, 1e-12);
  EXPECT_NEAR(r.p_value, 0.3466, 1e-3);
}

TEST(Welch, DegenerateSamples) {
  std::vector<double> a{0, 0, 0}, b{1, 1, 1};
  EXPECT_THROW(welch_t(a, b), StatsError);
  std::vector<double> c{2, 2};
  auto r = welch_t(c, c);
  EXPECT_EQ(r.p_value, 1.0);
  EXPECT_THROW(welch_t(std::vector<double>{1.0}, c), StatsError);
}

TEST(Welch, PValueNeverZero) {
  std::vector<double> a(200), b(200);
  for (int i = 0; i < 200; ++i) {
    a[i] = i * 1e-6;
    b[i] = 1000.0 + i * 1e-6;
  }
  auto r = welch_t(a, b);
  EXPECT_GT(r.p_value, 0.0);
  EXPECT_LT(r.p_value, 1e-300);
}

TEST(Welch, AntisymmetricProperty) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    auto a = noise(rng, 5 + i % 13);
    auto b = noise(rng, 3 + i % 7);
    for (auto& x : b) x += 0.3;
    auto ab = welch_t(a, b);
    auto ba = welch_t(b, a);
    EXPECT_DOUBLE_EQ(ab.statistic, -ba.statistic);
    EXPECT_DOUBLE_EQ(ab.p_value, ba.p_value);
    EXPECT_GE(ab.p_value, 0.0);
    EXPECT_LE(ab.p_value, 1.0);
  }
}

TEST(KolmogorovSmirnov, Fixtures) {
  std::vector<double> a{1, 2, 3, 4}, b{2, 3, 4, 5}, c{5, 6, 7, 8};
  EXPECT_EQ(ks_test(a, b).statistic, 0.25);
  EXPECT_EQ(ks_test(a, c).statistic, 1.0);
  auto same = ks_test(a, a);
  EXPECT_EQ(same.statistic, 0.0);
  EXPECT_EQ(same.p_value, 1.0);
  EXPECT_FALSE(same.note.empty());
  EXPECT_THROW(ks_test(a, std::vector<double>{}), StatsError);
}

TEST(KolmogorovSmirnov, SymmetricAndBounded) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 50; ++i) {
    auto a = noise(rng, 10 + i);
    auto b = noise(rng, 20 + 2 * i);
    for (auto& x : b) x *= 1.5;
    auto ab = ks_test(a, b);
    auto ba = ks_test(b, a);
    EXPECT_EQ(ab.statistic, ba.statistic);
    EXPECT_EQ(ab.p_value, ba.p_value);
    EXPECT_GE(ab.statistic, 0.0);
    EXPECT_LE(ab.statistic, 1.0);
    EXPECT_TRUE(ab.note.empty());
  }
}

TEST(KolmogorovSmirnov, LimitingDistributionValues) {
  // Reference values of Q_KS(lambda) = 2 sum (-1)^{j-1} exp(-2 j^2 lambda^2).
  EXPECT_NEAR(kolmogorov_sf(0.5), 0.963945, 1e-6);
  EXPECT_NEAR(kolmogorov_sf(1.0), 0.269999, 1e-6);
  EXPECT_NEAR(kolmogorov_sf(1.36), 0.0494859, 1e-6);
  EXPECT_NEAR(kolmogorov_sf(2.0), 0.000670925, 1e-8);
  // Both series agree at the switch point.
  EXPECT_NEAR(kolmogorov_sf(1.18 - 1e-12), kolmogorov_sf(1.18), 1e-10);
}

TEST(Pearson, Fixtures) {
  EXPECT_DOUBLE_EQ(pearson_r(std::vector<double>{1, 2, 3}, std::vector<double>{2, 4, 6}), 1.0);
  EXPECT_DOUBLE_EQ(pearson_r(std::vector<double>{1, 2, 3}, std::vector<double>{6, 4, 2}), -1.0);
  EXPECT_NEAR(pearson_r(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 3, 2, 4}), 0.8, 1e-12);
  EXPECT_THROW(pearson_r(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), StatsError);
  EXPECT_THROW(pearson_r(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}), StatsError);
}

TEST(Pearson, AffineInvariance) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 30; ++i) {
    auto a = noise(rng, 40);
    auto b = noise(rng, 40);
    for (std::size_t k = 0; k < a.size(); ++k) b[k] += 0.5 * a[k];
    const double r = pearson_r(a, b);
    auto a2 = a;
    for (auto& x : a2) x = 3.0 * x + 7.0;
    auto neg = b;
    for (auto& x : neg) x = -x;
    EXPECT_NEAR(pearson_r(a2, b), r, 1e-12);
    EXPECT_NEAR(pearson_r(a, neg), -r, 1e-12);
  }
}

TEST(Granger, MatchesOlsOracle) {
  std::mt19937_64 rng(2024);
  for (int fixture = 0; fixture < 20; ++fixture) {
    const std::size_t n = 40 + 13 * fixture;
    auto x = noise(rng, n);
    auto e = noise(rng, n);
    std::vector<double> y(n, 0.0);
    for (std::size_t t = 1; t < n; ++t) y[t] = 0.3 * y[t - 1] + 0.2 * (fixture % 4) * x[t - 1] + e[t];
    auto result = granger_test(x, y, 5);
    ASSERT_EQ(result.lags.size(), 5u);
    for (const auto& lag : result.lags) {
      const double expected = oracle::granger_f(x, y, lag.lag);
      EXPECT_NEAR(lag.f, expected, 1e-8 * std::max(1.0, std::fabs(expected)))
          << "fixture " << fixture << " lag " << lag.lag;
      EXPECT_EQ(lag.df_num, static_cast<double>(lag.lag));
      EXPECT_EQ(lag.df_den, static_cast<double>(n - lag.lag - 2 * lag.lag - 1));
    }
  }
}

TEST(Granger, DetectsPlantedLag) {
  int detected = 0;
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    auto x = noise(rng, 500);
    auto e = noise(rng, 500);
    std::vector<double> y(500);
    y[0] = e[0];
    for (std::size_t t = 1; t < 500; ++t) y[t] = 0.8 * x[t - 1] + e[t];
    auto r = granger_test(x, y, 5);
    detected += r.lags[0].causes ? 1 : 0;
    // Reverse direction carries no signal at lag 1 for most seeds.
    EXPECT_EQ(r.cause, "x");
  }
  EXPECT_EQ(detected, 20);
}

TEST(Granger, WhiteNoiseFalsePositiveRate) {
  int rejections = 0;
  const int trials = 200;
  for (int seed = 0; seed < trials; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    auto x = noise(rng, 500);
    auto y = noise(rng, 500);
    rejections += granger_test(x, y, 1).lags[0].causes ? 1 : 0;
  }
  const double rate = static_cast<double>(rejections) / trials;
  EXPECT_GE(rate, 0.01);
  EXPECT_LE(rate, 0.10);
}

TEST(Granger, Errors) {
  std::mt19937_64 rng(5);
  auto x = noise(rng, 60);
  std::vector<double> constant(60, 4.0);
  try {
    granger_test(x, constant, 5);
    FAIL() << "expected StatsError";
  } catch (const StatsError& e) {
    EXPECT_NE(std::string(e.what()).find("lag 1"), std::string::npos);
  }
  EXPECT_THROW(granger_test(x, x, 20), StatsError);
  EXPECT_THROW(granger_test(x, std::vector<double>(59, 1.0), 2), StatsError);
  EXPECT_THROW(granger_test(x, x, 0), StatsError);
}

TEST(Granger, FirstDifference) {
  EXPECT_EQ(first_difference(std::vector<double>{1, 4, 9, 16}), (std::vector<double>{3, 5, 7}));
  EXPECT_TRUE(first_difference(std::vector<double>{1}).empty());
}

TEST(DailySeries, DistinctUsersAndGapFill) {
  std::vector<Event> events{
      ev("1", "u1", EventKind::Retweet, 10, "inf", "a"),
      ev("2", "u1", EventKind::Retweet, 20, "inf", "b"),
      ev("3", "u1", EventKind::Retweet, 30, "inf", "c"),
      ev("4", "u2", EventKind::Post, 2 * kDay + 5),
  };
  auto log = normalize_log(events);
  auto s = build_daily_series(log, {}, SeriesMetric::UniqueUsers);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s.counts, (std::vector<double>{1, 0, 1}));
  EXPECT_EQ(s.first_day, 0);
  EXPECT_TRUE(s.warnings.empty());
}

TEST(DailySeries, EmptyClassWarns) {
  auto log = normalize_log({ev("1", "u1", EventKind::Post, 0), ev("2", "u1", EventKind::Post, kDay)});
  ClassMap classes{{"u1", UserClass::AHuman}};
  auto s = build_daily_series(log, classes, SeriesMetric::UniqueUsers, {}, UserClass::BBot);
  EXPECT_EQ(s.counts, (std::vector<double>{0, 0}));
  ASSERT_EQ(s.warnings.size(), 1u);
}

TEST(DailySeries, CascadeMetricsX) {
  std::vector<Event> events{
      ev("p1", "inf", EventKind::Post, 0, std::nullopt, "url1"),
      ev("p2", "inf", EventKind::Post, 5, std::nullopt, "url2"),
      ev("r1", "a", EventKind::Retweet, 10, "inf", "url1"),
      ev("r2", "b", EventKind::Retweet, 20, "inf", "url1"),
      ev("r3", "a", EventKind::Retweet, kDay + 1, "inf", "url1"),
      ev("r4", "a", EventKind::Retweet, kDay + 2, "inf", "url3"),
  };
  auto log = normalize_log(events);
  ClassMap classes{{"inf", UserClass::ABot}};
  auto size = build_daily_series(log, classes, SeriesMetric::CascadeSize, {}, UserClass::ABot);
  // Day 0: url2 post never retweeted (1) + two retweets. Day 1: two retweets.
  EXPECT_EQ(size.counts, (std::vector<double>{3, 2}));
  auto depth = build_daily_series(log, classes, SeriesMetric::CascadeDepth, {}, UserClass::ABot);
  EXPECT_EQ(depth.counts, (std::vector<double>{2, 1}));
}

TEST(DailySeries, CascadeMetricsReddit) {
  std::vector<Event> events{
      ev("t3_p", "op", EventKind::Post, 0, std::nullopt, "t3_p", "de", Platform::Reddit),
      ev("t1_a", "c1", EventKind::Reply, 100, "op", "t3_p", "de", Platform::Reddit),
      ev("t1_b", "c2", EventKind::Reply, kDay, "op", "t3_p", "de", Platform::Reddit),
      ev("t1_c", "op", EventKind::Reply, kDay + 5, "c1", "t1_a", "de", Platform::Reddit),
  };
  auto log = normalize_log(events);
  ClassMap classes{{"op", UserClass::BHuman}};
  auto size = build_daily_series(log, classes, SeriesMetric::CascadeSize, "de", UserClass::BHuman);
  EXPECT_EQ(size.counts, (std::vector<double>{1, 1}));
  auto depth = build_daily_series(log, classes, SeriesMetric::CascadeDepth, "de", UserClass::BHuman);
  EXPECT_EQ(depth.counts, (std::vector<double>{1, 1}));
}

TEST(DailySeries, ClassSeriesPartitionTheTotal) {
  std::mt19937_64 rng(99);
  std::vector<std::string> actors;
  ClassMap classes;
  for (int i = 0; i < 40; ++i) {
    actors.push_back("u" + std::to_string(i));
    classes[actors.back()] = kAllClasses[static_cast<std::size_t>(i) % std::size(kAllClasses)];
  }
  std::uniform_int_distribution<int> pick(0, 39);
  std::uniform_int_distribution<int> kind(0, 2);
  std::uniform_int_distribution<std::int64_t> when(0, 9 * kDay);
  std::vector<Event> events;
  for (int i = 0; i < 2000; ++i) {
    const std::string a = actors[pick(rng)];
    std::string t = actors[pick(rng)];
    if (t == a) t = "u_outside";
    const std::string object = "url" + std::to_string(pick(rng) % 25);
    switch (kind(rng)) {
      case 0: events.push_back(ev("e" + std::to_string(i), a, EventKind::Post, when(rng), std::nullopt, object)); break;
      case 1: events.push_back(ev("e" + std::to_string(i), a, EventKind::Retweet, when(rng), t, object)); break;
      default: events.push_back(ev("e" + std::to_string(i), a, EventKind::Reply, when(rng), t, object)); break;
    }
  }
  auto log = normalize_log(events);
  for (auto metric : {SeriesMetric::UniqueUsers, SeriesMetric::CascadeSize, SeriesMetric::CascadeDepth}) {
    auto total = build_daily_series(log, classes, metric);
    std::vector<double> sum(total.size(), 0.0);
    for (auto cls : kAllClasses) {
      auto s = build_daily_series(log, classes, metric, {}, cls);
      ASSERT_EQ(s.size(), total.size());
      for (std::size_t d = 0; d < s.size(); ++d) sum[d] += s.counts[d];
    }
    EXPECT_EQ(sum, total.counts) << to_string(metric);
  }
}

TEST(DailySeries, IsoDate) {
  EXPECT_EQ(iso_date(0), "1970-01-01");
  EXPECT_EQ(iso_date(19052), "2022-03-01");
  EXPECT_EQ(iso_date(-1), "1969-12-31");
}
