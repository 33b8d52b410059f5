#include "botscope/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

namespace botscope {
namespace {

struct Accumulator {
  std::string influencer;
  std::string object_id;
  std::uint64_t count = 0;
  std::vector<std::string> spreaders;
  std::int64_t first_ts = 0;
  std::int64_t last_ts = 0;
  bool seen = false;

  void touch(std::int64_t ts) {
    if (!seen) {
      first_ts = last_ts = ts;
      seen = true;
    } else {
      first_ts = std::min(first_ts, ts);
      last_ts = std::max(last_ts, ts);
    }
  }
};

void sort_unique(std::vector<std::string>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

CascadeSet extract_cascades(const EventLog& log, Platform platform) {
  CascadeSet set;
  set.platform = platform;
  std::unordered_map<std::string, Accumulator> acc;
  std::map<std::string, double> own_events;

  auto slot = [&](const std::string& influencer, const std::string& object) -> Accumulator& {
    std::string key = influencer;
    key.push_back('\x1f');
    key += object;
    auto [it, inserted] = acc.try_emplace(std::move(key));
    if (inserted) {
      it->second.influencer = influencer;
      it->second.object_id = object;
    }
    return it->second;
  };

  for (const Event& e : log) {
    if (e.platform != platform) continue;
    if (platform == Platform::X) {
      if (!e.object_id) continue;
      if (e.kind == EventKind::Post) {
        slot(e.actor_id, *e.object_id).touch(e.timestamp);
      } else if (e.kind == EventKind::Retweet && e.target_actor_id) {
        Accumulator& a = slot(*e.target_actor_id, *e.object_id);
        a.touch(e.timestamp);
        ++a.count;
        a.spreaders.push_back(e.actor_id);
      }
    } else {
      own_events[e.actor_id] += 1.0;
      if (e.kind == EventKind::Reply && e.object_id) {
        const std::string& owner = e.target_actor_id ? *e.target_actor_id : *e.object_id;
        Accumulator& a = slot(owner, *e.object_id);
        a.touch(e.timestamp);
        ++a.count;
        a.spreaders.push_back(e.actor_id);
      }
    }
  }

  set.cascades.reserve(acc.size());
  for (auto& [key, a] : acc) {
    sort_unique(a.spreaders);
    set.cascades.push_back(Cascade{std::move(a.influencer), std::move(a.object_id), a.count,
                                   std::move(a.spreaders), a.first_ts, a.last_ts});
  }
  std::sort(set.cascades.begin(), set.cascades.end(), [](const Cascade& x, const Cascade& y) {
    return std::tie(x.influencer, x.object_id) < std::tie(y.influencer, y.object_id);
  });

  if (platform == Platform::X) {
    for (std::size_t i = 0; i < set.cascades.size();) {
      const std::string& who = set.cascades[i].influencer;
      double size = 0.0;
      std::vector<std::string> retweeters;
      std::size_t j = i;
      for (; j < set.cascades.size() && set.cascades[j].influencer == who; ++j) {
        size += static_cast<double>(set.cascades[j].size());
        retweeters.insert(retweeters.end(), set.cascades[j].spreaders.begin(),
                          set.cascades[j].spreaders.end());
      }
      sort_unique(retweeters);
      set.sizes.push_back({who, size});
      set.depths.push_back({who, static_cast<double>(retweeters.size())});
      i = j;
    }
  } else {
    for (const auto& [actor, n] : own_events) set.sizes.push_back({actor, n});
    for (const Cascade& c : set.cascades) set.depths.push_back({c.influencer, static_cast<double>(c.count)});
  }
  return set;
}

std::vector<CcdfPoint> ccdf(std::span<const double> values) {
  if (values.empty()) throw Error("ccdf: empty input");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  std::vector<CcdfPoint> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0 && v[i] == v[i - 1]) continue;
    out.push_back({v[i], static_cast<double>(v.size() - i) / n});
  }
  return out;
}

std::string_view to_string(CascadeMetric m) { return m == CascadeMetric::Size ? "size" : "depth"; }

std::optional<CascadeMetric> parse_cascade_metric(std::string_view s) {
  if (s == "size") return CascadeMetric::Size;
  if (s == "depth") return CascadeMetric::Depth;
  return std::nullopt;
}

Summary summarize(std::span<const double> values) {
  Summary s;
  s.n = values.size();
  if (values.empty()) return s;
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  double total = 0.0;
  for (double x : v) total += x;
  s.mean = total / static_cast<double>(v.size());
  const std::size_t mid = v.size() / 2;
  s.median = v.size() % 2 == 1 ? v[mid] : (v[mid - 1] + v[mid]) / 2.0;
  s.max = v.back();
  return s;
}

DistributionReport class_distribution_report(const CascadeSet& cascades, const ClassMap& classes) {
  DistributionReport report;
  for (CascadeMetric metric : {CascadeMetric::Size, CascadeMetric::Depth}) {
    const auto& source = metric == CascadeMetric::Size ? cascades.sizes : cascades.depths;
    std::map<UserClass, ClassDistribution> by_class;
    for (const ActorValue& v : source) {
      const UserClass cls = class_of(classes, v.actor);
      ClassDistribution& d = by_class[cls];
      d.cls = cls;
      d.metric = metric;
      d.values.push_back(v.value);
    }
    for (auto& [cls, d] : by_class) {
      std::sort(d.values.begin(), d.values.end());
      for (double x : d.values) {
        if (x > 0.0) {
          d.log_values.push_back(std::log10(x));
        } else {
          ++d.zeros;
        }
      }
      d.raw = summarize(d.values);
      d.log10 = summarize(d.log_values);
    }

    std::vector<const ClassDistribution*> testable;
    for (UserClass cls : kKnownClasses) {
      auto it = by_class.find(cls);
      const std::size_t n = it == by_class.end() ? 0 : it->second.log_values.size();
      if (n < 2) {
        report.flags.push_back(std::string(to_string(cls)) + " " + std::string(to_string(metric)) +
                               ": " + std::to_string(n) +
                               " log-scale observations, excluded from pairwise tests");
      } else {
        testable.push_back(&it->second);
      }
    }
    for (std::size_t i = 0; i < testable.size(); ++i) {
      for (std::size_t j = i + 1; j < testable.size(); ++j) {
        PairwiseTest t;
        t.a = testable[i]->cls;
        t.b = testable[j]->cls;
        t.metric = metric;
        try {
          t.welch = stats::welch_t(testable[i]->log_values, testable[j]->log_values);
        } catch (const stats::StatsError& e) {
          t.note = e.what();
        }
        t.ks = stats::ks_test(testable[i]->log_values, testable[j]->log_values);
        report.tests.push_back(std::move(t));
      }
    }
    for (auto& [cls, d] : by_class) report.distributions.push_back(std::move(d));
  }
  return report;
}

std::string render_summary_csv(const DistributionReport& report) {
  std::string out = "class,metric,scale,n,mean,median,max,zeros\n";
  for (const ClassDistribution& d : report.distributions) {
    for (int scale = 0; scale < 2; ++scale) {
      const Summary& s = scale == 0 ? d.raw : d.log10;
      out += std::string(to_string(d.cls)) + ',' + std::string(to_string(d.metric)) + ',' +
             (scale == 0 ? "raw" : "log10") + ',' + std::to_string(s.n) + ',' +
             format_double(s.mean) + ',' + format_double(s.median) + ',' + format_double(s.max) +
             ',' + std::to_string(d.zeros) + '\n';
    }
  }
  return out;
}

std::string render_tests_csv(const DistributionReport& report) {
  std::string out = "pair,metric,method,statistic,p,df,n1,n2,note\n";
  auto row = [&](const PairwiseTest& t, const stats::TestResult& r, const std::string& note) {
    out += std::string(to_string(t.a)) + '|' + std::string(to_string(t.b)) + ',' +
           std::string(to_string(t.metric)) + ',' + r.method + ',' + format_double(r.statistic) +
           ',' + format_double(r.p_value) + ',' + format_double(r.df) + ',' +
           std::to_string(r.n1) + ',' + std::to_string(r.n2) + ',' + csv_field(note) + '\n';
  };
  for (const PairwiseTest& t : report.tests) {
    if (t.welch) {
      row(t, *t.welch, t.welch->note);
    } else {
      out += std::string(to_string(t.a)) + '|' + std::string(to_string(t.b)) + ',' +
             std::string(to_string(t.metric)) + ",welch_t,,,,,," + csv_field(t.note) + '\n';
    }
    row(t, t.ks, t.ks.note);
  }
  return out;
}

std::string render_ccdf_csv(std::span<const CcdfPoint> points) {
  std::string out = "x,survival\n";
  for (const CcdfPoint& p : points) out += format_double(p.x) + ',' + format_double(p.survival) + '\n';
  return out;
}

}  // namespace botscope
