#include "qzlora/stats/stats.hpp"

#include "qzlora/error.hpp"
#include "qzlora/util/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qzlora::stats {

TopicConditionAccuracy make_topic_accuracy(std::string topic_id, std::string condition,
                                           std::vector<double> per_sample_accuracies) {
  if (per_sample_accuracies.empty()) throw Error(ErrorCode::EmptyGroup, topic_id + " / " + condition);
  TopicConditionAccuracy t{std::move(topic_id), std::move(condition), std::move(per_sample_accuracies), 0.0};
  t.mean_accuracy = mean(t.per_sample_accuracies);
  return t;
}

double mean(const std::vector<double>& values) {
  if (values.empty()) throw Error(ErrorCode::EmptyGroup, "mean of nothing");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw Error(ErrorCode::EmptyGroup, "quantile of nothing");
  std::sort(values.begin(), values.end());
  const double h = static_cast<double>(values.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Summary summarize(const std::vector<double>& values) {
  if (values.empty()) throw Error(ErrorCode::EmptyGroup, "no values");
  Summary s;
  s.n = values.size();
  s.mean = mean(values);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  s.min = sorted.front();
  s.max = sorted.back();
  s.median = quantile(sorted, 0.5);
  s.q1 = quantile(sorted, 0.25);
  s.q3 = quantile(sorted, 0.75);
  return s;
}

std::map<std::string, Summary> aggregate_condition(const AccuracyTable& table,
                                                   const std::vector<std::string>& conditions) {
  std::map<std::string, Summary> out;
  for (const auto& condition : conditions) {
    std::vector<double> values;
    for (const auto& [topic, row] : table) {
      if (auto it = row.find(condition); it != row.end()) values.push_back(it->second);
    }
    if (values.empty()) throw Error(ErrorCode::EmptyGroup, condition + " has no topics");
    out[condition] = summarize(values);
  }
  return out;
}

NetAdvantageMatrix net_advantage(const AccuracyTable& table, const std::vector<std::string>& conditions) {
  const std::size_t m = conditions.size();
  NetAdvantageMatrix matrix;
  matrix.conditions = conditions;
  matrix.cells.assign(m, std::vector<int>(m, 0));
  matrix.comparable.assign(m, std::vector<int>(m, 0));
  matrix.excluded.assign(m, std::vector<int>(m, 0));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j) continue;
      for (const auto& [topic, row] : table) {
        const auto a = row.find(conditions[i]);
        const auto b = row.find(conditions[j]);
        if (a == row.end() || b == row.end()) {
          ++matrix.excluded[i][j];
          continue;
        }
        ++matrix.comparable[i][j];
        if (a->second > b->second) ++matrix.cells[i][j];
        if (a->second < b->second) --matrix.cells[i][j];
      }
      if (matrix.comparable[i][j] == 0) {
        throw Error(ErrorCode::NoComparableTopics, conditions[i] + " vs " + conditions[j]);
      }
    }
  }
  return matrix;
}

std::vector<KSweepPoint> k_sweep(const KTable& table, const std::vector<int>& ks,
                                 const std::vector<std::string>& topics) {
  std::vector<KSweepPoint> points;
  for (int k : ks) {
    const auto column = table.find(k);
    std::vector<double> values;
    if (column != table.end()) {
      if (topics.empty()) {
        for (const auto& [topic, acc] : column->second) values.push_back(acc);
      } else {
        for (const auto& topic : topics) {
          if (auto it = column->second.find(topic); it != column->second.end()) values.push_back(it->second);
        }
      }
    }
    if (values.empty()) throw Error(ErrorCode::MissingKColumn, "k=" + std::to_string(k));
    const Summary s = summarize(values);
    KSweepPoint point{k, s.n, s.mean, std::nullopt};
    if (s.std) {
      const double dof = static_cast<double>(s.n - 1);
      point.ci95_half_width = student_t_quantile(0.975, dof) * *s.std / std::sqrt(static_cast<double>(s.n));
    }
    points.push_back(point);
  }
  return points;
}

CorrelationResult correlate(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw Error(ErrorCode::DegenerateInput, "series lengths differ");
  const std::size_t n = xs.size();
  if (n < 3) throw Error(ErrorCode::DegenerateInput, "need at least 3 pairs");
  const auto constant = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
  };
  if (constant(xs) || constant(ys)) throw Error(ErrorCode::DegenerateInput, "constant series");

  const double mx = mean(xs);
  const double my = mean(ys);
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  CorrelationResult c;
  c.n = n;
  c.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  c.r_squared = c.r * c.r;
  c.slope = sxy / sxx;
  c.intercept = my - c.slope * mx;
  const double dof = static_cast<double>(n - 2);
  if (c.r_squared >= 1.0) {
    c.p_value = 0.0;
  } else {
    const double t2 = c.r_squared * dof / (1.0 - c.r_squared);
    c.p_value = std::clamp(incomplete_beta(dof / 2.0, 0.5, dof / (dof + t2)), 0.0, 1.0);
  }
  return c;
}

CorrelationResult popularity_correlation(const std::vector<double>& baseline_accuracies,
                                         const std::vector<std::uint64_t>& image_counts) {
  std::vector<double> counts(image_counts.begin(), image_counts.end());
  return correlate(baseline_accuracies, counts);
}

namespace {

double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 500;
  constexpr double kEpsilon = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEpsilon) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double front =
      std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double dof) {
  const double tail = 0.5 * incomplete_beta(dof / 2.0, 0.5, dof / (dof + t * t));
  return t >= 0 ? 1.0 - tail : tail;
}

double student_t_quantile(double p, double dof) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::DegenerateInput, "quantile probability outside (0, 1)");
  if (p == 0.5) return 0.0;
  if (p < 0.5) return -student_t_quantile(1.0 - p, dof);
  double lo = 0.0;
  double hi = 1.0;
  while (student_t_cdf(hi, dof) < p) hi *= 2.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (student_t_cdf(mid, dof) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<std::string> sample_topics(std::vector<std::string> topic_ids, std::size_t count, std::uint64_t seed) {
  std::sort(topic_ids.begin(), topic_ids.end());
  count = std::min(count, topic_ids.size());
  CounterRng rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(topic_ids[i], topic_ids[i + rng.bounded(topic_ids.size() - i)]);
  }
  topic_ids.resize(count);
  return topic_ids;
}

}  // namespace qzlora::stats
