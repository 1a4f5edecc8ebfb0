#pragma once

// Straightforward reference computations the library results are checked
// against. They deliberately take the slow, obvious route (long double sums,
// full sorts, nested loops, numerical integration) and share no code with
// src/.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

inline double mean(const std::vector<double>& xs) {
  long double s = 0;
  for (double x : xs) s += x;
  return double(s / xs.size());
}

inline double sample_std(const std::vector<double>& xs) {
  const long double m = mean(xs);
  long double ss = 0;
  for (double x : xs) ss += (x - m) * (x - m);
  return double(std::sqrt(ss / (xs.size() - 1)));
}

inline double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : (xs[n / 2 - 1] + xs[n / 2]) / 2.0;
}

// Hyndman-Fan type 7, written from the plotting-position form
// p = (j - 1) / (n - 1) for the j-th order statistic.
inline double quantile7(std::vector<double> xs, double p) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  if (n == 1) return xs[0];
  for (std::size_t j = 0; j + 1 < n; ++j) {
    const double lo = double(j) / double(n - 1);
    const double hi = double(j + 1) / double(n - 1);
    if (p >= lo && p <= hi) {
      const double w = (p - lo) * double(n - 1);
      return xs[j] + w * (xs[j + 1] - xs[j]);
    }
  }
  return xs.back();
}

using Table = std::map<std::string, std::map<std::string, double>>;

// cells[i][j] counts wins minus losses of condition i against j.
inline std::vector<std::vector<int>> net_advantage(const Table& table, const std::vector<std::string>& conds) {
  std::vector<std::vector<int>> cells(conds.size(), std::vector<int>(conds.size(), 0));
  for (std::size_t i = 0; i < conds.size(); ++i) {
    for (std::size_t j = 0; j < conds.size(); ++j) {
      int wins = 0;
      int losses = 0;
      for (const auto& [topic, row] : table) {
        auto a = row.find(conds[i]);
        auto b = row.find(conds[j]);
        if (a == row.end() || b == row.end()) continue;
        if (a->second > b->second) ++wins;
        if (a->second < b->second) ++losses;
      }
      cells[i][j] = wins - losses;
    }
  }
  return cells;
}

struct Fit {
  double r, r2, slope, intercept;
};

// Textbook computational formulas in long double.
inline Fit pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const long double n = x.size();
  long double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += (long double)x[i] * x[i];
    syy += (long double)y[i] * y[i];
    sxy += (long double)x[i] * y[i];
  }
  const long double cov = n * sxy - sx * sy;
  const long double vx = n * sxx - sx * sx;
  const long double vy = n * syy - sy * sy;
  const long double r = cov / std::sqrt(vx * vy);
  const long double slope = cov / vx;
  const long double intercept = (sy - slope * sx) / n;
  return {double(r), double(r * r), double(slope), double(intercept)};
}

inline double t_pdf(double t, double dof) {
  const double logc = std::lgamma((dof + 1) / 2) - std::lgamma(dof / 2) - 0.5 * std::log(dof * M_PI);
  return std::exp(logc - (dof + 1) / 2 * std::log1p(t * t / dof));
}

inline long double simpson(double a, double b, double dof, int intervals) {
  const double h = (b - a) / intervals;
  long double s = t_pdf(a, dof) + t_pdf(b, dof);
  for (int i = 1; i < intervals; ++i) s += (i % 2 ? 4.0L : 2.0L) * t_pdf(a + i * h, dof);
  return s * h / 3;
}

// Two-sided p-value 1 - 2 * integral_0^|t| pdf, composite Simpson over
// [0, 1], [1, 2], [2, 4], ... so heavy tails keep a fine relative step.
inline double t_two_sided_p(double t, double dof, int intervals = 2000) {
  const double b = std::fabs(t);
  long double half = 0;
  for (double lo = 0, hi = 1; lo < b; lo = hi, hi *= 2) half += simpson(lo, std::min(hi, b), dof, intervals);
  return std::max(0.0, double(1.0L - 2.0L * half));
}

inline double correlation_p(double r, std::size_t n) {
  const double dof = double(n) - 2;
  if (std::fabs(r) >= 1) return 0.0;
  return t_two_sided_p(r * std::sqrt(dof / (1 - r * r)), dof);
}

// Position of each subject in the ranking: number of subjects that beat it
// (higher accuracy, or equal accuracy and smaller id).
inline std::vector<std::string> rank_order(const std::vector<std::pair<std::string, double>>& subjects) {
  std::vector<std::string> out(subjects.size());
  for (const auto& [id, acc] : subjects) {
    std::size_t better = 0;
    for (const auto& [other, other_acc] : subjects) {
      if (other_acc > acc || (other_acc == acc && other < id)) ++better;
    }
    out[better] = id;
  }
  return out;
}

// Reference SplitMix64 with explicit state.
struct SplitMix64 {
  std::uint64_t state;
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
};

}  // namespace oracle
