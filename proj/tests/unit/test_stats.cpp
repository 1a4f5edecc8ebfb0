#include "oracles/oracles.hpp"
#include "support/support.hpp"

#include "qzlora/error.hpp"
#include "qzlora/stats/stats.hpp"
#include "qzlora/util/rng.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

using namespace qzlora;
using namespace qzlora::stats;
using Catch::Approx;

namespace {

bool close(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

template <class Fn>
void expect_code(ErrorCode code, Fn&& fn) {
  try {
    fn();
    FAIL("expected " << to_string(code));
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

}  // namespace

TEST_CASE("summary statistics match the oracles on 100 fixtures") {
  CounterRng rng(1);
  for (int f = 0; f < 100; ++f) {
    std::vector<double> xs(2 + rng.bounded(60));
    for (auto& x : xs) x = rng.uniform();
    const Summary s = summarize(xs);
    REQUIRE(s.n == xs.size());
    REQUIRE(close(s.mean, oracle::mean(xs), 1e-12));
    REQUIRE(close(s.median, oracle::median(xs), 1e-12));
    REQUIRE(s.std);
    REQUIRE(close(*s.std, oracle::sample_std(xs), 1e-12));
    REQUIRE(close(s.q1, oracle::quantile7(xs, 0.25), 1e-12));
    REQUIRE(close(s.q3, oracle::quantile7(xs, 0.75), 1e-12));
    REQUIRE(s.min == *std::min_element(xs.begin(), xs.end()));
    REQUIRE(s.max == *std::max_element(xs.begin(), xs.end()));

    // Permutation invariance.
    auto shuffled = xs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const Summary t = summarize(shuffled);
    REQUIRE(close(t.mean, s.mean, 1e-12));
    REQUIRE(t.median == s.median);
  }
  const Summary one = summarize({0.4});
  CHECK_FALSE(one.std);
  CHECK(one.median == 0.4);
  expect_code(ErrorCode::EmptyGroup, [] { summarize({}); });
  expect_code(ErrorCode::EmptyGroup, [] { make_topic_accuracy("t", "c", {}); });
  CHECK(make_topic_accuracy("t", "c", {0.2, 0.4}).mean_accuracy == Approx(0.3));
}

TEST_CASE("net advantage matches the nested-loop oracle and is antisymmetric") {
  CounterRng rng(2);
  const std::vector<std::string> conds{"a", "b", "c", "d"};
  for (int f = 0; f < 100; ++f) {
    AccuracyTable table;
    const int topics = 3 + int(rng.bounded(30));
    for (int t = 0; t < topics; ++t) {
      for (const auto& c : conds) {
        if (rng.bounded(10) == 0 && t > 0) continue;  // occasional missing cell
        table["t" + std::to_string(t)][c] = double(rng.bounded(11)) / 10.0;
      }
    }
    const auto m = net_advantage(table, conds);
    REQUIRE(m.cells == oracle::net_advantage(table, conds));
    for (std::size_t i = 0; i < conds.size(); ++i) {
      REQUIRE(m.cells[i][i] == 0);
      for (std::size_t j = 0; j < conds.size(); ++j) {
        REQUIRE(m.cells[i][j] == -m.cells[j][i]);
        if (i != j) REQUIRE(m.comparable[i][j] + m.excluded[i][j] == int(table.size()));
      }
    }
  }

  AccuracyTable disjoint{{"t1", {{"a", 0.5}}}, {"t2", {{"b", 0.5}}}};
  expect_code(ErrorCode::NoComparableTopics, [&] { net_advantage(disjoint, {"a", "b"}); });
}

TEST_CASE("aggregate_condition summarizes each condition over its topics") {
  AccuracyTable table{{"t1", {{"a", 0.2}, {"b", 0.4}}}, {"t2", {{"a", 0.6}}}};
  const auto agg = aggregate_condition(table, {"a", "b"});
  CHECK(agg.at("a").mean == Approx(0.4));
  CHECK(agg.at("a").n == 2);
  CHECK(agg.at("b").n == 1);
  expect_code(ErrorCode::EmptyGroup, [&] { aggregate_condition(table, {"c"}); });
}

TEST_CASE("k-sweep means and intervals match the oracles") {
  CounterRng rng(3);
  for (int f = 0; f < 100; ++f) {
    KTable table;
    std::vector<std::string> topics;
    const int n = 2 + int(rng.bounded(25));
    for (int t = 0; t < n; ++t) topics.push_back("t" + std::to_string(t));
    for (int k : {2, 5, 10, 12, 15}) {
      for (const auto& t : topics) table[k][t] = double(rng.bounded(101)) / 100.0;
    }
    const auto points = k_sweep(table);
    REQUIRE(points.size() == 5);
    for (const auto& p : points) {
      std::vector<double> column;
      for (const auto& t : topics) column.push_back(table[p.k][t]);
      REQUIRE(p.n == column.size());
      REQUIRE(close(p.mean, oracle::mean(column), 1e-12));
      REQUIRE(p.ci95_half_width);
      // The half width is t * s / sqrt(n) with t the 97.5% quantile.
      const double t = *p.ci95_half_width / (oracle::sample_std(column) / std::sqrt(double(n)));
      if (oracle::sample_std(column) > 0) REQUIRE(close(oracle::t_two_sided_p(t, n - 1), 0.05, 1e-6));
    }
  }
  KTable partial{{2, {{"a", 0.5}, {"b", 0.7}}}, {5, {{"a", 0.1}}}};
  CHECK(k_sweep(partial, {2}, {"a"}).front().mean == 0.5);
  CHECK_FALSE(k_sweep(partial, {5}).front().ci95_half_width);
  expect_code(ErrorCode::MissingKColumn, [&] { k_sweep(partial, {2, 10}); });
  expect_code(ErrorCode::MissingKColumn, [&] { k_sweep(partial, {5}, {"b"}); });
}

TEST_CASE("Pearson fit matches the textbook oracle and its invariances") {
  CounterRng rng(4);
  for (int f = 0; f < 100; ++f) {
    const std::size_t n = 3 + rng.bounded(60);
    std::vector<double> x(n), y(n);
    const double slope = rng.uniform() * 4 - 2;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.uniform() * 100;
      y[i] = slope * x[i] + (rng.uniform() - 0.5) * 60;
    }
    const auto got = correlate(x, y);
    const auto want = oracle::pearson(x, y);
    REQUIRE(close(got.r, want.r, 1e-9));
    REQUIRE(close(got.r_squared, want.r2, 1e-9));
    REQUIRE(close(got.slope, want.slope, 1e-9 * std::max(1.0, std::fabs(want.slope))));
    REQUIRE(close(got.intercept, want.intercept, 1e-9 * std::max(1.0, std::fabs(want.intercept))));
    REQUIRE(close(got.p_value, oracle::correlation_p(want.r, n), 1e-6));
    REQUIRE(got.n == n);

    // Symmetry in the arguments and invariance under positive affine maps.
    REQUIRE(close(correlate(y, x).r, got.r, 1e-12));
    std::vector<double> x2(n), y2(n);
    for (std::size_t i = 0; i < n; ++i) {
      x2[i] = 3 * x[i] + 11;
      y2[i] = 0.5 * y[i] - 4;
    }
    const auto scaled = correlate(x2, y2);
    REQUIRE(close(scaled.r, got.r, 1e-9));
    REQUIRE(close(scaled.slope, got.slope * 0.5 / 3, 1e-9 * std::max(1.0, std::fabs(got.slope))));
  }

  const auto perfect = correlate({1, 2, 3, 4}, {2, 4, 6, 8});
  CHECK(perfect.r == Approx(1.0));
  CHECK(perfect.p_value == 0.0);
  CHECK(perfect.slope == Approx(2.0));
  expect_code(ErrorCode::DegenerateInput, [] { correlate({1, 2}, {1, 2}); });
  expect_code(ErrorCode::DegenerateInput, [] { correlate({1, 2, 3}, {1, 2}); });
  expect_code(ErrorCode::DegenerateInput, [] { correlate({1, 1, 1}, {1, 2, 3}); });
  expect_code(ErrorCode::DegenerateInput, [] { correlate({1, 2, 3}, {5, 5, 5}); });

  const auto pop = popularity_correlation({0.2, 0.4, 0.6}, {30, 40, 50});
  CHECK(pop.r == Approx(1.0));
}

TEST_CASE("Student t distribution helpers") {
  CHECK(student_t_quantile(0.975, 1) == Approx(12.7062047).epsilon(1e-8));
  CHECK(student_t_quantile(0.975, 10) == Approx(2.228138852).epsilon(1e-8));
  CHECK(student_t_quantile(0.975, 30) == Approx(2.042272456).epsilon(1e-8));
  CHECK(student_t_cdf(0, 5) == Approx(0.5));
  for (double dof : {1.0, 3.0, 17.0}) {
    for (double t : {0.3, 1.7, 4.2}) {
      CHECK(student_t_cdf(t, dof) + student_t_cdf(-t, dof) == Approx(1.0).epsilon(1e-12));
      CHECK(2 * (1 - student_t_cdf(t, dof)) == Approx(oracle::t_two_sided_p(t, dof)).margin(1e-9));
    }
  }
  CHECK(incomplete_beta(2, 3, 0) == 0.0);
  CHECK(incomplete_beta(2, 3, 1) == 1.0);
  // I_x(1, 1) = x and I_x(a, 1) = x^a.
  CHECK(incomplete_beta(1, 1, 0.37) == Approx(0.37).epsilon(1e-13));
  CHECK(incomplete_beta(3, 1, 0.5) == Approx(0.125).epsilon(1e-13));
}

TEST_CASE("topic sampling is seeded and without replacement") {
  std::vector<std::string> ids;
  for (int i = 0; i < 60; ++i) ids.push_back("topic-" + std::to_string(i));
  const auto a = sample_topics(ids, 20, 7);
  CHECK(a.size() == 20);
  CHECK(std::set<std::string>(a.begin(), a.end()).size() == 20);
  auto reversed = ids;
  std::reverse(reversed.begin(), reversed.end());
  CHECK(sample_topics(reversed, 20, 7) == a);  // input order does not matter
  CHECK(sample_topics(ids, 20, 8) != a);
  CHECK(sample_topics({"x", "y"}, 20, 1).size() == 2);
}

TEST_CASE("quantile follows linear interpolation") {
  CHECK(quantile({1, 2, 3, 4}, 0.25) == Approx(1.75));
  CHECK(quantile({1, 2, 3, 4}, 0.5) == Approx(2.5));
  CHECK(quantile({5}, 0.9) == 5);
  CHECK(mean({0.1, 0.2, 0.3}) == Approx(0.2));
  expect_code(ErrorCode::EmptyGroup, [] { mean({}); });
}
