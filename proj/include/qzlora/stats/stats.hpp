#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qzlora::stats {

// Accuracies are fractions in [0, 1] throughout; percentages only appear in
// the CSV report tables. Every sum runs in index order so results do not
// depend on scheduling.

/// Mean of the per-sample accuracies of one (topic, condition).
struct TopicConditionAccuracy {
  std::string topic_id;
  std::string condition;  // label
  std::vector<double> per_sample_accuracies;
  double mean_accuracy = 0.0;
};

/// Throws EmptyGroup for an empty sample list.
TopicConditionAccuracy make_topic_accuracy(std::string topic_id, std::string condition,
                                           std::vector<double> per_sample_accuracies);

double mean(const std::vector<double>& values);
/// Linear interpolation between order statistics (the common "type 7"
/// definition): h = (n - 1) * p, value = x[floor h] + (h - floor h) * (x[floor h + 1] - x[floor h]).
double quantile(std::vector<double> values, double p);

struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double median = 0.0;
  std::optional<double> std;  // sample (n - 1) deviation; absent for n = 1
  double min = 0.0;
  double max = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
};

/// Throws EmptyGroup.
Summary summarize(const std::vector<double>& values);

/// topic_id -> condition label -> per-topic mean accuracy. Missing cells are
/// simply absent.
using AccuracyTable = std::map<std::string, std::map<std::string, double>>;

/// One Summary per listed condition over the topics that have a cell for it.
/// Throws EmptyGroup when a condition has no cells.
std::map<std::string, Summary> aggregate_condition(const AccuracyTable& table,
                                                   const std::vector<std::string>& conditions);

/// cells[i][j] = #topics where i beats j minus #topics where j beats i, over
/// topics having both cells. excluded[i][j] counts topics lacking either.
struct NetAdvantageMatrix {
  std::vector<std::string> conditions;
  std::vector<std::vector<int>> cells;
  std::vector<std::vector<int>> comparable;
  std::vector<std::vector<int>> excluded;
};

/// Throws NoComparableTopics when some pair of distinct conditions shares no
/// topic.
NetAdvantageMatrix net_advantage(const AccuracyTable& table, const std::vector<std::string>& conditions);

struct KSweepPoint {
  int k = 0;
  std::size_t n = 0;
  double mean = 0.0;
  std::optional<double> ci95_half_width;  // t-interval; absent for n = 1
};

/// k -> topic_id -> accuracy.
using KTable = std::map<int, std::map<std::string, double>>;

/// Per-k mean over `topics` (all topics of the column when empty). Throws
/// MissingKColumn when a requested k has no cell for any of them.
std::vector<KSweepPoint> k_sweep(const KTable& table, const std::vector<int>& ks = {2, 5, 10, 12, 15},
                                 const std::vector<std::string>& topics = {});

struct CorrelationResult {
  double r = 0.0;
  double r_squared = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t n = 0;
  double p_value = 1.0;  // two-sided, t with n - 2 degrees of freedom
};

/// Pearson r and least-squares fit of ys on xs. Throws DegenerateInput for
/// mismatched lengths, n < 3, or a constant series.
CorrelationResult correlate(const std::vector<double>& xs, const std::vector<double>& ys);

CorrelationResult popularity_correlation(const std::vector<double>& baseline_accuracies,
                                         const std::vector<std::uint64_t>& image_counts);

/// Regularized incomplete beta I_x(a, b), evaluated with the Lentz continued
/// fraction (the betacf recipe), switching to the symmetry
/// I_x(a, b) = 1 - I_{1-x}(b, a) when x > (a + 1) / (a + b + 2).
double incomplete_beta(double a, double b, double x);
double student_t_cdf(double t, double dof);
/// Inverse of student_t_cdf by bisection; p in (0, 1).
double student_t_quantile(double p, double dof);

/// `count` ids drawn without replacement by partial Fisher-Yates over the
/// sorted input with CounterRng(seed); the result keeps draw order.
std::vector<std::string> sample_topics(std::vector<std::string> topic_ids, std::size_t count, std::uint64_t seed);

}  // namespace qzlora::stats
