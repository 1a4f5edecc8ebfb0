#pragma once

#include "qzlora/selection/selection.hpp"
#include "qzlora/stats/stats.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qzlora::pipeline {

/// Scores of the images standing for one (topic, condition): generated
/// samples, or the selected real images for real-image conditions.
struct EvaluationRecord {
  std::string topic_id;
  std::string condition;  // label
  std::string quiz_id;
  std::vector<std::pair<std::string, double>> samples;  // subject_id, accuracy
  double mean_accuracy = 0.0;
  /// Mean score of the real images the condition was built from (training
  /// set for LoRA conditions); absent for no-LoRA.
  std::optional<double> input_mean_accuracy;

  std::vector<double> per_sample_accuracies() const;
};

nlohmann::json to_json(const EvaluationRecord& e);
EvaluationRecord evaluation_from_json(const nlohmann::json& j);

struct ReportInputs {
  std::vector<std::string> topics;
  std::vector<selection::Condition> conditions;  // compared set, in config order
  std::vector<int> ks;
  std::vector<std::string> sweep_topics;  // in draw order
  std::uint64_t seed = 0;
  std::map<std::string, std::map<std::string, EvaluationRecord>> evaluations;  // topic -> label -> record
  std::map<std::string, std::uint64_t> available_counts;                     // topic -> listing size
};

/// The document written to report/stats.json. Accuracies are fractions.
/// An analysis that cannot be computed carries {"error": "..."} instead of
/// numbers.
nlohmann::json build_stats(const ReportInputs& inputs);

/// Writes stats.json plus boxplot.csv, net_advantage.csv, k_sweep.csv,
/// correlations.csv and per_topic.csv (percent columns) into `dir`.
/// Returns the written paths.
std::vector<fs::path> write_report(const fs::path& dir, const ReportInputs& inputs);

/// Label of the k-sweep column for k.
std::string sweep_label(int k);

}  // namespace qzlora::pipeline
