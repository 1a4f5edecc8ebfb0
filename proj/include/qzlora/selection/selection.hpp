#pragma once

#include "qzlora/corpus/store.hpp"
#include "qzlora/scoring/scorer.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qzlora::selection {

enum class ConditionKind { NoLoRA, LoRARandomK, QZLoRATopK, RealRandomK, RealTopK };
enum class Style { Realistic, Illustration };

std::string_view to_string(Style s);
Style parse_style(std::string_view text);

/// One experimental setting. Labels look like "qzlora-top-15/realistic",
/// "lora-random-15/realistic", "real-top-5/realistic", "no-lora/illustration".
struct Condition {
  ConditionKind kind = ConditionKind::NoLoRA;
  int k = 0;
  Style style = Style::Realistic;

  /// Throws InvalidCondition unless (kind == NoLoRA) == (k == 0) and k >= 0.
  static Condition make(ConditionKind kind, int k, Style style = Style::Realistic);
  static Condition parse(std::string_view label);

  std::string label() const;
  /// Label without the style: the part shared by styles ("qzlora-top-15").
  std::string selection_key() const;
  /// Filesystem-safe label ("qzlora-top-15.realistic").
  std::string file_stem() const;

  bool uses_lora() const { return kind == ConditionKind::LoRARandomK || kind == ConditionKind::QZLoRATopK; }
  bool is_real() const { return kind == ConditionKind::RealRandomK || kind == ConditionKind::RealTopK; }
  bool is_generated() const { return !is_real(); }
  bool is_random() const { return kind == ConditionKind::LoRARandomK || kind == ConditionKind::RealRandomK; }
  bool is_top() const { return kind == ConditionKind::QZLoRATopK || kind == ConditionKind::RealTopK; }

  bool operator==(const Condition&) const = default;
};

struct RankedSubject {
  std::string subject_id;
  double accuracy = 0.0;

  bool operator==(const RankedSubject&) const = default;
};

/// Descending accuracy, ties by ascending subject_id. Throws MixedQuiz when
/// records disagree on quiz_id or vlm_model_id or repeat a subject.
std::vector<RankedSubject> rank(const std::vector<scoring::ScoreRecord>& records);

struct SelectionSet {
  std::string topic_id;
  Condition condition;
  std::vector<std::string> image_ids;
  std::optional<std::uint64_t> seed;         // random kinds
  std::optional<std::string> source_quiz_id;  // top-k kinds
  bool short_set = false;                      // fewer candidates than k
};

nlohmann::json to_json(const SelectionSet& s);
SelectionSet selection_from_json(const nlohmann::json& j);

/// First min(k, |ranking|) subjects. Throws EmptyRanking, or
/// std::invalid_argument for k < 1.
SelectionSet select_top_k(const std::vector<RankedSubject>& ranking, int k);

/// Uniform sample without replacement from the non-corrupt candidates (in
/// fetch_index order) by a partial Fisher-Yates shuffle driven by
/// CounterRng(seed): step i swaps position i with i + bounded(n - i).
/// Throws EmptyCorpus.
SelectionSet select_random_k(const std::vector<corpus::CandidateImage>& corpus, int k, std::uint64_t seed);

/// Seed of a random condition: first 8 digest bytes of
/// "<base_seed>|<topic_id>|<selection_key>".
std::uint64_t derive_selection_seed(std::uint64_t base_seed, const std::string& topic_id,
                                    const std::string& selection_key);

/// selections/<topic_id>/<condition file stem>.json
class SelectionStore {
 public:
  explicit SelectionStore(fs::path root) : root_(std::move(root)) {}

  fs::path path_for(const std::string& topic_id, const Condition& c) const {
    return root_ / topic_id / (c.file_stem() + ".json");
  }
  fs::path save(const SelectionSet& s) const;
  SelectionSet load(const std::string& topic_id, const Condition& c) const;

 private:
  fs::path root_;
};

}  // namespace qzlora::selection
