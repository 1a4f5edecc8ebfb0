#pragma once

#include "qzlora/util/fs.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace qzlora::quiz {

enum class FocusAttribute { Texture, Material, Size, Shape, Color, Pattern, Context, Other };

std::string_view to_string(FocusAttribute a);
/// Case-insensitive; unknown text maps to Other.
FocusAttribute parse_focus_attribute(std::string_view text);

struct Question {
  std::string stem;
  std::vector<std::string> options;
  int correct_index = 0;
  FocusAttribute focus_attribute = FocusAttribute::Other;

  bool operator==(const Question&) const = default;
};

struct Quiz {
  std::string quiz_id;  // sha256 of canonical_serialize()
  std::string topic_id;
  std::vector<Question> questions;
  std::string generator_model_id;
  std::vector<std::string> distractors_used;
  std::string created_at;
};

inline constexpr std::size_t kMinOptions = 2;
inline constexpr std::size_t kMaxOptions = 6;

enum class Rule { NoQuestions, EmptyStem, OptionCount, EmptyOption, OutOfRangeCorrectIndex, DuplicateOptions };

std::string_view to_string(Rule r);

struct Violation {
  int question_index = -1;  // -1 for quiz-level rules
  Rule rule;

  bool operator==(const Violation&) const = default;
};

/// Trims and collapses internal whitespace runs to one space.
std::string normalize_text(std::string_view text);

std::vector<Violation> validate_question(const Question& q, int index);
/// Empty iff every invariant holds.
std::vector<Violation> validate_quiz(const Quiz& quiz);

/// Deterministic bytes of the quiz content (topic, model, distractors,
/// questions) with sorted keys and normalized whitespace, newline-terminated.
/// quiz_id and created_at are not part of the content. Throws InvalidQuiz.
std::string canonical_serialize(const Quiz& quiz);

std::string compute_quiz_id(const Quiz& quiz);

nlohmann::json to_json(const Quiz& quiz);
Quiz quiz_from_json(const nlohmann::json& j);

/// quizzes/<topic_id>/<quiz_id>.json
class QuizStore {
 public:
  explicit QuizStore(fs::path root) : root_(std::move(root)) {}

  fs::path path_for(const std::string& topic_id, const std::string& quiz_id) const {
    return root_ / topic_id / (quiz_id + ".json");
  }
  /// Writes the quiz (quiz_id must already be set and match its content).
  fs::path save(const Quiz& quiz) const;
  Quiz load(const std::string& topic_id, const std::string& quiz_id) const;

 private:
  fs::path root_;
};

}  // namespace qzlora::quiz
