#pragma once

#include "qzlora/corpus/topic.hpp"
#include "qzlora/providers/providers.hpp"
#include "qzlora/quiz/quiz.hpp"
#include "qzlora/util/clock.hpp"
#include "qzlora/util/retry.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace qzlora::quiz {

/// One block of provider output. `question` is set when the block had a stem,
/// at least one option and an answer letter; it may still break Question
/// invariants (validate_question decides).
struct ParsedBlock {
  std::optional<Question> question;
  std::string problem;  // why the block could not be read, when question is empty
};

/// Reads the question-per-block payload:
///
///   Question: <stem>
///   A. <option>          (also "A)", "(A)", "a.", "- A:")
///   B. <option>
///   Answer: B            (also "Correct answer: (b)")
///   Attribute: color     (optional; "Focus:" accepted)
///
/// Blocks are separated by blank lines or by the next "Question" line.
/// Leading numbering ("1.", "Q1:", "Question 3:") and markdown emphasis are
/// ignored.
std::vector<ParsedBlock> parse_quiz_payload(const std::string& text);

/// Prompt templates with named placeholders {topic_summary},
/// {distractor_summaries} and {question_count}.
struct QuizPromptTemplates {
  std::string system_text;
  std::string user_template;

  static QuizPromptTemplates defaults();
  /// Reads `<dir>/quiz_system.txt` and `<dir>/quiz_user.txt`.
  static QuizPromptTemplates load(const fs::path& dir);
};

/// Replaces every "{name}" with its value; unknown placeholders stay as-is.
std::string fill_template(std::string text, const std::vector<std::pair<std::string, std::string>>& values);

struct QuizGenOptions {
  std::string model_id = "gpt-4o-2024-11-20";
  QuizPromptTemplates templates = QuizPromptTemplates::defaults();
  int max_tokens = 4096;
  double temperature = 0.0;
  int regeneration_rounds = 3;
  RetryPolicy retry;
  Clock clock = Clock::system();
  const QuizStore* store = nullptr;  // persist when set
};

inline constexpr int kDefaultQuestionCount = 10;
inline constexpr int kMaxQuestionCount = 30;

/// User prompt for one generation round.
std::string build_quiz_prompt(const QuizPromptTemplates& templates, const corpus::Topic& topic,
                              const std::vector<std::pair<std::string, std::string>>& distractor_summaries,
                              int question_count);

/// Asks the provider for `question_count` questions, then re-asks only for
/// the slots whose questions failed validation, up to `regeneration_rounds`
/// more times. Throws ProviderFailure or ValidationExhausted.
Quiz generate_quiz(const corpus::Topic& topic,
                   const std::vector<std::pair<std::string, std::string>>& distractor_summaries,
                   int question_count, providers::TextCompletionProvider& provider,
                   const QuizGenOptions& options = {});

}  // namespace qzlora::quiz
