#pragma once

#include "qzlora/error.hpp"
#include "qzlora/providers/providers.hpp"
#include "qzlora/quiz/quiz.hpp"
#include "qzlora/scoring/parse_answer.hpp"
#include "qzlora/util/clock.hpp"
#include "qzlora/util/retry.hpp"

#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace qzlora::scoring {

struct Verdict {
  int question_index = 0;
  AnswerChoice chosen_index;  // nullopt = Unparseable
  bool correct = false;

  bool operator==(const Verdict&) const = default;
};

struct ScoreRecord {
  std::string subject_id;
  std::string subject_hash;
  std::string quiz_id;
  std::string vlm_model_id;
  std::vector<Verdict> verdicts;
  double accuracy = 0.0;  // correct / |verdicts|
  std::string scored_at;

  int correct_count() const;
  bool operator==(const ScoreRecord&) const = default;
};

nlohmann::json to_json(const ScoreRecord& r);
ScoreRecord score_record_from_json(const nlohmann::json& j);

/// scores/<quiz_id>/<subject_hash>.json holds a JSON array of records, one per
/// (vlm_model_id, subject_id). Entries are only ever added.
class ScoreStore {
 public:
  explicit ScoreStore(fs::path root) : root_(std::move(root)) {}

  std::optional<ScoreRecord> lookup(const std::string& quiz_id, const std::string& subject_hash,
                                    const std::string& vlm_model_id, const std::string& subject_id) const;
  void put(const ScoreRecord& record);

  fs::path path_for(const std::string& quiz_id, const std::string& subject_hash) const {
    return root_ / quiz_id / (subject_hash + ".json");
  }

 private:
  fs::path root_;
  mutable std::mutex mutex_;
};

/// The per-question prompt. Placeholders: {stem}, {options} (one "A. text"
/// line per option) and {option_letters} ("A, B, C or D").
struct VisionPromptTemplates {
  std::string system_text;
  std::string question_template;

  static VisionPromptTemplates defaults();
  /// Reads `<dir>/vlm_system.txt` and `<dir>/vlm_question.txt`.
  static VisionPromptTemplates load(const fs::path& dir);
};

std::string build_question_prompt(const VisionPromptTemplates& templates, const quiz::Question& question);

struct ScoreOptions {
  std::string model_id = "gpt-4o-2024-11-20";
  VisionPromptTemplates templates = VisionPromptTemplates::defaults();
  RetryPolicy retry;
  Clock clock = Clock::system();
  ScoreStore* store = nullptr;  // cache and persist when set
};

/// One provider call per question, in stored order, image attached each time.
/// Throws UndecodableImage, or ProviderFailure when a question keeps failing
/// (nothing is cached in that case).
ScoreRecord score_image(const std::string& subject_id, const Bytes& image_bytes, const quiz::Quiz& quiz,
                        providers::VisionProvider& provider, const ScoreOptions& options = {});

struct SubjectRef {
  std::string subject_id;
  fs::path path;               // read when bytes is empty
  std::optional<Bytes> bytes;  // in-memory subjects
};

struct BatchEntry {
  std::string subject_id;
  std::optional<ScoreRecord> record;
  std::optional<ErrorCode> error;
  std::string error_message;
  bool from_cache = false;
};

/// Scores subjects with up to `parallelism` in flight. Output follows input
/// order; per-subject failures are reported in place.
std::vector<BatchEntry> score_batch(const std::vector<SubjectRef>& subjects, const quiz::Quiz& quiz,
                                    providers::VisionProvider& provider, const ScoreOptions& options,
                                    std::size_t parallelism);

}  // namespace qzlora::scoring
