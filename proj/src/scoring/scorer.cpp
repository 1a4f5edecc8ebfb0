#include "qzlora/scoring/scorer.hpp"

#include "qzlora/quiz/generate.hpp"
#include "qzlora/util/image_info.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

namespace qzlora::scoring {

int ScoreRecord::correct_count() const {
  return static_cast<int>(std::count_if(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.correct; }));
}

nlohmann::json to_json(const ScoreRecord& r) {
  nlohmann::json verdicts = nlohmann::json::array();
  for (const auto& v : r.verdicts) {
    verdicts.push_back({{"question_index", v.question_index},
                        {"chosen_index", v.chosen_index ? nlohmann::json(*v.chosen_index) : nlohmann::json(nullptr)},
                        {"correct", v.correct}});
  }
  return nlohmann::json{{"subject_id", r.subject_id},     {"subject_hash", r.subject_hash},
                        {"quiz_id", r.quiz_id},           {"vlm_model_id", r.vlm_model_id},
                        {"verdicts", verdicts},           {"accuracy", r.accuracy},
                        {"scored_at", r.scored_at}};
}

ScoreRecord score_record_from_json(const nlohmann::json& j) {
  ScoreRecord r;
  r.subject_id = j.at("subject_id").get<std::string>();
  r.subject_hash = j.at("subject_hash").get<std::string>();
  r.quiz_id = j.at("quiz_id").get<std::string>();
  r.vlm_model_id = j.at("vlm_model_id").get<std::string>();
  for (const auto& v : j.at("verdicts")) {
    Verdict verdict;
    verdict.question_index = v.at("question_index").get<int>();
    if (!v.at("chosen_index").is_null()) verdict.chosen_index = v.at("chosen_index").get<int>();
    verdict.correct = v.at("correct").get<bool>();
    r.verdicts.push_back(verdict);
  }
  r.accuracy = j.at("accuracy").get<double>();
  r.scored_at = j.value("scored_at", "");
  return r;
}

std::optional<ScoreRecord> ScoreStore::lookup(const std::string& quiz_id, const std::string& subject_hash,
                                              const std::string& vlm_model_id, const std::string& subject_id) const {
  std::lock_guard lock(mutex_);
  const fs::path path = path_for(quiz_id, subject_hash);
  if (!fs::exists(path)) return std::nullopt;
  for (const auto& item : read_json(path)) {
    if (item.at("vlm_model_id") == vlm_model_id && item.at("subject_id") == subject_id) {
      return score_record_from_json(item);
    }
  }
  return std::nullopt;
}

void ScoreStore::put(const ScoreRecord& record) {
  std::lock_guard lock(mutex_);
  const fs::path path = path_for(record.quiz_id, record.subject_hash);
  nlohmann::json entries = fs::exists(path) ? read_json(path) : nlohmann::json::array();
  for (const auto& item : entries) {
    // Same key means same value for a deterministic provider; keep the first.
    if (item.at("vlm_model_id") == record.vlm_model_id && item.at("subject_id") == record.subject_id) return;
  }
  entries.push_back(to_json(record));
  std::sort(entries.begin(), entries.end(), [](const nlohmann::json& a, const nlohmann::json& b) {
    return std::tie(a.at("vlm_model_id").get_ref<const std::string&>(), a.at("subject_id").get_ref<const std::string&>()) <
           std::tie(b.at("vlm_model_id").get_ref<const std::string&>(), b.at("subject_id").get_ref<const std::string&>());
  });
  atomic_write(path, pretty_json(entries));
}

VisionPromptTemplates VisionPromptTemplates::defaults() {
  return {"You are shown one picture and asked a multiple-choice question about the subject it depicts. "
          "Use what you can see in the picture. Reply with the letter of the single best option.",
          "{stem}\n\n{options}\n\nAnswer with the letter of the correct option ({option_letters}).\n"};
}

VisionPromptTemplates VisionPromptTemplates::load(const fs::path& dir) {
  const fs::path system = dir / "vlm_system.txt";
  const fs::path question = dir / "vlm_question.txt";
  if (!fs::exists(system) || !fs::exists(question)) {
    throw Error(ErrorCode::ConfigError, "vision templates missing in " + dir.string());
  }
  VisionPromptTemplates t{read_file(system), read_file(question)};
  while (!t.system_text.empty() && t.system_text.back() == '\n') t.system_text.pop_back();
  return t;
}

std::string build_question_prompt(const VisionPromptTemplates& templates, const quiz::Question& question) {
  std::string options;
  std::string letters;
  const std::size_t n = question.options.size();
  for (std::size_t i = 0; i < n; ++i) {
    const char letter = char('A' + i);
    options += std::string(1, letter) + ". " + quiz::normalize_text(question.options[i]) + "\n";
    if (i > 0) letters += (i + 1 == n) ? " or " : ", ";
    letters.push_back(letter);
  }
  if (!options.empty()) options.pop_back();
  return quiz::fill_template(templates.question_template, {{"stem", quiz::normalize_text(question.stem)},
                                                           {"options", options},
                                                           {"option_letters", letters}});
}

ScoreRecord score_image(const std::string& subject_id, const Bytes& image_bytes, const quiz::Quiz& quiz,
                        providers::VisionProvider& provider, const ScoreOptions& options) {
  const auto info = sniff_image(image_bytes);
  if (!info) throw Error(ErrorCode::UndecodableImage, subject_id);

  ScoreRecord record;
  record.subject_id = subject_id;
  record.subject_hash = sha256_hex(image_bytes);
  record.quiz_id = quiz.quiz_id;
  record.vlm_model_id = options.model_id;

  for (std::size_t qi = 0; qi < quiz.questions.size(); ++qi) {
    const quiz::Question& question = quiz.questions[qi];
    providers::VisionRequest request{options.model_id, options.templates.system_text,
                                     build_question_prompt(options.templates, question), image_bytes,
                                     std::string(media_type(info->format))};
    providers::VisionResponse response;
    try {
      response = with_retry(options.retry, [&] { return provider.ask(request); });
    } catch (const std::exception& e) {
      throw Error(ErrorCode::ProviderFailure,
                  subject_id + " question " + std::to_string(qi) + ": " + e.what());
    }
    Verdict verdict;
    verdict.question_index = static_cast<int>(qi);
    verdict.chosen_index = parse_answer(response.text, static_cast<int>(question.options.size()));
    verdict.correct = verdict.chosen_index && *verdict.chosen_index == question.correct_index;
    record.verdicts.push_back(verdict);
  }
  record.accuracy = record.verdicts.empty() ? 0.0
                                            : static_cast<double>(record.correct_count()) /
                                                  static_cast<double>(record.verdicts.size());
  record.scored_at = options.clock.now();
  if (options.store) options.store->put(record);
  return record;
}

std::vector<BatchEntry> score_batch(const std::vector<SubjectRef>& subjects, const quiz::Quiz& quiz,
                                    providers::VisionProvider& provider, const ScoreOptions& options,
                                    std::size_t parallelism) {
  std::vector<BatchEntry> results(subjects.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < subjects.size(); i = next.fetch_add(1)) {
      const SubjectRef& subject = subjects[i];
      BatchEntry& entry = results[i];
      entry.subject_id = subject.subject_id;
      try {
        const Bytes bytes = subject.bytes ? *subject.bytes : read_file(subject.path);
        if (options.store) {
          if (auto cached = options.store->lookup(quiz.quiz_id, sha256_hex(bytes), options.model_id, subject.subject_id)) {
            entry.record = std::move(cached);
            entry.from_cache = true;
            continue;
          }
        }
        entry.record = score_image(subject.subject_id, bytes, quiz, provider, options);
      } catch (const Error& e) {
        entry.error = e.code();
        entry.error_message = e.what();
      } catch (const std::exception& e) {
        entry.error = ErrorCode::StoreError;
        entry.error_message = e.what();
      }
    }
  };

  const std::size_t threads = std::clamp<std::size_t>(parallelism, 1, std::max<std::size_t>(1, subjects.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return results;
}

}  // namespace qzlora::scoring
